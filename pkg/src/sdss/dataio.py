"""On-disk formats: label PNGs, PRB1 probability volumes, JSONL manifests, layouts.

PRB1 layout: magic ``PRB1`` | u32 K | u32 H | u32 W | u8 flags (bit0 =
normalized) | little-endian f32 data, class-major then row-major | u32
CRC32 of the data section. All integers little-endian.

Manifest files are JSONL: a header object
``{"format": "sdss-manifest", "version": 1, "config": {...}}`` followed by
one record object per line. Scores round-trip at full precision (shortest
repr).
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import ClassMapping, ConfPair, LabelMap, ProbVolume, ignore_value, label_dtype, remap_labels
from .errors import (
    BadImage,
    BadMagic,
    ChecksumMismatch,
    ClassOutOfRange,
    ConfigError,
    DuplicateId,
    MalformedLine,
    StrictAbort,
    TruncatedFile,
    UnsupportedBitDepth,
)

MANIFEST_FORMAT = "sdss-manifest"
MANIFEST_VERSION = 1

_PRB1_MAGIC = b"PRB1"
_PRB1_HEADER = struct.Struct("<4sIIIB")

_LABEL_MODES_8 = {"L", "P"}
_LABEL_MODES_16 = {"I;16", "I"}


def load_label_png(path: str | Path, num_classes: int | None = None) -> LabelMap:
    """Decode a single-channel 8/16-bit PNG into a label map.

    The file's maximum representable value decodes to ignore. With
    ``num_classes`` given, any other value >= num_classes raises
    ClassOutOfRange; otherwise the class count is inferred from the data.
    """
    try:
        img = Image.open(path)
        img.load()
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise BadImage(f"cannot read label image {path}: {e}") from e

    if img.mode in _LABEL_MODES_8:
        raw = np.asarray(img, dtype=np.uint16)
        file_ignore = 255
    elif img.mode in _LABEL_MODES_16:
        raw = np.asarray(img)
        if raw.size and (raw.min() < 0 or raw.max() > 65535):
            raise UnsupportedBitDepth(f"{path}: values exceed 16-bit range (mode {img.mode})")
        raw = raw.astype(np.uint16)
        file_ignore = 65535
    else:
        raise UnsupportedBitDepth(f"{path}: unsupported mode {img.mode}, expected 8/16-bit grayscale")
    if raw.ndim != 2:
        raise UnsupportedBitDepth(f"{path}: expected a single channel, got shape {raw.shape}")

    is_ignore = raw == file_ignore
    if num_classes is None:
        valid = raw[~is_ignore]
        num_classes = int(valid.max()) + 1 if valid.size else 1
    else:
        bad = (~is_ignore) & (raw >= num_classes)
        if bad.any():
            flat = int(np.flatnonzero(bad.reshape(-1))[0])
            raise ClassOutOfRange(int(raw.reshape(-1)[flat]), num_classes, flat)

    out_ignore = ignore_value(label_dtype(num_classes))
    data = np.where(is_ignore, out_ignore, raw)
    return LabelMap(data, num_classes)


def save_label_png(label_map: LabelMap, path: str | Path) -> None:
    """Write a label map as an 8- or 16-bit grayscale PNG (width follows storage)."""
    # fromarray infers L for uint8 and I;16 for uint16
    img = Image.fromarray(np.asarray(label_map.data))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PNG")


def save_prob_volume(vol: ProbVolume, path: str | Path) -> None:
    data = np.ascontiguousarray(vol.data, dtype="<f4").tobytes()
    header = _PRB1_HEADER.pack(_PRB1_MAGIC, vol.num_classes, vol.height, vol.width, 1 if vol.normalized else 0)
    crc = zlib.crc32(data) & 0xFFFFFFFF
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(data)
        f.write(struct.pack("<I", crc))


def load_prob_volume(path: str | Path) -> ProbVolume:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _PRB1_HEADER.size:
        raise TruncatedFile(f"{path}: shorter than the fixed header")
    magic, k, h, w, flags = _PRB1_HEADER.unpack_from(blob, 0)
    if magic != _PRB1_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r} != {_PRB1_MAGIC!r}")
    data_len = k * h * w * 4
    expected = _PRB1_HEADER.size + data_len + 4
    if len(blob) != expected:
        raise TruncatedFile(f"{path}: {len(blob)} bytes, expected {expected}")
    data = blob[_PRB1_HEADER.size : _PRB1_HEADER.size + data_len]
    (stored_crc,) = struct.unpack_from("<I", blob, _PRB1_HEADER.size + data_len)
    if zlib.crc32(data) & 0xFFFFFFFF != stored_crc:
        raise ChecksumMismatch(f"{path}: data CRC32 does not match stored checksum")
    arr = np.frombuffer(data, dtype="<f4").reshape(k, h, w)
    return ProbVolume(arr, normalized=bool(flags & 1))


def save_conf_pair(pair: ConfPair, argmax_path: str | Path, conf_path: str | Path) -> None:
    """Compact prediction on disk: argmax label PNG + K=1 PRB1 confidence plane."""
    save_label_png(pair.argmax, argmax_path)
    save_prob_volume(ProbVolume(pair.confidence[None, :, :], normalized=False), conf_path)


def load_conf_pair(argmax_path: str | Path, conf_path: str | Path, num_classes: int) -> ConfPair:
    argmax = load_label_png(argmax_path, num_classes)
    conf_vol = load_prob_volume(conf_path)
    if conf_vol.num_classes != 1:
        raise BadImage(f"{conf_path}: confidence volume must have K=1, got {conf_vol.num_classes}")
    return ConfPair(argmax, conf_vol.data[0])


def _record_to_obj(r) -> dict:
    return {
        "id": r.image_id,
        "score": r.score,
        "n_image": r.n_image,
        "n_class": {str(k): v for k, v in sorted(r.n_class.items())},
        "n_correct": {str(k): v for k, v in sorted(r.n_correct.items())},
        "paths": dict(r.paths),
    }


def write_manifest(manifest, path: str | Path) -> None:
    from .selection import Manifest  # local import to avoid a cycle

    assert isinstance(manifest, Manifest)
    header = {"format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "config": manifest.provenance}
    lines = [json.dumps(header, separators=(",", ":"))]
    lines.extend(json.dumps(_record_to_obj(r), separators=(",", ":")) for r in manifest.records)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: str | Path):
    from .selection import Manifest, ScoredRecord

    records: list[ScoredRecord] = []
    provenance: dict = {}
    header_seen = False
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedLine(line_no, f"invalid JSON: {e}") from e
            if line_no == 1:
                if not isinstance(obj, dict) or obj.get("format") != MANIFEST_FORMAT:
                    raise MalformedLine(line_no, "missing sdss-manifest header")
                if obj.get("version") != MANIFEST_VERSION:
                    raise MalformedLine(line_no, f"unsupported manifest version {obj.get('version')}")
                provenance = obj.get("config", {})
                header_seen = True
                continue
            try:
                rec = ScoredRecord(
                    image_id=str(obj["id"]),
                    score=float(obj["score"]),
                    n_image=int(obj["n_image"]),
                    n_class={int(k): int(v) for k, v in obj.get("n_class", {}).items()},
                    n_correct={int(k): int(v) for k, v in obj.get("n_correct", {}).items()},
                    paths=dict(obj.get("paths", {})),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise MalformedLine(line_no, f"bad record: {e}") from e
            if rec.image_id in seen:
                raise DuplicateId(rec.image_id)
            seen.add(rec.image_id)
            records.append(rec)
    if not header_seen:
        raise MalformedLine(1, "empty file: manifest requires a header line")
    return Manifest(records, provenance)


@dataclass
class LayoutEntry:
    image_id: str
    gt: str
    pred: Union[str, dict, None]  # PRB1 path, {"argmax":..., "conf":...}, or absent


@dataclass
class DatasetLayout:
    """Enumeration of a dataset: image ids with their GT and prediction files."""

    root: Path
    entries: list[LayoutEntry]
    num_classes: int | None = None
    mapping: str | None = None

    def __post_init__(self):
        self.root = Path(self.root)
        seen = set()
        for e in self.entries:
            if e.image_id in seen:
                raise DuplicateId(e.image_id)
            seen.add(e.image_id)
        self.entries = sorted(self.entries, key=lambda e: e.image_id)

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.root / p

    @classmethod
    def from_json(cls, path: str | Path) -> "DatasetLayout":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read layout {path}: {e}") from e
        try:
            root = Path(doc["root"])
            if not root.is_absolute():
                root = path.parent / root
            entries = [
                LayoutEntry(image_id=str(e["id"]), gt=str(e["gt"]), pred=e.get("pred"))
                for e in doc["entries"]
            ]
        except (KeyError, TypeError) as e:
            raise ConfigError(f"bad layout document {path}: {e}") from e
        nc = doc.get("num_classes")
        return cls(root=root, entries=entries, num_classes=int(nc) if nc is not None else None, mapping=doc.get("mapping"))

    def to_json(self, path: str | Path) -> None:
        doc: dict = {"root": str(self.root)}
        if self.num_classes is not None:
            doc["num_classes"] = self.num_classes
        if self.mapping is not None:
            doc["mapping"] = self.mapping
        doc["entries"] = [
            {"id": e.image_id, "gt": e.gt, **({"pred": e.pred} if e.pred is not None else {})}
            for e in self.entries
        ]
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


@dataclass
class StreamEntry:
    image_id: str
    gt: LabelMap | None = None
    pred: Union[ProbVolume, ConfPair, None] = None
    error: Exception | None = None


def load_entry(layout: DatasetLayout, entry: LayoutEntry, mapping: ClassMapping | None = None) -> StreamEntry:
    """Load one layout entry; per-entry failures come back in ``error``."""
    try:
        pred: Union[ProbVolume, ConfPair, None] = None
        num_classes = mapping.num_classes if mapping else layout.num_classes
        if entry.pred is not None:
            if isinstance(entry.pred, str):
                pred = load_prob_volume(layout.resolve(entry.pred))
                if num_classes is None:
                    num_classes = pred.num_classes
            elif isinstance(entry.pred, dict) and {"argmax", "conf"} <= set(entry.pred):
                if num_classes is None:
                    raise ConfigError("compact predictions require num_classes in the layout or a mapping")
                pred = load_conf_pair(
                    layout.resolve(entry.pred["argmax"]), layout.resolve(entry.pred["conf"]), num_classes
                )
            else:
                raise ConfigError(f"entry {entry.image_id}: unrecognised pred reference {entry.pred!r}")
        if mapping is not None:
            gt = load_label_png(layout.resolve(entry.gt))
            gt = remap_labels(gt, mapping)
        else:
            gt = load_label_png(layout.resolve(entry.gt), num_classes)
        return StreamEntry(entry.image_id, gt=gt, pred=pred)
    except Exception as e:  # noqa: BLE001 - surfaced per entry by contract
        return StreamEntry(entry.image_id, error=e)


def stream_dataset(
    layout: DatasetLayout,
    mapping: ClassMapping | None = None,
    strict: bool = False,
) -> Iterator[StreamEntry]:
    """Yield entries in ascending image-id order.

    Load failures yield an entry whose ``error`` is set; under ``strict``
    the first failure raises StrictAbort instead.
    """
    for entry in layout.entries:
        item = load_entry(layout, entry, mapping)
        if item.error is not None and strict:
            raise StrictAbort(f"entry {entry.image_id}: {item.error}") from item.error
        yield item
