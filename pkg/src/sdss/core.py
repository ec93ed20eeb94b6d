"""Shared value types: label maps, confidence data, class mappings, configuration.

Label values are stored unsigned; the ignore sentinel is the maximum value of
the storage width (255 for 8-bit maps, 65535 for 16-bit). A map uses 8-bit
storage whenever its class count fits (K <= 254), 16-bit otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ClassCountMismatch, ConfigError, DimensionMismatch, UnmappedLabel

IGNORE8 = 255
IGNORE16 = 65535

MAX_CLASSES_8BIT = 254
MAX_CLASSES_16BIT = 65534

PROB_SUM_TOLERANCE = 1e-3


def label_dtype(num_classes: int) -> np.dtype:
    """Storage width for a given class count."""
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    if num_classes <= MAX_CLASSES_8BIT:
        return np.dtype(np.uint8)
    if num_classes <= MAX_CLASSES_16BIT:
        return np.dtype(np.uint16)
    raise ValueError(f"num_classes {num_classes} exceeds 16-bit label storage")


def ignore_value(dtype: np.dtype) -> int:
    return int(np.iinfo(dtype).max)


def _frozen(data, dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass
class LabelMap:
    """H x W grid of class indices with an ignore sentinel.

    Construction checks shape and dtype only; value-range conformance is
    checked by :func:`validate` (loaders reject out-of-range values
    themselves, but a map under inspection must still be representable).
    """

    data: np.ndarray
    num_classes: int

    def __post_init__(self):
        dt = label_dtype(self.num_classes)
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise DimensionMismatch(f"label data must be 2-D (H, W), got shape {arr.shape}")
        self.data = _frozen(arr, dt)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def ignore(self) -> int:
        return ignore_value(self.data.dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.data, other.data)


@dataclass
class ProbVolume:
    """Per-pixel class probabilities, K planes in row-major order.

    Entries must lie in [0, 1]. When ``normalized`` is set, per-pixel sums
    must be within ``PROB_SUM_TOLERANCE`` of 1.
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise DimensionMismatch(f"probability data must be 3-D (K, H, W), got shape {arr.shape}")
        if arr.size and not (np.isfinite(arr).all() and float(arr.min()) >= 0.0 and float(arr.max()) <= 1.0):
            raise ValueError("probability entries must lie in [0, 1]")
        if self.normalized and arr.size:
            sums = arr.sum(axis=0, dtype=np.float64)
            err = float(np.abs(sums - 1.0).max())
            if err > PROB_SUM_TOLERANCE:
                raise ValueError(f"normalized volume has per-pixel sum off by {err:.3g}")
        self.data = _frozen(arr, np.float32)

    @property
    def num_classes(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class ConfPair:
    """Compact prediction: per-pixel argmax class plus its confidence."""

    argmax: LabelMap
    confidence: np.ndarray

    def __post_init__(self):
        conf = np.asarray(self.confidence, dtype=np.float32)
        if conf.shape != self.argmax.data.shape:
            raise DimensionMismatch(
                f"confidence shape {conf.shape} != argmax shape {self.argmax.data.shape}"
            )
        if conf.size and not (np.isfinite(conf).all() and float(conf.min()) >= 0.0 and float(conf.max()) <= 1.0):
            raise ValueError("confidence entries must lie in [0, 1]")
        self.confidence = _frozen(conf, np.float32)

    @property
    def num_classes(self) -> int:
        return self.argmax.num_classes


def compress(pred: ProbVolume) -> ConfPair:
    """Collapse a probability volume to its argmax map and max confidence.

    Argmax ties break to the lowest class index.
    """
    arg = np.argmax(pred.data, axis=0)
    conf = np.max(pred.data, axis=0)
    return ConfPair(LabelMap(arg, pred.num_classes), conf)


@dataclass
class ClassMapping:
    """Raw dataset label id -> training class id (or ignore)."""

    name: str
    num_classes: int
    table: dict[int, int]
    class_names: list[str] | None = None

    def __post_init__(self):
        ign = ignore_value(label_dtype(self.num_classes))
        for raw, mapped in self.table.items():
            if mapped != ign and not (0 <= mapped < self.num_classes):
                raise ValueError(f"mapping {self.name!r}: raw id {raw} maps to invalid class {mapped}")

    @property
    def ignore(self) -> int:
        return ignore_value(label_dtype(self.num_classes))

    @classmethod
    def identity(cls, num_classes: int, name: str = "identity") -> "ClassMapping":
        return cls(name=name, num_classes=num_classes, table={k: k for k in range(num_classes)})

    @classmethod
    def from_json(cls, path: str | Path) -> "ClassMapping":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        try:
            num_classes = int(doc["num_classes"])
            ign = ignore_value(label_dtype(num_classes))
            table = {}
            for raw, mapped in doc["table"].items():
                table[int(raw)] = ign if mapped == "ignore" else int(mapped)
            return cls(
                name=str(doc["name"]),
                num_classes=num_classes,
                table=table,
                class_names=list(doc["class_names"]) if "class_names" in doc else None,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad class mapping document {path}: {e}") from e

    def to_json(self, path: str | Path) -> None:
        doc: dict = {"name": self.name, "num_classes": self.num_classes}
        if self.class_names is not None:
            doc["class_names"] = self.class_names
        doc["table"] = {
            str(raw): ("ignore" if mapped == self.ignore else mapped)
            for raw, mapped in sorted(self.table.items())
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def remap_labels(raw: LabelMap, mapping: ClassMapping) -> LabelMap:
    """Apply a class mapping table to every pixel.

    Raw pixels equal to the raw map's own ignore sentinel pass through to
    ignore; any other value missing from the table raises UnmappedLabel.
    """
    raw_ign = raw.ignore
    out_ign = mapping.ignore
    lut_size = int(np.iinfo(raw.data.dtype).max) + 1
    lut = np.full(lut_size, -1, dtype=np.int64)
    for raw_id, mapped in mapping.table.items():
        if 0 <= raw_id < lut_size:
            lut[raw_id] = mapped
    if lut[raw_ign] < 0:
        lut[raw_ign] = out_ign

    mapped = lut[raw.data.astype(np.int64)]
    bad = mapped < 0
    if bad.any():
        flat = int(np.flatnonzero(bad)[0])
        raise UnmappedLabel(int(raw.data.reshape(-1)[flat]), flat)
    return LabelMap(mapped, mapping.num_classes)


@dataclass
class Finding:
    pixel_index: int
    value: int


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings


def validate(label_map: LabelMap) -> ValidationReport:
    """Report every pixel whose value is neither a valid class nor ignore."""
    flat = label_map.data.reshape(-1)
    bad = (flat >= label_map.num_classes) & (flat != label_map.ignore)
    idx = np.flatnonzero(bad)
    return ValidationReport([Finding(int(i), int(flat[i])) for i in idx])


THRESHOLD = "threshold"
TOP_PERCENT = "top_percent"

DEFAULT_TAU_SSL = 0.1


@dataclass
class SamplingConfig:
    """Pipeline knobs: confidence threshold, selection regime, bookkeeping.

    Exactly one of ``tau_c`` / ``top_percent`` is active, per
    ``selection_mode``.
    """

    tau_ssl: float = DEFAULT_TAU_SSL
    selection_mode: str = THRESHOLD
    tau_c: float | None = 0.3
    top_percent: float | None = None
    ignore_in_total: bool = True
    class_mapping: str | None = None
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.tau_ssl <= 1.0):
            raise ConfigError(f"tau_ssl must be in [0, 1], got {self.tau_ssl}")
        if self.selection_mode not in (THRESHOLD, TOP_PERCENT):
            raise ConfigError(f"unknown selection_mode {self.selection_mode!r}")
        if self.selection_mode == THRESHOLD:
            if self.tau_c is None or self.top_percent is not None:
                raise ConfigError("threshold mode requires tau_c and forbids top_percent")
            if self.tau_c < 0:
                raise ConfigError(f"tau_c must be >= 0, got {self.tau_c}")
        else:
            if self.top_percent is None or self.tau_c is not None:
                raise ConfigError("top_percent mode requires top_percent and forbids tau_c")
            if not (0.0 < self.top_percent <= 100.0):
                raise ConfigError(f"top_percent must be in (0, 100], got {self.top_percent}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SamplingConfig":
        known = {"tau_ssl", "selection_mode", "tau_c", "top_percent", "ignore_in_total", "class_mapping", "seed"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        if "selection_mode" not in kwargs:
            # infer from whichever cut parameter is present
            if kwargs.get("top_percent") is not None:
                kwargs["selection_mode"] = TOP_PERCENT
            else:
                kwargs["selection_mode"] = THRESHOLD
        if kwargs["selection_mode"] == TOP_PERCENT:
            kwargs.setdefault("tau_c", None)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "SamplingConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "tau_ssl": self.tau_ssl,
            "selection_mode": self.selection_mode,
            "tau_c": self.tau_c,
            "top_percent": self.top_percent,
            "ignore_in_total": self.ignore_in_total,
            "class_mapping": self.class_mapping,
            "seed": self.seed,
        }


def require_same_grid(a: LabelMap, b: LabelMap) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"label maps differ in size: {a.data.shape} vs {b.data.shape}")
    if a.num_classes != b.num_classes:
        raise ClassCountMismatch(f"label maps differ in class count: {a.num_classes} vs {b.num_classes}")
