"""Synthetic ground truth and a controllable mock predictor.

Scenes are built by ranking a Gaussian-smoothed noise field and slicing the
ranks into per-class bands, which yields contiguous blobs whose realized
areas match the requested fractions to the pixel. All randomness comes from
an explicitly seeded PCG64 generator; the algorithm name is recorded in
dataset provenance so fixtures can be regenerated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import LabelMap, ProbVolume, ignore_value, label_dtype
from .errors import InfeasibleSpec

RNG_ALGORITHM = "pcg64"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class SceneSpec:
    width: int
    height: int
    num_classes: int
    area_fractions: Sequence[float]
    granularity: float = 256.0  # expected blob size, pixels
    ignore_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.area_fractions = list(float(f) for f in self.area_fractions)
        if self.width < 1 or self.height < 1:
            raise InfeasibleSpec(f"empty scene {self.width}x{self.height}")
        if len(self.area_fractions) != self.num_classes:
            raise InfeasibleSpec(
                f"{len(self.area_fractions)} area fractions for {self.num_classes} classes"
            )
        if any(f < 0 for f in self.area_fractions) or self.ignore_fraction < 0:
            raise InfeasibleSpec("area fractions must be non-negative")
        total = sum(self.area_fractions) + self.ignore_fraction
        if abs(total - 1.0) > 1e-9:
            raise InfeasibleSpec(f"fractions sum to {total}, expected 1")
        if not (1.0 <= self.granularity <= self.width * self.height):
            raise InfeasibleSpec(f"blob size {self.granularity} outside [1, image area]")


def _band_counts(fractions: Sequence[float], total: int) -> list[int]:
    # largest-remainder rounding; deterministic tie-break by band index
    ideal = [f * total for f in fractions]
    base = [int(np.floor(x)) for x in ideal]
    remainder = total - sum(base)
    parts = sorted(range(len(ideal)), key=lambda i: (-(ideal[i] - base[i]), i))
    for i in parts[:remainder]:
        base[i] += 1
    return base


def gen_label_map(spec: SceneSpec) -> LabelMap:
    """Generate a blobby label map whose class areas match the spec exactly."""
    rng = _rng(spec.seed)
    noise = rng.standard_normal((spec.height, spec.width))
    sigma = max(0.5, float(np.sqrt(spec.granularity)) / 2.0)
    smooth = ndimage.gaussian_filter(noise, sigma=sigma)

    order = np.argsort(smooth, axis=None, kind="stable")
    counts = _band_counts(list(spec.area_fractions) + [spec.ignore_fraction], order.size)

    ign = ignore_value(label_dtype(spec.num_classes))
    flat = np.empty(order.size, dtype=np.int64)
    start = 0
    for klass, count in enumerate(counts):
        value = klass if klass < spec.num_classes else ign
        flat[order[start : start + count]] = value
        start += count
    return LabelMap(flat.reshape(spec.height, spec.width), spec.num_classes)


@dataclass
class PredictorSpec:
    """Controllable stand-in for a target-pretrained segmentation model."""

    accuracy: float | Sequence[float] = 0.8
    confusion_bias: Sequence[float] | None = None  # weights over wrong classes; None = uniform
    correct_confidence: tuple[float, float] = (0.6, 0.95)
    wrong_confidence: tuple[float, float] = (0.25, 0.6)
    seed: int = 0

    def accuracy_per_class(self, num_classes: int) -> np.ndarray:
        if np.isscalar(self.accuracy):
            acc = np.full(num_classes, float(self.accuracy))
        else:
            acc = np.asarray(self.accuracy, dtype=np.float64)
            if acc.shape != (num_classes,):
                raise InfeasibleSpec(f"accuracy vector length {acc.shape} != {num_classes}")
        if (acc < 0).any() or (acc > 1).any():
            raise InfeasibleSpec("per-class accuracy must lie in [0, 1]")
        return acc

    def bias_weights(self, num_classes: int) -> np.ndarray:
        if self.confusion_bias is None:
            return np.ones(num_classes, dtype=np.float64)
        w = np.asarray(self.confusion_bias, dtype=np.float64)
        if w.shape != (num_classes,) or (w < 0).any() or w.sum() <= 0:
            raise InfeasibleSpec("confusion bias must be non-negative weights over all classes")
        return w

    def _check_range(self, name: str, rng_pair: tuple[float, float]) -> tuple[float, float]:
        lo, hi = float(rng_pair[0]), float(rng_pair[1])
        if not (0.0 <= lo <= hi <= 1.0):
            raise InfeasibleSpec(f"{name} range must satisfy 0 <= lo <= hi <= 1")
        return lo, hi


def _draw_conf(rng: np.random.Generator, lo: float, hi: float, n: int) -> np.ndarray:
    if hi > lo:
        return rng.uniform(lo, hi, size=n)
    return np.full(n, lo)


def mock_predict(gt: LabelMap, spec: PredictorSpec) -> ProbVolume:
    """Per-pixel class draw around the GT with configurable accuracy.

    Correct pixels keep the GT class as argmax; wrong pixels draw a
    different class from the confusion bias. Confidences come from the
    respective ranges and the remaining mass spreads uniformly over the
    other classes, so the volume is normalized by construction.
    """
    k = gt.num_classes
    rng = _rng(spec.seed)
    acc = spec.accuracy_per_class(k)
    bias = spec.bias_weights(k)
    c_lo, c_hi = spec._check_range("correct_confidence", spec.correct_confidence)
    w_lo, w_hi = spec._check_range("wrong_confidence", spec.wrong_confidence)

    flat_gt = gt.data.reshape(-1).astype(np.int64)
    n = flat_gt.size
    valid = flat_gt != gt.ignore

    # decide correctness, then pick the argmax class for every pixel
    u = rng.random(n)
    acc_px = np.zeros(n)
    acc_px[valid] = acc[flat_gt[valid]]
    correct = valid & (u < acc_px)

    chosen = np.empty(n, dtype=np.int64)
    chosen[correct] = flat_gt[correct]
    for g in range(k):
        sel = valid & ~correct & (flat_gt == g)
        cnt = int(sel.sum())
        if cnt == 0:
            continue
        w = bias.copy()
        w[g] = 0.0
        if w.sum() <= 0:  # nowhere else to go; keep GT class
            chosen[sel] = g
            continue
        chosen[sel] = rng.choice(k, size=cnt, p=w / w.sum())
    off = ~valid
    if off.any():
        chosen[off] = rng.choice(k, size=int(off.sum()), p=bias / bias.sum())

    conf = np.empty(n)
    conf[correct] = _draw_conf(rng, c_lo, c_hi, int(correct.sum()))
    wrongish = ~correct
    conf[wrongish] = _draw_conf(rng, w_lo, w_hi, int(wrongish.sum()))
    if k > 1:
        # keep the chosen class a strict argmax
        conf = np.clip(conf, 1.0 / k + 1e-6, 1.0)
        rest = (1.0 - conf) / (k - 1)
        probs = np.broadcast_to(rest, (k, n)).copy()
        probs[chosen, np.arange(n)] = conf
    else:
        probs = np.ones((1, n))
    return ProbVolume(probs.reshape(k, gt.height, gt.width).astype(np.float32), normalized=True)


@dataclass
class SimulationConfig:
    """Knobs for a whole generated dataset."""

    count: int = 20
    width: int = 64
    height: int = 64
    num_classes: int = 8
    min_classes: int = 2
    max_classes: int | None = None  # default: num_classes
    granularity: float = 64.0
    ignore_fraction: float = 0.05
    accuracy: float = 0.8
    correct_confidence: tuple[float, float] = (0.6, 0.95)
    wrong_confidence: tuple[float, float] = (0.25, 0.6)
    compact: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_classes is None:
            self.max_classes = self.num_classes
        if not (1 <= self.min_classes <= self.max_classes <= self.num_classes):
            raise InfeasibleSpec("class-count range must satisfy 1 <= min <= max <= K")
        if self.count < 0:
            raise InfeasibleSpec("count must be non-negative")

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "width": self.width,
            "height": self.height,
            "num_classes": self.num_classes,
            "min_classes": self.min_classes,
            "max_classes": self.max_classes,
            "granularity": self.granularity,
            "ignore_fraction": self.ignore_fraction,
            "accuracy": self.accuracy,
            "correct_confidence": list(self.correct_confidence),
            "wrong_confidence": list(self.wrong_confidence),
            "compact": self.compact,
            "seed": self.seed,
        }


@dataclass
class SimulatedImage:
    image_id: str
    scene: SceneSpec
    predictor: PredictorSpec


def plan_images(cfg: SimulationConfig) -> list[SimulatedImage]:
    """Derive deterministic per-image specs from a dataset config."""
    master = _rng(cfg.seed)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(2 * cfg.count + 1)[1:]
    images = []
    for i in range(cfg.count):
        present = int(master.integers(cfg.min_classes, cfg.max_classes + 1))
        classes = np.sort(master.choice(cfg.num_classes, size=present, replace=False))
        weights = master.dirichlet(np.full(present, 5.0))
        fractions = np.zeros(cfg.num_classes)
        fractions[classes] = weights * (1.0 - cfg.ignore_fraction)
        scene = SceneSpec(
            width=cfg.width,
            height=cfg.height,
            num_classes=cfg.num_classes,
            area_fractions=fractions.tolist(),
            granularity=cfg.granularity,
            ignore_fraction=cfg.ignore_fraction,
            seed=int(seeds[2 * i]),
        )
        predictor = PredictorSpec(
            accuracy=cfg.accuracy,
            correct_confidence=cfg.correct_confidence,
            wrong_confidence=cfg.wrong_confidence,
            seed=int(seeds[2 * i + 1]),
        )
        images.append(SimulatedImage(f"img_{i:06d}", scene, predictor))
    return images
