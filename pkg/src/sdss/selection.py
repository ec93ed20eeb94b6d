"""Subset selection over scored records: score thresholding and top-k% cuts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateId, InvalidPercent
from .scoring import ClassTally


@dataclass
class ScoredRecord:
    """One scored image: identity, score, tally summary, source paths."""

    image_id: str
    score: float
    n_image: int
    n_class: dict[int, int] = field(default_factory=dict)
    n_correct: dict[int, int] = field(default_factory=dict)
    paths: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_tally(cls, image_id: str, score: float, t: ClassTally, paths: dict[str, str] | None = None) -> "ScoredRecord":
        n_class = {int(k): int(v) for k, v in enumerate(t.n_class) if v > 0}
        n_correct = {int(k): int(v) for k, v in enumerate(t.n_correct) if v > 0}
        return cls(
            image_id=image_id,
            score=float(score),
            n_image=int(t.n_image),
            n_class=n_class,
            n_correct=n_correct,
            paths=dict(paths or {}),
        )

    def sort_key(self):
        return (-self.score, self.image_id)


@dataclass
class Manifest:
    """Ordered record list plus the provenance block it was produced under.

    Records are kept sorted by score descending, image id ascending; ids
    must be unique.
    """

    records: list[ScoredRecord]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.image_id in seen:
                raise DuplicateId(r.image_id)
            seen.add(r.image_id)
        self.records = sorted(self.records, key=ScoredRecord.sort_key)

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.image_id for r in self.records]


def select_threshold(records: list[ScoredRecord], tau_c: float, provenance: dict | None = None) -> Manifest:
    """Keep records scoring strictly above the threshold."""
    picked = [r for r in records if r.score > tau_c]
    return Manifest(picked, dict(provenance or {}))


def top_count(total: int, percent: float) -> int:
    """Record count for a top-percent cut: round half away from zero."""
    if not (0.0 < percent <= 100.0):
        raise InvalidPercent(f"percent must be in (0, 100], got {percent}")
    return min(total, int(math.floor(percent * total / 100.0 + 0.5)))


def select_top_percent(records: list[ScoredRecord], percent: float, provenance: dict | None = None) -> Manifest:
    """Keep the highest-scoring percent of records.

    Ties at the cut break by ascending image id, so the result is stable
    across runs and input orderings.
    """
    n = top_count(len(records), percent)
    ordered = sorted(records, key=ScoredRecord.sort_key)
    return Manifest(ordered[:n], dict(provenance or {}))


@dataclass
class SubsetReport:
    count: int
    total_pixels: int
    score_quantiles: dict[str, float]
    class_pixels: dict[int, int]
    class_correct: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "total_pixels": self.total_pixels,
            "score_quantiles": self.score_quantiles,
            "class_pixels": {str(k): v for k, v in sorted(self.class_pixels.items())},
            "class_correct": {str(k): v for k, v in sorted(self.class_correct.items())},
        }


_QUANTILES = (("min", 0.0), ("p25", 0.25), ("median", 0.5), ("p75", 0.75), ("max", 1.0))


def subset_stats(manifest: Manifest) -> SubsetReport:
    """Record count, score quantiles, and aggregate per-class pixel counts."""
    scores = np.array([r.score for r in manifest.records], dtype=np.float64)
    quantiles = {}
    if len(scores):
        quantiles = {name: float(np.quantile(scores, q)) for name, q in _QUANTILES}
    class_pixels: dict[int, int] = {}
    class_correct: dict[int, int] = {}
    total_pixels = 0
    for r in manifest.records:
        total_pixels += r.n_image
        for k, v in r.n_class.items():
            class_pixels[k] = class_pixels.get(k, 0) + v
        for k, v in r.n_correct.items():
            class_correct[k] = class_correct.get(k, 0) + v
    return SubsetReport(
        count=len(manifest),
        total_pixels=total_pixels,
        score_quantiles=quantiles,
        class_pixels=class_pixels,
        class_correct=class_correct,
    )
