"""Per-image class tallies and the class-balance score.

The score sums, over classes present in the image, the per-class
correctness ratio weighted by one minus the class's share of the image
area. Perfectly predicted single-class images therefore score 0, and
images with many well-predicted, evenly sized classes score high.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabelMap, require_same_grid
from .errors import EmptyImage
from .sampling import refine


@dataclass
class ClassTally:
    """Per-image pixel counts: GT pixels and refined-correct pixels per class."""

    n_correct: np.ndarray  # (K,) int64
    n_class: np.ndarray  # (K,) int64
    n_image: int

    def __post_init__(self):
        self.n_correct = np.asarray(self.n_correct, dtype=np.int64)
        self.n_class = np.asarray(self.n_class, dtype=np.int64)
        self.n_image = int(self.n_image)
        if self.n_correct.shape != self.n_class.shape:
            raise ValueError("n_correct and n_class must have one entry per class")
        if (self.n_correct < 0).any() or (self.n_correct > self.n_class).any():
            raise ValueError("per-class correct count must satisfy 0 <= n_correct <= n_class")
        if (self.n_class > self.n_image).any() or int(self.n_class.sum()) > self.n_image:
            raise ValueError("class counts cannot exceed the image pixel count")

    @property
    def num_classes(self) -> int:
        return len(self.n_class)

    @property
    def classes_present(self) -> int:
        return int((self.n_class > 0).sum())


@dataclass
class ImageScore:
    image_id: str
    score: float
    tally: ClassTally


def tally(refined: LabelMap, gt: LabelMap) -> ClassTally:
    """Count GT pixels and refined pixels per class (ignore excluded)."""
    require_same_grid(refined, gt)
    k = gt.num_classes
    gt_flat = gt.data.reshape(-1)
    rf_flat = refined.data.reshape(-1)
    n_class = np.bincount(gt_flat[gt_flat != gt.ignore], minlength=k)[:k]
    n_correct = np.bincount(rf_flat[rf_flat != refined.ignore], minlength=k)[:k]
    return ClassTally(n_correct=n_correct, n_class=n_class, n_image=gt.data.size)


def score(t: ClassTally, ignore_in_total: bool = True) -> float:
    """Class-balance score of a tally.

    Classes absent from the image contribute nothing. With
    ``ignore_in_total`` (the default) the area denominator is the full pixel
    count; otherwise only GT-labelled pixels count.
    """
    if t.n_image == 0:
        raise EmptyImage("cannot score a zero-pixel image")
    denom = t.n_image if ignore_in_total else int(t.n_class.sum())
    # summed class-by-class in ascending order so every language binding
    # reproduces the exact same float64 result
    n_cls = t.n_class.tolist()
    n_cor = t.n_correct.tolist()
    total = 0.0
    for k in range(len(n_cls)):
        if n_cls[k] > 0:
            total += (n_cor[k] / n_cls[k]) * (1.0 - n_cls[k] / denom)
    return total


def score_image(
    pseudo: LabelMap,
    gt: LabelMap,
    image_id: str = "",
    ignore_in_total: bool = True,
) -> ImageScore:
    """Refine, tally and score one image in a single call."""
    t = tally(refine(pseudo, gt), gt)
    return ImageScore(image_id=image_id, score=score(t, ignore_in_total), tally=t)
