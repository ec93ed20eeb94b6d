"""Dataset analytics: class pixel histograms, confusion matrices, IoU."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import LabelMap
from .errors import ClassCountMismatch, DimensionMismatch


@dataclass
class ConfusionMatrix:
    """K x (K+1) counts: rows are GT classes, the extra column collects
    pixels the prediction left as ignore ("unlabeled"). GT-ignore pixels
    are never counted."""

    counts: np.ndarray
    num_classes: int

    @classmethod
    def zeros(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes + 1), dtype=np.int64), num_classes)

    @property
    def unlabeled_column(self) -> int:
        return self.num_classes

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.num_classes != other.num_classes:
            raise ClassCountMismatch("cannot merge confusion matrices of different class counts")
        return ConfusionMatrix(self.counts + other.counts, self.num_classes)

    def total(self) -> int:
        return int(self.counts.sum())


def class_histogram(maps: Iterable[LabelMap]) -> np.ndarray:
    """Total pixels per class across all maps; ignore pixels excluded."""
    counts: np.ndarray | None = None
    k = None
    for m in maps:
        if k is None:
            k = m.num_classes
            counts = np.zeros(k, dtype=np.int64)
        elif m.num_classes != k:
            raise ClassCountMismatch(f"histogram over mixed class counts: {k} vs {m.num_classes}")
        flat = m.data.reshape(-1)
        counts += np.bincount(flat[flat != m.ignore], minlength=k)[:k]
    if counts is None:
        return np.zeros(0, dtype=np.int64)
    return counts


def confusion(pred: LabelMap, gt: LabelMap, acc: ConfusionMatrix | None = None) -> ConfusionMatrix:
    """Accumulate one image into a confusion matrix.

    Prediction-ignore pixels land in the reserved unlabeled column so the
    correctness bookkeeping stays auditable after thresholding.
    """
    if pred.data.shape != gt.data.shape:
        raise DimensionMismatch(f"prediction {pred.data.shape} vs GT {gt.data.shape}")
    if pred.num_classes != gt.num_classes:
        raise ClassCountMismatch(f"prediction K={pred.num_classes} vs GT K={gt.num_classes}")
    k = gt.num_classes
    if acc is None:
        acc = ConfusionMatrix.zeros(k)
    elif acc.num_classes != k:
        raise ClassCountMismatch(f"accumulator K={acc.num_classes} vs maps K={k}")

    gt_flat = gt.data.reshape(-1).astype(np.int64)
    pred_flat = pred.data.reshape(-1).astype(np.int64)
    valid = gt_flat != gt.ignore
    cols = np.where(pred_flat == pred.ignore, k, pred_flat)[valid]
    rows = gt_flat[valid]
    flat = rows * (k + 1) + cols
    add = np.bincount(flat, minlength=k * (k + 1)).reshape(k, k + 1)
    return ConfusionMatrix(acc.counts + add, k)


def miou(cm: ConfusionMatrix, eval_classes: Sequence[int] | None = None) -> tuple[np.ndarray, float]:
    """Per-class IoU and its mean.

    IoU of class k is diag / (row + column - diag), the column taken over
    real classes only. Classes with a zero denominator are undefined (NaN)
    and excluded from the mean; defined-but-zero IoUs stay in.
    """
    k = cm.num_classes
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts[:, :k]).copy()
    row = counts.sum(axis=1)  # includes the unlabeled column: unpredicted GT pixels
    col = counts[:, :k].sum(axis=0)
    denom = row + col - diag
    iou = np.full(k, np.nan)
    defined = denom > 0
    iou[defined] = diag[defined] / denom[defined]

    if eval_classes is not None:
        sel = np.zeros(k, dtype=bool)
        for c in eval_classes:
            if not (0 <= c < k):
                raise ClassCountMismatch(f"eval class {c} outside [0, {k - 1}]")
            sel[c] = True
    else:
        sel = np.ones(k, dtype=bool)
    use = sel & defined
    mean = float(iou[use].mean()) if use.any() else float("nan")
    return iou, mean
