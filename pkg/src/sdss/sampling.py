"""Pixel-level sampling: confidence-thresholded pseudo-labels and GT-matched refinement."""
from __future__ import annotations

import numpy as np

from .core import ConfPair, LabelMap, ProbVolume, require_same_grid
from .errors import DimensionMismatch, UnnormalizedInput


def pseudo_label(pred: ProbVolume, tau_ssl: float) -> LabelMap:
    """Label each pixel with its argmax class when the max probability meets tau_ssl.

    Comparison is inclusive (>=); argmax ties break to the lowest class
    index. Pixels below the threshold become ignore. Thresholds are compared
    in double precision so that results do not depend on the storage width
    of the volume.
    """
    if not pred.normalized:
        raise UnnormalizedInput("pseudo_label requires a normalized probability volume")
    if not (0.0 <= tau_ssl <= 1.0):
        raise ValueError(f"tau_ssl must be in [0, 1], got {tau_ssl}")
    labels = np.argmax(pred.data, axis=0)
    conf = pred.data.max(axis=0).astype(np.float64)
    out = LabelMap(labels, pred.num_classes)
    kept = np.where(conf >= float(tau_ssl), out.data, out.ignore)
    return LabelMap(kept, pred.num_classes)


def pseudo_label_compact(pred: ConfPair, tau_ssl: float) -> LabelMap:
    """Same thresholding applied to a pre-collapsed argmax/confidence pair."""
    if not (0.0 <= tau_ssl <= 1.0):
        raise ValueError(f"tau_ssl must be in [0, 1], got {tau_ssl}")
    if pred.confidence.shape != pred.argmax.data.shape:
        raise DimensionMismatch("confidence and argmax dimensions differ")
    conf = pred.confidence.astype(np.float64)
    kept = np.where(conf >= float(tau_ssl), pred.argmax.data, pred.argmax.ignore)
    return LabelMap(kept, pred.num_classes)


def refine(pseudo: LabelMap, gt: LabelMap) -> LabelMap:
    """Keep pseudo-labels only where they match a non-ignore GT label.

    GT ignore pixels always come out as ignore, even when the pseudo-label
    agrees, so downstream tallies only ever count real classes.
    """
    require_same_grid(pseudo, gt)
    keep = (pseudo.data == gt.data) & (gt.data != gt.ignore)
    out = np.where(keep, pseudo.data, pseudo.ignore)
    return LabelMap(out, gt.num_classes)
