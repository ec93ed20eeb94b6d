"""Naive reference implementations used as brute-force test oracles.

Everything here is written as literal per-pixel double loops over plain
Python lists, deliberately sharing no code with the production modules.
Do not optimise; slowness is the point.
"""
from __future__ import annotations

from .core import LabelMap, ProbVolume
from .errors import EmptyImage, UnnormalizedInput


def oracle_pseudo_label(pred: ProbVolume, tau_ssl: float) -> LabelMap:
    """Confidence-thresholded argmax labelling, one pixel at a time."""
    if not pred.normalized:
        raise UnnormalizedInput("oracle requires a normalized volume")
    k_count = pred.num_classes
    planes = pred.data.tolist()  # k-major nested lists of Python floats
    height = pred.height
    width = pred.width
    ign = 255 if k_count <= 254 else 65535
    tau = float(tau_ssl)

    out = []
    for y in range(height):
        row = []
        for x in range(width):
            best_k = 0
            best_v = planes[0][y][x]
            for k in range(1, k_count):
                v = planes[k][y][x]
                if v > best_v:
                    best_v = v
                    best_k = k
            row.append(best_k if best_v >= tau else ign)
        out.append(row)
    return LabelMap(out, k_count)


def oracle_refine(pseudo: LabelMap, gt: LabelMap) -> LabelMap:
    """Keep a pseudo-label only where it equals a non-ignore GT label."""
    if pseudo.data.shape != gt.data.shape or pseudo.num_classes != gt.num_classes:
        raise ValueError("oracle_refine requires identical geometry")
    p_rows = pseudo.data.tolist()
    g_rows = gt.data.tolist()
    ign = gt.ignore
    out = []
    for y in range(gt.height):
        row = []
        for x in range(gt.width):
            g = g_rows[y][x]
            p = p_rows[y][x]
            if g != ign and p == g:
                row.append(p)
            else:
                row.append(ign)
        out.append(row)
    return LabelMap(out, gt.num_classes)


def oracle_score(pseudo: LabelMap, gt: LabelMap, ignore_in_total: bool = True) -> float:
    """Class-balance score computed from scratch: refine, count, sum."""
    if pseudo.data.shape != gt.data.shape or pseudo.num_classes != gt.num_classes:
        raise ValueError("oracle_score requires identical geometry")
    height = gt.height
    width = gt.width
    n_image = height * width
    if n_image == 0:
        raise EmptyImage("zero-pixel image")

    p_rows = pseudo.data.tolist()
    g_rows = gt.data.tolist()
    ign = gt.ignore
    k_count = gt.num_classes
    n_class = [0] * k_count
    n_correct = [0] * k_count
    for y in range(height):
        for x in range(width):
            g = g_rows[y][x]
            if g == ign:
                continue
            n_class[g] += 1
            if p_rows[y][x] == g:
                n_correct[g] += 1

    denom = n_image if ignore_in_total else sum(n_class)
    total = 0.0
    for k in range(k_count):
        if n_class[k] > 0:
            total += (n_correct[k] / n_class[k]) * (1.0 - n_class[k] / denom)
    return total
