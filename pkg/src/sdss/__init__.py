"""Source domain subset sampling toolkit.

Selects the subset of a large labelled source dataset most relevant to a
target domain, given prediction maps from a target-pretrained segmentation
model: confidence-thresholded pseudo-labels, GT-matched refinement, a
per-image class-balance score, and threshold / top-percent selection.
"""

__version__ = "0.1.0"

from .core import (
    ClassMapping,
    ConfPair,
    LabelMap,
    ProbVolume,
    SamplingConfig,
    compress,
    remap_labels,
    validate,
)
from .sampling import pseudo_label, pseudo_label_compact, refine
from .scoring import ClassTally, ImageScore, score, score_image, tally
from .selection import Manifest, ScoredRecord, select_threshold, select_top_percent, subset_stats

__all__ = [
    "__version__",
    "ClassMapping",
    "ClassTally",
    "ConfPair",
    "ImageScore",
    "LabelMap",
    "Manifest",
    "ProbVolume",
    "SamplingConfig",
    "ScoredRecord",
    "compress",
    "pseudo_label",
    "pseudo_label_compact",
    "refine",
    "remap_labels",
    "score",
    "score_image",
    "select_threshold",
    "select_top_percent",
    "subset_stats",
    "tally",
    "validate",
]
