from __future__ import annotations

import numpy as np
import pytest

from sdss.core import LabelMap, ProbVolume, ignore_value, label_dtype


def make_map(values, num_classes) -> LabelMap:
    return LabelMap(np.asarray(values), num_classes)


def random_label_map(rng: np.random.Generator, height: int, width: int, num_classes: int,
                     ignore_fraction: float = 0.0) -> LabelMap:
    data = rng.integers(0, num_classes, size=(height, width)).astype(np.int64)
    if ignore_fraction > 0:
        mask = rng.random((height, width)) < ignore_fraction
        data[mask] = ignore_value(label_dtype(num_classes))
    return LabelMap(data, num_classes)


def random_prob_volume(rng: np.random.Generator, num_classes: int, height: int, width: int) -> ProbVolume:
    raw = rng.random((num_classes, height, width))
    raw = raw / raw.sum(axis=0)
    return ProbVolume(raw, normalized=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)
