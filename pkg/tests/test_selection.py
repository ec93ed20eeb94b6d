from __future__ import annotations

import numpy as np
import pytest

from sdss.errors import DuplicateId, InvalidPercent
from sdss.selection import (
    Manifest,
    ScoredRecord,
    select_threshold,
    select_top_percent,
    subset_stats,
    top_count,
)


def records_from_scores(scores, prefix="img") -> list[ScoredRecord]:
    return [ScoredRecord(f"{prefix}_{i:06d}", float(s), 100) for i, s in enumerate(scores)]


# Score histogram consistent with the published threshold sweep on the
# 24,966-image source set: cumulative counts above 0.1/0.2/0.3/0.4/0.5.
THRESHOLD_SWEEP = {0.1: 24939, 0.2: 24018, 0.3: 19695, 0.4: 7275, 0.5: 936}
TOTAL_RECORDS = 24966


def threshold_sweep_records() -> list[ScoredRecord]:
    # one score bucket per 0.1-wide band, sized from the cumulative counts
    above = sorted(THRESHOLD_SWEEP.items())  # [(0.1, 24939), ... (0.5, 936)]
    sizes = []
    for i, (thr, cum) in enumerate(above):
        higher = above[i + 1][1] if i + 1 < len(above) else 0
        sizes.append((thr + 0.05, cum - higher))
    sizes.append((0.05, TOTAL_RECORDS - above[0][1]))
    scores = []
    for mid, n in sizes:
        scores.extend([mid] * n)
    return records_from_scores(scores)


class TestSelectThreshold:
    def test_strict_boundary(self):
        recs = records_from_scores([0.1, 0.3, 0.31])
        picked = select_threshold(recs, 0.3)
        assert [r.score for r in picked.records] == [0.31]

    def test_zero_threshold_keeps_everything_positive(self):
        recs = records_from_scores([0.4, 0.2, 1.5])
        assert len(select_threshold(recs, 0.0)) == 3

    def test_empty_selection_is_valid(self):
        recs = records_from_scores([0.1, 0.2])
        m = select_threshold(recs, 5.0)
        assert len(m) == 0

    def test_reproduces_published_threshold_sweep(self):
        recs = threshold_sweep_records()
        assert len(recs) == TOTAL_RECORDS
        for thr, expected in THRESHOLD_SWEEP.items():
            assert len(select_threshold(recs, thr)) == expected

    def test_monotone_nesting(self, rng):
        recs = records_from_scores(rng.random(300))
        loose = set(select_threshold(recs, 0.2).ids())
        tight = set(select_threshold(recs, 0.6).ids())
        assert tight <= loose


class TestSelectTopPercent:
    @pytest.mark.parametrize(
        "percent,expected",
        [(10, 2497), (30, 7490), (50, 12483), (70, 17476)],
    )
    def test_published_counts_at_source_scale(self, percent, expected):
        assert top_count(24966, percent) == expected

    def test_single_record_full_cut(self):
        recs = records_from_scores([0.7])
        assert len(select_top_percent(recs, 100)) == 1

    def test_invalid_percent(self):
        recs = records_from_scores([0.1])
        for bad in (0.0, -5.0, 100.5):
            with pytest.raises(InvalidPercent):
                select_top_percent(recs, bad)

    def test_ties_at_cut_break_by_ascending_id(self):
        recs = [
            ScoredRecord("b", 0.5, 10),
            ScoredRecord("a", 0.5, 10),
            ScoredRecord("c", 0.9, 10),
            ScoredRecord("d", 0.5, 10),
        ]
        picked = select_top_percent(recs, 50)
        assert picked.ids() == ["c", "a"]

    def test_nesting(self, rng):
        recs = records_from_scores(rng.random(200))
        small = set(select_top_percent(recs, 15).ids())
        large = set(select_top_percent(recs, 60).ids())
        assert small <= large

    def test_input_order_invariance(self, rng):
        recs = records_from_scores(rng.random(100))
        shuffled = list(recs)
        rng.shuffle(shuffled)
        assert select_top_percent(recs, 37).ids() == select_top_percent(shuffled, 37).ids()
        assert select_threshold(recs, 0.5).ids() == select_threshold(shuffled, 0.5).ids()


class TestManifest:
    def test_sorted_by_score_then_id(self):
        m = Manifest(
            [ScoredRecord("b", 0.5, 1), ScoredRecord("a", 0.5, 1), ScoredRecord("z", 0.9, 1)]
        )
        assert m.ids() == ["z", "a", "b"]

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DuplicateId):
            Manifest([ScoredRecord("a", 0.5, 1), ScoredRecord("a", 0.6, 1)])


class TestSubsetStats:
    def test_empty_manifest(self):
        report = subset_stats(Manifest([]))
        assert report.count == 0
        assert report.score_quantiles == {}
        assert report.class_pixels == {}

    def test_singleton_quantiles_collapse(self):
        m = Manifest([ScoredRecord("a", 0.42, 10)])
        report = subset_stats(m)
        assert set(report.score_quantiles.values()) == {0.42}

    def test_aggregates_match_independent_summation(self, rng):
        records = []
        for i in range(40):
            classes = rng.choice(6, size=int(rng.integers(1, 5)), replace=False)
            n_class = {int(k): int(rng.integers(1, 50)) for k in classes}
            n_correct = {k: int(rng.integers(0, v + 1)) for k, v in n_class.items()}
            n_correct = {k: v for k, v in n_correct.items() if v > 0}
            records.append(
                ScoredRecord(f"r{i}", float(rng.random()), 1000, n_class, n_correct)
            )
        report = subset_stats(Manifest(records))
        for k in range(6):
            expected = sum(r.n_class.get(k, 0) for r in records)
            assert report.class_pixels.get(k, 0) == expected
            expected_c = sum(r.n_correct.get(k, 0) for r in records)
            assert report.class_correct.get(k, 0) == expected_c
