#!/usr/bin/env python3
"""Regenerate the shared parity fixtures consumed by the binding tests.

Run from the repository root with the primary package installed:

    python3 bindings/scripts/make_fixtures.py
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from sdss.core import LabelMap, ProbVolume
from sdss.dataio import write_manifest
from sdss.sampling import pseudo_label, refine
from sdss.scoring import score_image
from sdss.selection import Manifest, ScoredRecord, select_threshold, select_top_percent

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def dump(name: str, doc) -> None:
    path = FIXTURES / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def label_case(pseudo: LabelMap, gt: LabelMap) -> dict:
    out = refine(pseudo, gt)
    return {
        "width": gt.width,
        "height": gt.height,
        "numClasses": gt.num_classes,
        "ignore": gt.ignore,
        "pseudo": pseudo.data.reshape(-1).tolist(),
        "gt": gt.data.reshape(-1).tolist(),
        "expected": out.data.reshape(-1).tolist(),
    }


def make_refine_cases(rng: np.random.Generator) -> None:
    cases = [
        label_case(LabelMap(np.array([[2, 1, 255]]), 3), LabelMap(np.array([[2, 0, 2]]), 3)),
        label_case(LabelMap(np.array([[0, 1], [1, 0]]), 2), LabelMap(np.array([[0, 1], [1, 0]]), 2)),
        label_case(LabelMap(np.full((2, 3), 255), 4), LabelMap(np.array([[0, 1, 2], [3, 255, 0]]), 4)),
    ]
    for _ in range(12):
        k = int(rng.integers(2, 20))
        h, w = int(rng.integers(1, 16)), int(rng.integers(1, 16))
        ign = 255 if k <= 254 else 65535
        gt = np.where(rng.random((h, w)) < 0.2, ign, rng.integers(0, k, (h, w)))
        ps = np.where(rng.random((h, w)) < 0.2, ign, rng.integers(0, k, (h, w)))
        cases.append(label_case(LabelMap(ps, k), LabelMap(gt, k)))
    # wide-storage case: class ids above 255
    k = 300
    gt = rng.integers(0, k, (4, 4))
    ps = np.where(rng.random((4, 4)) < 0.5, gt, rng.integers(0, k, (4, 4)))
    cases.append(label_case(LabelMap(ps, k), LabelMap(gt, k)))
    dump("refine_cases.json", cases)


def volume_case(vol: ProbVolume, tau: float) -> dict:
    out = pseudo_label(vol, tau)
    return {
        "numClasses": vol.num_classes,
        "width": vol.width,
        "height": vol.height,
        "tauSsl": tau,
        # float32 planes serialized as exact shortest-repr doubles
        "probs": [float(v) for v in vol.data.reshape(-1)],
        "expected": out.data.reshape(-1).tolist(),
    }


def make_pseudo_label_cases(rng: np.random.Generator) -> None:
    cases = []
    for _ in range(10):
        k = int(rng.integers(2, 8))
        h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        raw = rng.random((k, h, w))
        vol = ProbVolume(raw / raw.sum(axis=0), normalized=True)
        cases.append(volume_case(vol, float(rng.random() * 0.6)))
    # exact threshold boundary and argmax ties
    probs = np.zeros((2, 1, 2), dtype=np.float32)
    probs[0] = [[0.1, 0.09]]
    probs[1] = 1.0 - probs[0]
    cases.append(volume_case(ProbVolume(probs, normalized=True), 0.1))
    tie = np.full((4, 1, 1), 0.25, dtype=np.float32)
    cases.append(volume_case(ProbVolume(tie, normalized=True), 0.2))
    dump("pseudo_label_cases.json", cases)


def make_score_cases(rng: np.random.Generator) -> None:
    gt = np.zeros((4, 4), np.int64)
    gt[3, :] = 1
    refined = gt.copy()
    refined[0, :3] = 255
    refined[1, :3] = 255
    cases = [
        {
            **label_case(LabelMap(refined, 2), LabelMap(gt, 2)),
            "ignoreInTotal": True,
            "expectedScore": score_image(LabelMap(refined, 2), LabelMap(gt, 2)).score,
            "note": "worked example, expects 0.875",
        }
    ]
    for _ in range(20):
        k = int(rng.integers(1, 20))
        h, w = int(rng.integers(1, 24)), int(rng.integers(1, 24))
        ign = 255
        gt_arr = np.where(rng.random((h, w)) < 0.25, ign, rng.integers(0, k, (h, w)))
        ps_arr = np.where(rng.random((h, w)) < 0.4, gt_arr, rng.integers(0, k, (h, w)))
        ps_arr = np.where(rng.random((h, w)) < 0.15, ign, ps_arr)
        gt_map, ps_map = LabelMap(gt_arr, k), LabelMap(ps_arr, k)
        ignore_in_total = bool(rng.random() < 0.5)
        case = label_case(ps_map, gt_map)
        case["ignoreInTotal"] = ignore_in_total
        case["expectedScore"] = score_image(ps_map, gt_map, ignore_in_total=ignore_in_total).score
        cases.append(case)
    dump("score_cases.json", cases)


def make_select_cases(rng: np.random.Generator) -> None:
    records = [
        {"id": f"img_{i:05d}", "score": float(np.round(rng.random() * 2, 6)), "nImage": 4096}
        for i in range(500)
    ]
    native = [ScoredRecord(r["id"], r["score"], r["nImage"]) for r in records]
    selections = []
    for tau in (0.25, 0.5, 0.9, 1.999999):
        selections.append({"mode": "threshold", "tauC": tau,
                           "expectedIds": select_threshold(native, tau).ids()})
    for pct in (10.0, 33.3, 50.0, 100.0):
        selections.append({"mode": "top_percent", "percent": pct,
                           "expectedIds": select_top_percent(native, pct).ids()})
    dump("select_cases.json", {"records": records, "selections": selections})


def make_manifest_fixture(rng: np.random.Generator) -> None:
    records = []
    for i in range(25):
        k_ids = rng.choice(19, size=3, replace=False)
        n_class = {int(k): int(rng.integers(10, 500)) for k in k_ids}
        n_correct = {k: int(rng.integers(1, v + 1)) for k, v in n_class.items()}
        records.append(
            ScoredRecord(
                image_id=f"img_{i:05d}",
                score=float(rng.random() * 3),
                n_image=4096,
                n_class=n_class,
                n_correct=n_correct,
                paths={"gt": f"gt/img_{i:05d}.png", "refined": f"img_{i:05d}.png"},
            )
        )
    manifest = Manifest(records, {"tool": "sdss", "tool_version": "0.1.0",
                                  "created_at": "2000-01-01T00:00:00+00:00", "stage": "score",
                                  "config": {"tau_ssl": 0.1, "selection_mode": "threshold",
                                             "tau_c": 0.3, "top_percent": None,
                                             "ignore_in_total": True, "class_mapping": None,
                                             "seed": 0}})
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, FIXTURES / "manifest_fixture.jsonl")
    print(f"wrote {FIXTURES / 'manifest_fixture.jsonl'}")
    expected = {
        "count": len(manifest),
        "firstId": manifest.records[0].image_id,
        "scores": [r.score for r in manifest.records],
    }
    dump("manifest_expected.json", expected)


def main() -> None:
    rng = np.random.default_rng(424242)
    make_refine_cases(rng)
    make_pseudo_label_cases(rng)
    make_score_cases(rng)
    make_select_cases(rng)
    make_manifest_fixture(rng)


if __name__ == "__main__":
    main()
