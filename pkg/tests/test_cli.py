from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
import pytest

from sdss.cli import main
from sdss.dataio import load_label_png, read_manifest

pytestmark = pytest.mark.usefixtures("pinned_clock")


@pytest.fixture
def pinned_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "946684800")


def snapshot(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def simulate(tmp_path: Path, **kw) -> Path:
    out = tmp_path / "sim"
    argv = ["simulate", "--out", str(out), "--jobs", "1"]
    defaults = {"images": 8, "width": 24, "height": 16, "classes": 4, "seed": 5}
    defaults.update(kw)
    for key, val in defaults.items():
        argv += [f"--{key.replace('_', '-')}", str(val)]
    assert main(argv) == 0
    return out


class TestSimulate:
    def test_produces_valid_layout(self, tmp_path):
        out = simulate(tmp_path)
        layout = json.loads((out / "layout.json").read_text())
        assert layout["num_classes"] == 4
        assert len(layout["entries"]) == 8
        for e in layout["entries"]:
            assert (out / e["gt"]).exists()
            assert (out / e["pred"]).exists()
        prov = json.loads((out / "provenance.json").read_text())
        assert prov["rng_algorithm"] == "pcg64"
        assert prov["simulation"]["seed"] == 5

    def test_compact_predictions(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--out", str(out), "--images", "2", "--width", "8",
                     "--height", "8", "--classes", "3", "--compact", "--jobs", "1"]) == 0
        layout = json.loads((out / "layout.json").read_text())
        pred = layout["entries"][0]["pred"]
        assert set(pred) == {"argmax", "conf"}
        assert (out / pred["argmax"]).exists()

    def test_deterministic_across_jobs(self, tmp_path):
        a = simulate(tmp_path / "a", seed=9)
        first = snapshot(a)
        b = tmp_path / "b" / "sim"
        argv = ["simulate", "--out", str(b), "--jobs", "3", "--images", "8", "--width", "24",
                "--height", "16", "--classes", "4", "--seed", "9"]
        assert main(argv) == 0
        second = snapshot(b)
        assert first == second


class TestPseudoLabel:
    def test_zero_threshold_labels_everything(self, tmp_path):
        sim = simulate(tmp_path)
        out = tmp_path / "pseudo"
        assert main(["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--tau-ssl", "0", "--jobs", "1"]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["count"] == 8
        assert summary["labeled_fraction_mean"] == 1.0
        for entry in summary["entries"]:
            m = load_label_png(out / entry["output"], 4)
            assert (m.data != m.ignore).all()

    def test_summary_echoes_config_override(self, tmp_path):
        sim = simulate(tmp_path)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"tau_ssl": 0.5, "seed": 3}))
        out = tmp_path / "pseudo"
        assert main(["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--config", str(cfg_path), "--tau-ssl", "0.25", "--jobs", "1"]) == 0
        prov = json.loads((out / "summary.json").read_text())["provenance"]
        assert prov["config"]["tau_ssl"] == 0.25  # flag wins
        assert prov["config"]["seed"] == 3

    def test_missing_prediction_strict_vs_lenient(self, tmp_path):
        sim = simulate(tmp_path)
        victim = next((sim / "pred").glob("*.prb"))
        victim.unlink()
        out = tmp_path / "pseudo"
        assert main(["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--strict", "--jobs", "1"]) == 3
        assert main(["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--jobs", "1"]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["failed"] == 1
        assert summary["errors"][0]["id"] == victim.stem

    def test_rerun_is_byte_identical(self, tmp_path):
        sim = simulate(tmp_path)
        out = tmp_path / "pseudo"
        argv = ["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(out), "--jobs", "1"]
        assert main(argv) == 0
        first = snapshot(out)
        assert main(argv) == 0
        assert snapshot(out) == first


class TestRefineAndScore:
    def run_stages(self, tmp_path, accuracy="1.0"):
        sim = simulate(tmp_path, accuracy=accuracy)
        pseudo = tmp_path / "pseudo"
        refined = tmp_path / "refined"
        layout = str(sim / "layout.json")
        assert main(["pseudo-label", "--layout", layout, "--out", str(pseudo), "--jobs", "1"]) == 0
        assert main(["refine", "--layout", layout, "--pseudo", str(pseudo), "--out", str(refined),
                     "--jobs", "1"]) == 0
        return sim, pseudo, refined

    def test_perfect_predictor_keeps_gt(self, tmp_path):
        sim, _, refined = self.run_stages(tmp_path, accuracy="1.0")
        for gt_png in (sim / "gt").glob("*.png"):
            gt = load_label_png(gt_png, 4)
            out = load_label_png(refined / gt_png.name, 4)
            valid = gt.data != gt.ignore
            assert bool(np.all(out.data[valid] == gt.data[valid]))
            assert bool(np.all(out.data[~valid] == out.ignore))

    def test_sidecar_tallies_satisfy_invariants(self, tmp_path):
        _, _, refined = self.run_stages(tmp_path, accuracy="0.7")
        sidecars = sorted(refined.glob("img_*.json"))
        assert sidecars
        for sc in sidecars:
            doc = json.loads(sc.read_text())
            assert set(doc["n_correct"]) <= set(doc["n_class"])
            for k, v in doc["n_correct"].items():
                assert 0 < v <= doc["n_class"][k]
            assert sum(doc["n_class"].values()) <= doc["n_image"]

    def test_refine_rerun_idempotent(self, tmp_path):
        sim, pseudo, refined = self.run_stages(tmp_path, accuracy="0.8")
        first = snapshot(refined)
        assert main(["refine", "--layout", str(sim / "layout.json"), "--pseudo", str(pseudo),
                     "--out", str(refined), "--jobs", "1"]) == 0
        assert snapshot(refined) == first

    def test_score_manifest_sorted_and_audited(self, tmp_path):
        sim, _, refined = self.run_stages(tmp_path, accuracy="0.8")
        scored = tmp_path / "scored.jsonl"
        assert main(["score", "--layout", str(sim / "layout.json"), "--refined", str(refined),
                     "--out", str(scored), "--audit", "1.0", "--jobs", "1"]) == 0
        manifest = read_manifest(scored)
        scores = [r.score for r in manifest.records]
        assert scores == sorted(scores, reverse=True)
        assert len(manifest) == 8
        assert manifest.provenance["stage"] == "score"

    def test_manifest_tallies_match_gt_histogram(self, tmp_path):
        from sdss.metrics import class_histogram

        sim, _, refined = self.run_stages(tmp_path, accuracy="0.8")
        scored = tmp_path / "scored.jsonl"
        assert main(["score", "--layout", str(sim / "layout.json"), "--refined", str(refined),
                     "--out", str(scored), "--jobs", "1"]) == 0
        manifest = read_manifest(scored)
        gt_maps = [load_label_png(sim / "gt" / f"{r.image_id}.png", 4) for r in manifest.records]
        hist = class_histogram(gt_maps)
        for k in range(4):
            assert hist[k] == sum(r.n_class.get(k, 0) for r in manifest.records)

    def test_compact_predictions_give_identical_pseudo_labels(self, tmp_path):
        dense = simulate(tmp_path / "dense", seed=31)
        compact_out = tmp_path / "compact" / "sim"
        assert main(["simulate", "--out", str(compact_out), "--images", "8", "--width", "24",
                     "--height", "16", "--classes", "4", "--seed", "31", "--compact",
                     "--jobs", "1"]) == 0
        a = tmp_path / "pseudo_dense"
        b = tmp_path / "pseudo_compact"
        assert main(["pseudo-label", "--layout", str(dense / "layout.json"), "--out", str(a),
                     "--jobs", "1"]) == 0
        assert main(["pseudo-label", "--layout", str(compact_out / "layout.json"), "--out", str(b),
                     "--jobs", "1"]) == 0
        for png in sorted(a.glob("*.png")):
            assert png.read_bytes() == (b / png.name).read_bytes()

    def test_empty_layout_gives_header_only_manifest(self, tmp_path):
        layout_path = tmp_path / "layout.json"
        layout_path.write_text(json.dumps({"root": ".", "num_classes": 3, "entries": []}))
        scored = tmp_path / "scored.jsonl"
        assert main(["score", "--layout", str(layout_path), "--refined", str(tmp_path),
                     "--out", str(scored), "--jobs", "1"]) == 0
        assert len(scored.read_text().splitlines()) == 1


def write_manifest_fixture(tmp_path, scores) -> Path:
    from sdss.dataio import write_manifest
    from sdss.selection import Manifest, ScoredRecord

    records = [ScoredRecord(f"img_{i:05d}", float(s), 100) for i, s in enumerate(scores)]
    path = tmp_path / "manifest.jsonl"
    write_manifest(Manifest(records, {"origin": "fixture"}), path)
    return path


class TestSelect:
    def test_top_percent_cut(self, tmp_path, rng, capsys):
        path = write_manifest_fixture(tmp_path, rng.random(200))
        out = tmp_path / "subset.jsonl"
        assert main(["select", "--manifest", str(path), "--out", str(out), "--top-percent", "25"]) == 0
        assert len(read_manifest(out)) == 50
        assert json.loads(capsys.readouterr().out)["selected"] == 50

    def test_top_percent_at_source_dataset_scale(self, tmp_path, rng, capsys):
        path = write_manifest_fixture(tmp_path, rng.random(24966))
        out = tmp_path / "subset.jsonl"
        assert main(["select", "--manifest", str(path), "--out", str(out), "--top-percent", "10"]) == 0
        capsys.readouterr()
        assert len(read_manifest(out)) == 2497

    def test_threshold_is_strict(self, tmp_path):
        path = write_manifest_fixture(tmp_path, [0.1, 0.3, 0.31])
        out = tmp_path / "subset.jsonl"
        assert main(["select", "--manifest", str(path), "--out", str(out), "--tau-c", "0.3"]) == 0
        subset = read_manifest(out)
        assert [r.score for r in subset.records] == [0.31]

    def test_flags_are_mutually_exclusive(self, tmp_path):
        path = write_manifest_fixture(tmp_path, [0.5])
        with pytest.raises(SystemExit) as exc:
            main(["select", "--manifest", str(path), "--out", "x.jsonl",
                  "--tau-c", "0.3", "--top-percent", "10"])
        assert exc.value.code == 2

    def test_bad_percent_is_config_error(self, tmp_path):
        path = write_manifest_fixture(tmp_path, [0.5])
        assert main(["select", "--manifest", str(path), "--out", str(tmp_path / "o.jsonl"),
                     "--top-percent", "150"]) == 2


class TestStatsAndEval:
    def test_stats_over_manifest(self, tmp_path, rng, capsys):
        path = write_manifest_fixture(tmp_path, rng.random(30))
        out = tmp_path / "stats"
        assert main(["stats", "--manifest", str(path), "--out", str(out), "--plot-data"]) == 0
        for name in ("score_quantiles.csv", "score_quantiles.json", "class_pixels.csv",
                     "class_pixels.json", "class_count_series.csv", "score_histogram.png"):
            assert (out / name).exists(), name
        doc = json.loads(capsys.readouterr().out)
        assert doc["count"] == 30

    def test_stats_over_layout_histogram(self, tmp_path, capsys):
        sim = simulate(tmp_path)
        out = tmp_path / "stats"
        capsys.readouterr()
        assert main(["stats", "--layout", str(sim / "layout.json"), "--out", str(out)]) == 0
        assert (out / "class_histogram.csv").exists()
        assert (out / "class_histogram.png").exists()
        doc = json.loads(capsys.readouterr().out)
        assert doc["classes"] == 4

    def test_stats_requires_exactly_one_source(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["stats", "--out", str(tmp_path / "x")])
        assert exc.value.code == 2

    def test_eval_perfect_predictions_reach_full_miou(self, tmp_path, capsys):
        sim = simulate(tmp_path, accuracy="1.0")
        out = tmp_path / "eval"
        capsys.readouterr()
        assert main(["eval", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--jobs", "1", "--plot-data"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["miou"] == 1.0
        for name in ("confusion.csv", "iou.csv", "iou.json", "iou_per_class.png", "class_iou_series.csv"):
            assert (out / name).exists(), name

    def test_eval_with_prediction_label_dir(self, tmp_path, capsys):
        sim = simulate(tmp_path)
        pseudo = tmp_path / "pseudo"
        assert main(["pseudo-label", "--layout", str(sim / "layout.json"), "--out", str(pseudo),
                     "--tau-ssl", "0", "--jobs", "1"]) == 0
        out = tmp_path / "eval"
        capsys.readouterr()
        assert main(["eval", "--layout", str(sim / "layout.json"), "--out", str(out),
                     "--pred-labels", str(pseudo), "--jobs", "1", "--no-figures"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert 0.0 < doc["miou"] <= 1.0
        assert not (out / "iou_per_class.png").exists()


class TestPipeline:
    def test_matches_manual_stage_runs(self, tmp_path):
        sim = simulate(tmp_path)
        layout = str(sim / "layout.json")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"tau_c": 0.2}))
        root = tmp_path / "run"
        argv = ["pipeline", "--layout", layout, "--out", str(root), "--config", str(cfg),
                "--jobs", "1"]
        assert main(argv) == 0
        piped = snapshot(root)

        import shutil

        shutil.rmtree(root)
        common = ["--config", str(cfg), "--jobs", "1"]
        assert main(["pseudo-label", "--layout", layout, "--out", str(root / "pseudo")] + common) == 0
        assert main(["refine", "--layout", layout, "--pseudo", str(root / "pseudo"),
                     "--out", str(root / "refined")] + common) == 0
        assert main(["score", "--layout", layout, "--refined", str(root / "refined"),
                     "--out", str(root / "scored.jsonl")] + common) == 0
        assert main(["select", "--manifest", str(root / "scored.jsonl"),
                     "--out", str(root / "selected.jsonl"), "--config", str(cfg)]) == 0
        assert snapshot(root) == piped

    def test_dry_run_touches_nothing(self, tmp_path, capsys):
        sim = simulate(tmp_path)
        root = tmp_path / "run"
        capsys.readouterr()
        assert main(["pipeline", "--layout", str(sim / "layout.json"), "--out", str(root),
                     "--dry-run"]) == 0
        assert not root.exists()
        plan = json.loads(capsys.readouterr().out)
        assert [s["stage"] for s in plan["plan"]] == ["pseudo-label", "refine", "score", "select"]

    def test_jobs_do_not_change_bytes(self, tmp_path):
        sim = simulate(tmp_path)
        root = tmp_path / "run"
        base = ["pipeline", "--layout", str(sim / "layout.json"), "--out", str(root), "--top-percent", "50"]
        assert main(base + ["--jobs", "1"]) == 0
        first = snapshot(root)
        assert main(base + ["--jobs", "3"]) == 0
        assert snapshot(root) == first

    def test_bad_config_exits_2(self, tmp_path):
        sim = simulate(tmp_path)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"tau_ssl": 7.0}))
        assert main(["pipeline", "--layout", str(sim / "layout.json"), "--out", str(tmp_path / "x"),
                     "--config", str(cfg)]) == 2

    def test_missing_layout_exits_2(self, tmp_path):
        assert main(["pipeline", "--layout", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_internal_failure_exits_4(self, tmp_path, monkeypatch):
        import sdss.cli as cli_mod

        sim = simulate(tmp_path)

        def boom(*args, **kwargs):
            raise RuntimeError("induced invariant violation")

        monkeypatch.setattr(cli_mod, "run_select", boom)
        assert main(["pipeline", "--layout", str(sim / "layout.json"),
                     "--out", str(tmp_path / "run"), "--jobs", "1"]) == 4

    def test_corrupt_prediction_strict_exits_3(self, tmp_path):
        sim = simulate(tmp_path)
        victim = next((sim / "pred").glob("*.prb"))
        blob = bytearray(victim.read_bytes())
        blob[-1] ^= 0xFF
        victim.write_bytes(bytes(blob))
        assert main(["pipeline", "--layout", str(sim / "layout.json"),
                     "--out", str(tmp_path / "run"), "--strict", "--jobs", "1"]) == 3
