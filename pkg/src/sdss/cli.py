"""Command-line pipeline: simulate, pseudo-label, refine, score, select, stats, eval.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 internal
invariant violation. Progress goes to stderr as a single-line counter;
machine output goes to stdout or files. Every output embeds the effective
config in its provenance block. Outputs are byte-identical across reruns
and across ``--jobs`` values; set SOURCE_DATE_EPOCH to pin the provenance
timestamp as well.
"""
from __future__ import annotations

import argparse
import dataclasses
import functools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import ClassMapping, LabelMap, SamplingConfig, THRESHOLD, TOP_PERCENT
from .dataio import (
    DatasetLayout,
    load_conf_pair,
    load_label_png,
    load_prob_volume,
    read_manifest,
    save_conf_pair,
    save_label_png,
    save_prob_volume,
    write_manifest,
)
from .errors import ConfigError, InvalidPercent, SdssError
from .metrics import ConfusionMatrix, class_histogram, confusion, miou
from .oracle import oracle_score
from .reporting import (
    confusion_report,
    export_report,
    histogram_report,
    iou_report,
    render_bar_figure,
    render_score_histogram,
    subset_report_tables,
    write_series,
)
from .sampling import pseudo_label, pseudo_label_compact, refine
from .scoring import score, tally
from .selection import Manifest, ScoredRecord, select_threshold, select_top_percent, subset_stats
from .simulate import RNG_ALGORITHM, SimulationConfig, gen_label_map, mock_predict, plan_images

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

AUDIT_TOLERANCE = 1e-12


def _now_iso() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = int(epoch) if epoch else int(time.time())
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat(timespec="seconds")


def _provenance(stage: str, cfg: SamplingConfig, **extra) -> dict:
    prov = {
        "tool": "sdss",
        "tool_version": __version__,
        "created_at": _now_iso(),
        "stage": stage,
        "config": cfg.to_dict(),
    }
    prov.update(extra)
    return prov


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


class _Progress:
    """Single-line counter on stderr."""

    def __init__(self, label: str, total: int):
        self.label = label
        self.total = total
        self.n = 0
        self.enabled = total > 0 and sys.stderr.isatty()

    def step(self) -> None:
        self.n += 1
        if self.enabled:
            print(f"\r{self.label}: {self.n}/{self.total}", end="", file=sys.stderr, flush=True)

    def close(self) -> None:
        if self.enabled:
            print(file=sys.stderr)


def _run_tasks(fn, tasks: list, jobs: int, label: str) -> list:
    """Run per-image tasks inline or on a process pool; results keep task order."""
    progress = _Progress(label, len(tasks))
    results = []
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            results.append(fn(t))
            progress.step()
    else:
        chunk = max(1, len(tasks) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for res in pool.map(fn, tasks, chunksize=chunk):
                results.append(res)
                progress.step()
    progress.close()
    return results


@functools.lru_cache(maxsize=8)
def _mapping_cache(path: str) -> ClassMapping:
    return ClassMapping.from_json(path)


def _load_gt(gt_path: str, num_classes: int | None, mapping_path: str | None) -> LabelMap:
    if mapping_path:
        from .core import remap_labels

        raw = load_label_png(gt_path)
        return remap_labels(raw, _mapping_cache(mapping_path))
    return load_label_png(gt_path, num_classes)


def _load_pred(pred_ref, root: str, num_classes: int | None):
    root_path = Path(root)

    def resolve(p: str) -> str:
        q = Path(p)
        return str(q if q.is_absolute() else root_path / q)

    if isinstance(pred_ref, str):
        return load_prob_volume(resolve(pred_ref))
    if isinstance(pred_ref, dict) and {"argmax", "conf"} <= set(pred_ref):
        if num_classes is None:
            raise ConfigError("compact predictions require a known class count")
        return load_conf_pair(resolve(pred_ref["argmax"]), resolve(pred_ref["conf"]), num_classes)
    raise ConfigError(f"unrecognised prediction reference {pred_ref!r}")


# --- per-image workers (top level so they pickle) ---


def _pseudo_task(task: tuple) -> dict:
    image_id, pred_ref, root, num_classes, tau_ssl, out_png = task
    try:
        pred = _load_pred(pred_ref, root, num_classes)
        if hasattr(pred, "argmax"):
            lm = pseudo_label_compact(pred, tau_ssl)
        else:
            lm = pseudo_label(pred, tau_ssl)
        save_label_png(lm, out_png)
        labeled = float((lm.data != lm.ignore).mean()) if lm.data.size else 0.0
        return {"id": image_id, "out": out_png, "labeled_fraction": labeled, "error": None}
    except Exception as e:  # noqa: BLE001 - reported per entry
        return {"id": image_id, "error": f"{type(e).__name__}: {e}"}


def _refine_task(task: tuple) -> dict:
    image_id, gt_path, num_classes, mapping_path, pseudo_png, out_png, sidecar_path = task
    try:
        gt = _load_gt(gt_path, num_classes, mapping_path)
        pseudo = load_label_png(pseudo_png, gt.num_classes)
        refined = refine(pseudo, gt)
        save_label_png(refined, out_png)
        t = tally(refined, gt)
        sidecar = {
            "id": image_id,
            "n_image": t.n_image,
            "n_class": {str(k): int(v) for k, v in enumerate(t.n_class) if v > 0},
            "n_correct": {str(k): int(v) for k, v in enumerate(t.n_correct) if v > 0},
        }
        _write_json(Path(sidecar_path), sidecar)
        kept = float((refined.data != refined.ignore).mean()) if refined.data.size else 0.0
        return {"id": image_id, "out": out_png, "sidecar": sidecar_path, "kept_fraction": kept, "error": None}
    except Exception as e:  # noqa: BLE001
        return {"id": image_id, "error": f"{type(e).__name__}: {e}"}


def _score_task(task: tuple) -> dict:
    image_id, gt_path, num_classes, mapping_path, refined_png, ignore_in_total = task
    try:
        gt = _load_gt(gt_path, num_classes, mapping_path)
        refined = load_label_png(refined_png, gt.num_classes)
        t = tally(refined, gt)
        s = score(t, ignore_in_total)
        return {
            "id": image_id,
            "score": s,
            "n_image": t.n_image,
            "n_class": {int(k): int(v) for k, v in enumerate(t.n_class) if v > 0},
            "n_correct": {int(k): int(v) for k, v in enumerate(t.n_correct) if v > 0},
            "error": None,
        }
    except Exception as e:  # noqa: BLE001
        return {"id": image_id, "error": f"{type(e).__name__}: {e}"}


def _eval_task(task: tuple) -> dict:
    image_id, gt_path, num_classes, mapping_path, pred_ref, root, pred_png, tau_ssl = task
    try:
        gt = _load_gt(gt_path, num_classes, mapping_path)
        if pred_png is not None:
            pred_map = load_label_png(pred_png, gt.num_classes)
        else:
            pred = _load_pred(pred_ref, root, gt.num_classes)
            if hasattr(pred, "argmax"):
                pred_map = pseudo_label_compact(pred, tau_ssl)
            else:
                pred_map = pseudo_label(pred, tau_ssl)
        cm = confusion(pred_map, gt)
        return {"id": image_id, "counts": cm.counts, "error": None}
    except Exception as e:  # noqa: BLE001
        return {"id": image_id, "error": f"{type(e).__name__}: {e}"}


def _simulate_task(task: tuple) -> dict:
    image_id, scene, predictor, compact, gt_png, pred_a, pred_b = task
    gt = gen_label_map(scene)
    vol = mock_predict(gt, predictor)
    save_label_png(gt, gt_png)
    if compact:
        from .core import compress

        save_conf_pair(compress(vol), pred_a, pred_b)
    else:
        save_prob_volume(vol, pred_a)
    return {"id": image_id, "error": None}


# --- shared command plumbing ---


def _effective_config(args) -> SamplingConfig:
    cfg = SamplingConfig.from_json(args.config) if getattr(args, "config", None) else SamplingConfig()
    updates = {}
    if getattr(args, "tau_ssl", None) is not None:
        updates["tau_ssl"] = args.tau_ssl
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "tau_c", None) is not None:
        updates.update(selection_mode=THRESHOLD, tau_c=args.tau_c, top_percent=None)
    elif getattr(args, "top_percent", None) is not None:
        updates.update(selection_mode=TOP_PERCENT, top_percent=args.top_percent, tau_c=None)
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _open_layout(layout_path: str, cfg: SamplingConfig) -> tuple[DatasetLayout, str | None, int | None]:
    layout = DatasetLayout.from_json(layout_path)
    mapping_path = cfg.class_mapping or layout.mapping
    if mapping_path is not None:
        p = Path(mapping_path)
        if not p.is_absolute():
            candidate = Path(layout_path).parent / p
            mapping_path = str(candidate if candidate.exists() else p)
        num_classes = _mapping_cache(mapping_path).num_classes
    else:
        num_classes = layout.num_classes
    return layout, mapping_path, num_classes


def _check_errors(results: list[dict], strict: bool, label: str) -> tuple[list[dict], list[dict], int]:
    ok = [r for r in results if r.get("error") is None]
    bad = sorted((r for r in results if r.get("error") is not None), key=lambda r: r["id"])
    code = EXIT_OK
    if bad and strict:
        first = bad[0]
        print(f"{label}: entry {first['id']} failed: {first['error']}", file=sys.stderr)
        code = EXIT_DATA
    return ok, bad, code


def _summary_doc(prov: dict, ok: list[dict], bad: list[dict]) -> dict:
    return {
        "provenance": prov,
        "count": len(ok) + len(bad),
        "ok": len(ok),
        "failed": len(bad),
        "errors": [{"id": r["id"], "error": r["error"]} for r in bad],
    }


# --- commands ---


def run_pseudo_label(layout_path: str, out_dir: str, cfg: SamplingConfig, jobs: int, strict: bool) -> int:
    layout, mapping_path, num_classes = _open_layout(layout_path, cfg)
    out = Path(out_dir)
    tasks = []
    no_pred = []
    for e in layout.entries:
        if e.pred is None:
            no_pred.append({"id": e.image_id, "error": "MissingPrediction: entry has no prediction file"})
            continue
        tasks.append((e.image_id, e.pred, str(layout.root), num_classes, cfg.tau_ssl, str(out / f"{e.image_id}.png")))
    results = _run_tasks(_pseudo_task, tasks, jobs, "pseudo-label") + no_pred
    ok, bad, code = _check_errors(results, strict, "pseudo-label")
    if code != EXIT_OK:
        return code
    ok_sorted = sorted(ok, key=lambda r: r["id"])
    prov = _provenance("pseudo-label", cfg, layout=str(layout_path), out=str(out_dir))
    doc = _summary_doc(prov, ok, bad)
    fractions = [r["labeled_fraction"] for r in ok_sorted]
    doc["labeled_fraction_mean"] = float(np.mean(fractions)) if fractions else 0.0
    doc["entries"] = [
        {"id": r["id"], "output": Path(r["out"]).name, "labeled_fraction": r["labeled_fraction"]}
        for r in ok_sorted
    ]
    _write_json(out / "summary.json", doc)
    return EXIT_OK


def run_refine(layout_path: str, pseudo_dir: str, out_dir: str, cfg: SamplingConfig, jobs: int, strict: bool) -> int:
    layout, mapping_path, num_classes = _open_layout(layout_path, cfg)
    _require_class_count(num_classes, mapping_path)
    out = Path(out_dir)
    pseudo = Path(pseudo_dir)
    tasks = [
        (
            e.image_id,
            str(layout.resolve(e.gt)),
            num_classes,
            mapping_path,
            str(pseudo / f"{e.image_id}.png"),
            str(out / f"{e.image_id}.png"),
            str(out / f"{e.image_id}.json"),
        )
        for e in layout.entries
    ]
    results = _run_tasks(_refine_task, tasks, jobs, "refine")
    ok, bad, code = _check_errors(results, strict, "refine")
    if code != EXIT_OK:
        return code
    ok_sorted = sorted(ok, key=lambda r: r["id"])
    prov = _provenance("refine", cfg, layout=str(layout_path), pseudo=str(pseudo_dir), out=str(out_dir))
    doc = _summary_doc(prov, ok, bad)
    kept = [r["kept_fraction"] for r in ok_sorted]
    doc["kept_fraction_mean"] = float(np.mean(kept)) if kept else 0.0
    doc["entries"] = [
        {"id": r["id"], "output": Path(r["out"]).name, "kept_fraction": r["kept_fraction"]} for r in ok_sorted
    ]
    _write_json(out / "summary.json", doc)
    return EXIT_OK


def _require_class_count(num_classes: int | None, mapping_path: str | None) -> None:
    if num_classes is None and mapping_path is None:
        raise ConfigError("layout must declare num_classes or reference a class mapping")


def run_score(layout_path: str, refined_dir: str, out_path: str, cfg: SamplingConfig, jobs: int,
              strict: bool, audit: float = 0.0) -> int:
    layout, mapping_path, num_classes = _open_layout(layout_path, cfg)
    _require_class_count(num_classes, mapping_path)
    refined = Path(refined_dir)
    tasks = [
        (
            e.image_id,
            str(layout.resolve(e.gt)),
            num_classes,
            mapping_path,
            str(refined / f"{e.image_id}.png"),
            cfg.ignore_in_total,
        )
        for e in layout.entries
    ]
    results = _run_tasks(_score_task, tasks, jobs, "score")
    ok, bad, code = _check_errors(results, strict, "score")
    if code != EXIT_OK:
        return code
    ok_sorted = sorted(ok, key=lambda r: r["id"])

    if audit > 0 and ok_sorted:
        step = max(1, round(1.0 / audit))
        for r in ok_sorted[::step]:
            task = next(t for t in tasks if t[0] == r["id"])
            gt = _load_gt(task[1], task[2], task[3])
            refined_map = load_label_png(task[4], gt.num_classes)
            ref = oracle_score(refined_map, gt, cfg.ignore_in_total)
            if abs(ref - r["score"]) > AUDIT_TOLERANCE:
                print(
                    f"score: audit mismatch on {r['id']}: {r['score']!r} vs oracle {ref!r}",
                    file=sys.stderr,
                )
                return EXIT_INTERNAL

    by_id = {e.image_id: e for e in layout.entries}
    records = []
    for r in ok_sorted:
        entry = by_id[r["id"]]
        paths = {"gt": entry.gt, "refined": f"{r['id']}.png"}
        if entry.pred is not None and isinstance(entry.pred, str):
            paths["pred"] = entry.pred
        records.append(
            ScoredRecord(
                image_id=r["id"],
                score=r["score"],
                n_image=r["n_image"],
                n_class=r["n_class"],
                n_correct=r["n_correct"],
                paths=paths,
            )
        )
    prov = _provenance(
        "score", cfg, layout=str(layout_path), refined=str(refined_dir),
        errors=[{"id": r["id"], "error": r["error"]} for r in bad],
    )
    write_manifest(Manifest(records, prov), out_path)
    return EXIT_OK


def run_select(manifest_path: str, out_path: str, cfg: SamplingConfig) -> int:
    manifest = read_manifest(manifest_path)
    prov = _provenance(
        "select", cfg, source_manifest=str(manifest_path), input_count=len(manifest),
    )
    if cfg.selection_mode == THRESHOLD:
        selected = select_threshold(manifest.records, cfg.tau_c, prov)
    else:
        selected = select_top_percent(manifest.records, cfg.top_percent, prov)
    write_manifest(selected, out_path)
    print(json.dumps({"input": len(manifest), "selected": len(selected)}))
    return EXIT_OK


def _mapping_names(mapping_path: str | None) -> list[str] | None:
    if mapping_path:
        try:
            return _mapping_cache(mapping_path).class_names
        except SdssError:
            return None
    return None


def run_stats_manifest(manifest_path: str, out_dir: str, cfg: SamplingConfig,
                       plot_data: bool, figures: bool) -> int:
    manifest = read_manifest(manifest_path)
    report = subset_stats(manifest)
    out = Path(out_dir)
    prov = _provenance("stats", cfg, source_manifest=str(manifest_path))
    for stem, rep in subset_report_tables(report, prov):
        export_report(rep, "csv", out / f"{stem}.csv")
        export_report(rep, "json", out / f"{stem}.json")
    if plot_data:
        classes = sorted(report.class_pixels)
        write_series(out / "class_count_series.csv", ["class", "count"],
                     [[k, report.class_pixels[k]] for k in classes])
    if figures:
        names = _mapping_names(cfg.class_mapping)
        classes = sorted(report.class_pixels)
        labels = [names[k] if names and k < len(names) else str(k) for k in classes]
        render_bar_figure(
            out / "class_pixels.png", labels, [report.class_pixels[k] for k in classes],
            "subset class pixel counts", "pixels", log_scale=True,
        )
        render_score_histogram(out / "score_histogram.png", [r.score for r in manifest.records])
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def run_stats_layout(layout_path: str, out_dir: str, cfg: SamplingConfig,
                     plot_data: bool, figures: bool) -> int:
    layout, mapping_path, num_classes = _open_layout(layout_path, cfg)
    _require_class_count(num_classes, mapping_path)
    maps = (_load_gt(str(layout.resolve(e.gt)), num_classes, mapping_path) for e in layout.entries)
    counts = class_histogram(maps)
    out = Path(out_dir)
    prov = _provenance("stats", cfg, layout=str(layout_path))
    names = _mapping_names(mapping_path)
    rep = histogram_report(counts, prov, names)
    export_report(rep, "csv", out / "class_histogram.csv")
    export_report(rep, "json", out / "class_histogram.json")
    if plot_data:
        write_series(out / "class_count_series.csv", ["class", "count"],
                     [[k, int(c)] for k, c in enumerate(counts)])
    if figures:
        labels = [names[k] if names and k < len(names) else str(k) for k in range(len(counts))]
        render_bar_figure(out / "class_histogram.png", labels, [int(c) for c in counts],
                          "GT class pixel counts", "pixels", log_scale=True)
    print(json.dumps({"classes": int(len(counts)), "pixels": int(counts.sum())}))
    return EXIT_OK


def run_eval(layout_path: str, out_dir: str, cfg: SamplingConfig, jobs: int, strict: bool,
             pred_labels: str | None, tau_ssl: float, eval_classes: list[int] | None,
             plot_data: bool, figures: bool) -> int:
    layout, mapping_path, num_classes = _open_layout(layout_path, cfg)
    _require_class_count(num_classes, mapping_path)
    tasks = []
    for e in layout.entries:
        pred_png = str(Path(pred_labels) / f"{e.image_id}.png") if pred_labels else None
        tasks.append(
            (e.image_id, str(layout.resolve(e.gt)), num_classes, mapping_path, e.pred,
             str(layout.root), pred_png, tau_ssl)
        )
    results = _run_tasks(_eval_task, tasks, jobs, "eval")
    ok, bad, code = _check_errors(results, strict, "eval")
    if code != EXIT_OK:
        return code
    if not ok:
        print(json.dumps({"miou": None, "images": 0}))
        return EXIT_OK
    k = ok[0]["counts"].shape[0]
    acc = ConfusionMatrix.zeros(k)
    for r in sorted(ok, key=lambda r: r["id"]):
        acc = ConfusionMatrix(acc.counts + r["counts"], k)
    iou, mean = miou(acc, eval_classes)
    out = Path(out_dir)
    prov = _provenance("eval", cfg, layout=str(layout_path), tau_ssl_eval=tau_ssl,
                       eval_classes=eval_classes,
                       errors=[{"id": r["id"], "error": r["error"]} for r in bad])
    names = _mapping_names(mapping_path)
    export_report(confusion_report(acc.counts, prov), "csv", out / "confusion.csv")
    export_report(confusion_report(acc.counts, prov), "json", out / "confusion.json")
    rep = iou_report(iou, mean, prov, names)
    export_report(rep, "csv", out / "iou.csv")
    export_report(rep, "json", out / "iou.json")
    if plot_data:
        write_series(out / "class_iou_series.csv", ["class", "iou"],
                     [[kk, None if np.isnan(v) else float(v)] for kk, v in enumerate(iou)])
    if figures:
        labels = [names[kk] if names and kk < len(names) else str(kk) for kk in range(k)]
        render_bar_figure(out / "iou_per_class.png", labels,
                          [0.0 if np.isnan(v) else float(v) for v in iou],
                          f"per-class IoU (mean {mean:.4f})" if not np.isnan(mean) else "per-class IoU",
                          "IoU")
    print(json.dumps({"miou": None if np.isnan(mean) else mean, "images": len(ok)}))
    return EXIT_OK


def run_simulate(out_dir: str, sim: SimulationConfig, jobs: int) -> int:
    out = Path(out_dir)
    images = plan_images(sim)
    tasks = []
    entries = []
    for im in images:
        gt_rel = f"gt/{im.image_id}.png"
        if sim.compact:
            pred_ref: object = {"argmax": f"pred/{im.image_id}_argmax.png", "conf": f"pred/{im.image_id}_conf.prb"}
            pred_a = str(out / pred_ref["argmax"])
            pred_b = str(out / pred_ref["conf"])
        else:
            pred_ref = f"pred/{im.image_id}.prb"
            pred_a = str(out / pred_ref)
            pred_b = ""
        tasks.append((im.image_id, im.scene, im.predictor, sim.compact, str(out / gt_rel), pred_a, pred_b))
        entries.append({"id": im.image_id, "gt": gt_rel, "pred": pred_ref})
    _run_tasks(_simulate_task, tasks, jobs, "simulate")

    mapping = ClassMapping.identity(sim.num_classes, name=f"identity{sim.num_classes}")
    mapping.to_json(out / "mapping.json")
    layout_doc = {
        "root": ".",
        "num_classes": sim.num_classes,
        "mapping": "mapping.json",
        "entries": entries,
    }
    _write_json(out / "layout.json", layout_doc)
    prov = {
        "tool": "sdss",
        "tool_version": __version__,
        "created_at": _now_iso(),
        "stage": "simulate",
        "rng_algorithm": RNG_ALGORITHM,
        "simulation": sim.to_dict(),
    }
    _write_json(out / "provenance.json", prov)
    print(json.dumps({"images": sim.count, "out": str(out)}))
    return EXIT_OK


def run_pipeline(layout_path: str, out_root: str, cfg: SamplingConfig, jobs: int, strict: bool,
                 dry_run: bool) -> int:
    root = Path(out_root)
    pseudo_dir = str(root / "pseudo")
    refined_dir = str(root / "refined")
    scored = str(root / "scored.jsonl")
    selected = str(root / "selected.jsonl")
    plan = [
        ("pseudo-label", {"layout": layout_path, "out": pseudo_dir, "tau_ssl": cfg.tau_ssl}),
        ("refine", {"layout": layout_path, "pseudo": pseudo_dir, "out": refined_dir}),
        ("score", {"layout": layout_path, "refined": refined_dir, "out": scored}),
        ("select", {"manifest": scored, "out": selected, "mode": cfg.selection_mode,
                    "tau_c": cfg.tau_c, "top_percent": cfg.top_percent}),
    ]
    if dry_run:
        print(json.dumps({"plan": [{"stage": s, **params} for s, params in plan]}, indent=2))
        return EXIT_OK
    code = run_pseudo_label(layout_path, pseudo_dir, cfg, jobs, strict)
    if code != EXIT_OK:
        return code
    code = run_refine(layout_path, pseudo_dir, refined_dir, cfg, jobs, strict)
    if code != EXIT_OK:
        return code
    code = run_score(layout_path, refined_dir, scored, cfg, jobs, strict)
    if code != EXIT_OK:
        return code
    return run_select(scored, selected, cfg)


# --- argument parsing ---


def _add_common(p: argparse.ArgumentParser, layout: bool = True) -> None:
    p.add_argument("--config", help="JSON sampling config; flags override its fields")
    if layout:
        p.add_argument("--layout", required=True, help="dataset layout JSON")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    p.add_argument("--strict", action="store_true", help="abort on the first per-entry failure")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sdss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pseudo-label", help="threshold predictions into pseudo-label maps")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--tau-ssl", type=float, default=None, dest="tau_ssl")

    p = sub.add_parser("refine", help="keep pseudo-labels that match ground truth")
    _add_common(p)
    p.add_argument("--pseudo", required=True, help="directory of pseudo-label PNGs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="score refined maps and write a manifest")
    _add_common(p)
    p.add_argument("--refined", required=True, help="directory of refined label PNGs")
    p.add_argument("--out", required=True)
    p.add_argument("--audit", type=float, default=0.0,
                   help="fraction of entries re-checked against the naive oracle")

    p = sub.add_parser("select", help="cut a manifest by threshold or top percent")
    p.add_argument("--config")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--tau-c", type=float, default=None, dest="tau_c")
    group.add_argument("--top-percent", type=float, default=None, dest="top_percent")

    p = sub.add_parser("stats", help="subset statistics or GT class histogram")
    p.add_argument("--config")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--layout")
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", action="store_true", dest="plot_data",
                   help="also write bare (class, count) series CSVs")
    p.add_argument("--no-figures", action="store_true", dest="no_figures")

    p = sub.add_parser("eval", help="confusion matrix and mIoU against ground truth")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pred-labels", dest="pred_labels",
                   help="directory of predicted label PNGs (default: argmax of layout predictions)")
    p.add_argument("--tau-ssl", type=float, default=0.0, dest="tau_ssl",
                   help="confidence threshold applied before evaluation (default 0: plain argmax)")
    p.add_argument("--eval-classes", dest="eval_classes",
                   help="comma-separated class ids included in the mean")
    p.add_argument("--plot-data", action="store_true", dest="plot_data")
    p.add_argument("--no-figures", action="store_true", dest="no_figures")

    p = sub.add_parser("simulate", help="generate a synthetic dataset in the standard layout")
    p.add_argument("--config", help="JSON with simulation fields; flags override")
    p.add_argument("--out", required=True)
    p.add_argument("--images", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--min-classes", type=int, default=None, dest="min_classes")
    p.add_argument("--granularity", type=float, default=None)
    p.add_argument("--ignore-fraction", type=float, default=None, dest="ignore_fraction")
    p.add_argument("--accuracy", type=float, default=None)
    p.add_argument("--compact", action="store_true", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("pipeline", help="pseudo-label, refine, score and select in one run")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--tau-ssl", type=float, default=None, dest="tau_ssl")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--tau-c", type=float, default=None, dest="tau_c")
    group.add_argument("--top-percent", type=float, default=None, dest="top_percent")
    p.add_argument("--dry-run", action="store_true", dest="dry_run")
    return parser


def _simulation_config(args) -> SimulationConfig:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
    flag_map = {
        "images": "count",
        "width": "width",
        "height": "height",
        "classes": "num_classes",
        "min_classes": "min_classes",
        "granularity": "granularity",
        "ignore_fraction": "ignore_fraction",
        "accuracy": "accuracy",
        "compact": "compact",
        "seed": "seed",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            doc[key] = val
    known = {f.name for f in dataclasses.fields(SimulationConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown simulation keys: {sorted(unknown)}")
    for tup in ("correct_confidence", "wrong_confidence"):
        if tup in doc:
            doc[tup] = tuple(doc[tup])
    return SimulationConfig(**doc)


def _dispatch(args) -> int:
    if args.command == "pseudo-label":
        cfg = _effective_config(args)
        return run_pseudo_label(args.layout, args.out, cfg, args.jobs, args.strict)
    if args.command == "refine":
        cfg = _effective_config(args)
        return run_refine(args.layout, args.pseudo, args.out, cfg, args.jobs, args.strict)
    if args.command == "score":
        cfg = _effective_config(args)
        return run_score(args.layout, args.refined, args.out, cfg, args.jobs, args.strict, args.audit)
    if args.command == "select":
        cfg = _effective_config(args)
        return run_select(args.manifest, args.out, cfg)
    if args.command == "stats":
        cfg = _effective_config(args)
        if args.manifest:
            return run_stats_manifest(args.manifest, args.out, cfg, args.plot_data, not args.no_figures)
        return run_stats_layout(args.layout, args.out, cfg, args.plot_data, not args.no_figures)
    if args.command == "eval":
        cfg = _effective_config(args)
        eval_classes = None
        if args.eval_classes:
            try:
                eval_classes = [int(c) for c in args.eval_classes.split(",") if c.strip()]
            except ValueError as e:
                raise ConfigError(f"bad --eval-classes: {e}") from e
        return run_eval(args.layout, args.out, cfg, args.jobs, args.strict, args.pred_labels,
                        args.tau_ssl, eval_classes, args.plot_data, not args.no_figures)
    if args.command == "simulate":
        sim = _simulation_config(args)
        return run_simulate(args.out, sim, args.jobs)
    if args.command == "pipeline":
        cfg = _effective_config(args)
        return run_pipeline(args.layout, args.out, cfg, args.jobs, args.strict, args.dry_run)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, InvalidPercent) as e:
        print(f"sdss: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SdssError as e:
        print(f"sdss: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001 - invariant violation or bug
        print(f"sdss: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
