"""Tabular report emission (CSV/JSON) and figure rendering for the CLI report path.

CSV files carry the report kind and the config snapshot as ``#`` comment
lines above the header row; JSON files keep full float precision. The two
forms convert losslessly for integer payloads.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class Report:
    kind: str
    columns: list[str]
    rows: list[list]
    config: dict = field(default_factory=dict)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def _json_cell(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def export_report(report: Report, fmt: str, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        doc = {
            "kind": report.kind,
            "config": report.config,
            "columns": report.columns,
            "rows": [[_json_cell(v) for v in row] for row in report.rows],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# kind: {report.kind}\n")
        buf.write(f"# config: {json.dumps(report.config, separators=(',', ':'))}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_csv_cell(v) for v in row])
        path.write_text(buf.getvalue(), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_report(path: str | Path) -> Report:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return Report(
            kind=doc["kind"],
            columns=list(doc["columns"]),
            rows=[list(r) for r in doc["rows"]],
            config=doc.get("config", {}),
        )
    kind = ""
    config: dict = {}
    data_lines = []
    for line in text.splitlines():
        if line.startswith("# kind:"):
            kind = line.split(":", 1)[1].strip()
        elif line.startswith("# config:"):
            config = json.loads(line.split(":", 1)[1].strip())
        elif line:
            data_lines.append(line)
    if not data_lines:
        raise ValueError(f"{path}: no CSV header found")
    reader = csv.reader(data_lines)
    columns = next(reader)
    rows = [[_parse_cell(c) for c in row] for row in reader]
    return Report(kind=kind, columns=columns, rows=rows, config=config)


def write_series(path: str | Path, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    """Bare two-column style series (class/count, iteration/mIoU, ...) for plotting tools."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def histogram_report(counts: np.ndarray, config: dict, class_names: Sequence[str] | None = None) -> Report:
    if class_names is not None:
        rows = [[int(k), class_names[k] if k < len(class_names) else "", int(c)] for k, c in enumerate(counts)]
        return Report("class_histogram", ["class", "name", "count"], rows, config)
    rows = [[int(k), int(c)] for k, c in enumerate(counts)]
    return Report("class_histogram", ["class", "count"], rows, config)


def iou_report(iou: np.ndarray, mean: float, config: dict, class_names: Sequence[str] | None = None) -> Report:
    cfg = dict(config)
    cfg["miou"] = None if math.isnan(mean) else mean
    if class_names is not None:
        rows = [
            [int(k), class_names[k] if k < len(class_names) else "", _json_cell(float(v))]
            for k, v in enumerate(iou)
        ]
        return Report("iou", ["class", "name", "iou"], rows, cfg)
    rows = [[int(k), _json_cell(float(v))] for k, v in enumerate(iou)]
    return Report("iou", ["class", "iou"], rows, cfg)


def confusion_report(counts: np.ndarray, config: dict) -> Report:
    k = counts.shape[0]
    columns = ["gt_class"] + [f"pred_{j}" for j in range(k)] + ["unlabeled"]
    rows = [[g] + [int(c) for c in counts[g]] for g in range(k)]
    return Report("confusion", columns, rows, config)


def subset_report_tables(report, config: dict) -> list[tuple[str, Report]]:
    """Tabular views of a SubsetReport, keyed by file stem."""
    quant_rows = [[name, val] for name, val in report.score_quantiles.items()]
    classes = sorted(set(report.class_pixels) | set(report.class_correct))
    class_rows = [
        [k, report.class_pixels.get(k, 0), report.class_correct.get(k, 0)] for k in classes
    ]
    cfg = dict(config)
    cfg["count"] = report.count
    cfg["total_pixels"] = report.total_pixels
    return [
        ("score_quantiles", Report("score_quantiles", ["quantile", "score"], quant_rows, cfg)),
        ("class_pixels", Report("subset_class_pixels", ["class", "gt_pixels", "correct_pixels"], class_rows, cfg)),
    ]


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_bar_figure(
    path: str | Path,
    labels: Sequence,
    values: Sequence[float],
    title: str,
    ylabel: str,
    log_scale: bool = False,
) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(max(6.0, 0.4 * len(labels) + 2.0), 4.0))
    positions = np.arange(len(labels))
    vals = [0.0 if v is None or (isinstance(v, float) and math.isnan(v)) else v for v in values]
    ax.bar(positions, vals, color="#4c72b0")
    ax.set_xticks(positions)
    ax.set_xticklabels([str(l) for l in labels], rotation=60, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    if log_scale and max(vals, default=0) > 0:
        ax.set_yscale("log")
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_score_histogram(path: str | Path, scores: Sequence[float], title: str = "score distribution") -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if len(scores):
        ax.hist(list(scores), bins=40, color="#4c72b0")
    ax.set_title(title)
    ax.set_xlabel("class-balance score")
    ax.set_ylabel("images")
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
