"""Render evaluation CSVs into static figures.

Three figure kinds, one per report file:
  reliability    - per-bin confidence vs empirical safe fraction, with
                   conformal error whiskers when the bounds column is filled
  ece_mce        - calibration error before/after calibration across horizons
  horizon_sweep  - F1 per predictor kind across horizons

Axis ranges are derived from the data, so the same CSV always produces the
same geometry.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

KINDS = ("reliability", "ece_mce", "horizon_sweep")

REQUIRED_COLUMNS = {
    "reliability": ("bin", "conf", "acc", "count", "c"),
    "ece_mce": ("predictor", "k", "ece_uncal", "ece_cal", "mce_uncal", "mce_cal"),
    "horizon_sweep": ("predictor", "k", "f1"),
}


class ColumnError(Exception):
    """Input CSV lacks a required column."""


class EmptyInputError(Exception):
    """Input CSV has a header but no rows."""


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input_csv: str
    output_image: str
    title: str = ""


def read_rows(path, kind: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise ColumnError(f"{path}: missing columns {missing} for {kind}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return rows


def _render_reliability(rows: list[dict], ax) -> None:
    confs = [float(r["conf"]) for r in rows]
    accs = [float(r["acc"]) for r in rows]
    bounds = [float(r["c"]) if r["c"] else None for r in rows]
    width = 0.8 * min(
        (b - a for a, b in zip(confs, confs[1:])), default=0.1
    )
    width = max(width, 0.02)
    ax.bar(confs, accs, width=width, color="#4878b0", edgecolor="black", label="empirical safe fraction")
    if any(b is not None for b in bounds):
        ax.errorbar(
            confs,
            confs,
            yerr=[b if b is not None else 0.0 for b in bounds],
            fmt="none",
            ecolor="#d1605e",
            capsize=3,
            label="conformal bound",
        )
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", label="perfect calibration")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("mean predicted safety chance")
    ax.set_ylabel("empirical safe fraction")
    ax.legend(loc="upper left", fontsize=8)


def _group_by_predictor(rows: list[dict]):
    order = []
    groups: dict[str, list[dict]] = {}
    for row in rows:
        name = row["predictor"]
        if name not in groups:
            groups[name] = []
            order.append(name)
        groups[name].append(row)
    return [(name, sorted(groups[name], key=lambda r: int(r["k"]))) for name in order]


def _render_ece_mce(rows: list[dict], ax) -> None:
    series = (
        ("ece_uncal", "ECE uncalibrated", "#d1605e", "--"),
        ("ece_cal", "ECE calibrated", "#d1605e", "-"),
        ("mce_uncal", "MCE uncalibrated", "#4878b0", "--"),
        ("mce_cal", "MCE calibrated", "#4878b0", "-"),
    )
    groups = _group_by_predictor(rows)
    top = 0.0
    for name, grp in groups:
        ks = [int(r["k"]) for r in grp]
        prefix = f"{name}: " if len(groups) > 1 else ""
        for col, label, color, style in series:
            vals = [float(r[col]) for r in grp]
            top = max(top, max(vals))
            ax.plot(ks, vals, style, color=color, marker="o", markersize=3, label=prefix + label)
    ax.set_xlabel("prediction horizon k")
    ax.set_ylabel("calibration error")
    ax.set_ylim(0.0, max(0.1, 1.1 * top))
    ax.legend(fontsize=8)


def _render_horizon_sweep(rows: list[dict], ax) -> None:
    for name, grp in _group_by_predictor(rows):
        ks = [int(r["k"]) for r in grp]
        f1s = [float(r["f1"]) for r in grp]
        ax.plot(ks, f1s, marker="o", markersize=3, label=name)
    ax.set_xlabel("prediction horizon k")
    ax.set_ylabel("F1 (safe class)")
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=8)


RENDERERS = {
    "reliability": _render_reliability,
    "ece_mce": _render_ece_mce,
    "horizon_sweep": _render_horizon_sweep,
}


def render(job: PlotJob):
    """Render one CSV into one image; returns the figure for inspection."""
    if job.kind not in RENDERERS:
        raise ValueError(f"unknown plot kind {job.kind!r}; expected one of {KINDS}")
    rows = read_rows(job.input_csv, job.kind)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    RENDERERS[job.kind](rows, ax)
    if job.title:
        ax.set_title(job.title)
    fig.tight_layout()
    Path(job.output_image).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.output_image)
    return fig
