"""Evaluation metrics (F1, FPR, ECE, MCE) and reliability-diagram export.

The positive class throughout is "safe" (label 1), so a false positive is an
actually-unsafe situation predicted safe - the error that matters most for a
safety monitor. ECE/MCE use equal-count (adaptive) bins, the same binning
the conformal stage is built on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .conformal import ConformalBounds, adaptive_binning


def _check_lengths(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty input")
    return a, b


def f1_score(predictions, labels) -> float:
    """F1 of the safe class; 0 when precision + recall is 0."""
    pred, lab = _check_lengths(predictions, labels)
    tp = int(np.sum((pred == 1) & (lab == 1)))
    fp = int(np.sum((pred == 1) & (lab == 0)))
    fn = int(np.sum((pred == 0) & (lab == 1)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def fpr(predictions, labels) -> float:
    """Fraction of actually-unsafe samples predicted safe."""
    pred, lab = _check_lengths(predictions, labels)
    fp = int(np.sum((pred == 1) & (lab == 0)))
    tn = int(np.sum((pred == 0) & (lab == 0)))
    return fp / (fp + tn) if fp + tn else 0.0


def ece_mce(scores, labels, num_bins: int) -> tuple[float, float]:
    """Expected and maximum calibration error over equal-count bins.

    Per bin: gap = |mean score - safe fraction|. ECE weights gaps by bin
    count over the binned total; the remainder dropped by binning is
    excluded from both metrics.
    """
    scores, labels = _check_lengths(scores, labels)
    bv = adaptive_binning((np.asarray(scores, float), np.asarray(labels, float)), num_bins)
    gaps = np.array([abs(s.mean() - l.mean()) for s, l in bv.bins])
    counts = np.array([len(s) for s, _ in bv.bins])
    ece = float(np.sum(gaps * counts / counts.sum()))
    return ece, float(gaps.max())


@dataclass(frozen=True)
class MetricsReport:
    f1: float
    fpr: float
    ece: float
    mce: float
    n_samples: int
    horizon: int
    predictor: str


def compute_report(
    predictions, scores, labels, num_bins: int, horizon: int, predictor: str
) -> MetricsReport:
    ece, mce = ece_mce(scores, labels, num_bins)
    return MetricsReport(
        f1=f1_score(predictions, labels),
        fpr=fpr(predictions, labels),
        ece=ece,
        mce=mce,
        n_samples=len(labels),
        horizon=horizon,
        predictor=predictor,
    )


@dataclass(frozen=True)
class ReliabilityRow:
    bin_index: int
    confidence: float   # mean score in the bin
    accuracy: float     # empirical safe fraction
    count: int
    bound: float | None  # conformal c_j when available


@dataclass(frozen=True)
class ReliabilityDiagram:
    rows: tuple[ReliabilityRow, ...]


def reliability_data(
    scores, labels, num_bins: int, bounds: ConformalBounds | None = None
) -> ReliabilityDiagram:
    scores, labels = _check_lengths(scores, labels)
    bv = adaptive_binning((np.asarray(scores, float), np.asarray(labels, float)), num_bins)
    rows = []
    for j, (s, l) in enumerate(bv.bins):
        rows.append(
            ReliabilityRow(
                bin_index=j,
                confidence=float(s.mean()),
                accuracy=float(l.mean()),
                count=len(s),
                bound=float(bounds.c[j]) if bounds is not None else None,
            )
        )
    return ReliabilityDiagram(rows=tuple(rows))


def write_reliability_csv(diagram: ReliabilityDiagram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "conf", "acc", "count", "c"])
        for row in diagram.rows:
            writer.writerow(
                [
                    row.bin_index,
                    repr(row.confidence),
                    repr(row.accuracy),
                    row.count,
                    "" if row.bound is None else repr(row.bound),
                ]
            )


def read_reliability_csv(path) -> ReliabilityDiagram:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                ReliabilityRow(
                    bin_index=int(rec["bin"]),
                    confidence=float(rec["conf"]),
                    accuracy=float(rec["acc"]),
                    count=int(rec["count"]),
                    bound=float(rec["c"]) if rec["c"] else None,
                )
            )
    return ReliabilityDiagram(rows=tuple(rows))


def write_metrics_csv(reports: list[MetricsReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predictor", "k", "f1", "fpr", "ece", "mce", "n"])
        for r in reports:
            writer.writerow(
                [r.predictor, r.horizon, repr(r.f1), repr(r.fpr), repr(r.ece), repr(r.mce), r.n_samples]
            )
