"""Post-hoc calibrators: fit five monotone score transforms, keep the min-ECE one.

All calibrators map a raw safe-probability in [0,1] to a calibrated one in
[0,1]. Parametric families (platt, temperature, beta) are fit by plain
full-batch gradient descent or a scalar line search; binning families
(histogram, isotonic) pool adjacent violators to stay monotone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import metrics
from .conformal import adaptive_binning, assign_bin

EPS = 1e-7
GD_ITERS = 2000
GD_LR = 0.1

KIND_ORDER = ("isotonic", "temperature", "platt", "beta", "histogram")


class CalibrationError(Exception):
    """Unusable calibration data (single class, too few samples)."""


def _clip01(s: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(s, dtype=float), EPS, 1.0 - EPS)


def _logit(s: np.ndarray) -> np.ndarray:
    p = _clip01(s)
    return np.log(p) - np.log(1.0 - p)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class Calibrator:
    kind: str
    params: dict

    def apply(self, scores) -> np.ndarray:
        scores = np.atleast_1d(np.asarray(scores, dtype=float))
        if self.kind == "platt":
            out = _sigmoid(self.params["a"] * _logit(scores) + self.params["b"])
        elif self.kind == "temperature":
            out = _sigmoid(_logit(scores) / self.params["T"])
        elif self.kind == "beta":
            p = _clip01(scores)
            out = _sigmoid(
                self.params["a"] * np.log(p)
                - self.params["b"] * np.log(1.0 - p)
                + self.params["c"]
            )
        elif self.kind == "isotonic":
            xs = np.asarray(self.params["breakpoints"])
            vs = np.asarray(self.params["values"])
            idx = np.clip(np.searchsorted(xs, scores, side="right") - 1, 0, len(vs) - 1)
            out = vs[idx]
        elif self.kind == "histogram":
            ranges = self.params["ranges"]
            vs = self.params["values"]
            out = np.array([vs[assign_bin(ranges, float(s))] for s in scores])
        else:
            raise ValueError(f"unknown calibrator kind {self.kind!r}")
        return np.clip(out, 0.0, 1.0)

    def apply_one(self, score: float) -> float:
        return float(self.apply(np.array([score]))[0])


def _require_both_classes(labels: np.ndarray, what: str) -> None:
    labels = np.asarray(labels)
    if not ((labels == 0).any() and (labels == 1).any()):
        raise CalibrationError(f"{what} needs both classes present")


def fit_platt(scores, labels) -> Calibrator:
    """Logistic regression on logit(score), full-batch GD."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(scores) < 2:
        raise CalibrationError("platt needs at least 2 samples")
    _require_both_classes(labels, "platt")
    z = _logit(scores)
    a, b = 1.0, 0.0
    for _ in range(GD_ITERS):
        p = _sigmoid(a * z + b)
        err = p - labels
        a -= GD_LR * float(np.mean(err * z))
        b -= GD_LR * float(np.mean(err))
    return Calibrator("platt", {"a": a, "b": b})


def fit_temperature(logit_pairs, labels) -> Calibrator:
    """Scalar T > 0 minimizing CE of softmax(logits / T), golden-section search."""
    logits = np.asarray(logit_pairs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ValueError("expected (n, 2) logit pairs")
    _require_both_classes(labels, "temperature")
    gap = logits[:, 1] - logits[:, 0]

    def ce(T: float) -> float:
        p = np.clip(_sigmoid(gap / T), EPS, 1.0 - EPS)
        return float(np.mean(-labels * np.log(p) - (1 - labels) * np.log(1.0 - p)))

    lo, hi = 0.05, 20.0
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = ce(x1), ce(x2)
    for _ in range(100):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = ce(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = ce(x2)
    return Calibrator("temperature", {"T": (lo + hi) / 2.0})


def pava(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: weighted least-squares nondecreasing fit."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        weights = np.ones_like(values)
    weights = np.asarray(weights, dtype=float)
    blocks = []  # (mean, weight, count)
    for v, w in zip(values, weights):
        blocks.append([v, w, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v1, w1, c1 = blocks.pop()
            v0, w0, c0 = blocks.pop()
            w = w0 + w1
            blocks.append([(v0 * w0 + v1 * w1) / w, w, c0 + c1])
    out = np.empty(len(values))
    pos = 0
    for v, _, c in blocks:
        out[pos : pos + c] = v
        pos += c
    return out


def fit_isotonic(scores, labels) -> Calibrator:
    """PAVA least-squares fit of labels against sorted scores.

    Tied scores are merged (weighted by multiplicity) before pooling so the
    fitted map is single-valued. Applied as a left-continuous step function
    clamped at the ends.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(scores) == 0:
        raise CalibrationError("isotonic needs at least 1 sample")
    order = np.argsort(scores, kind="stable")
    xs, ys = scores[order], labels[order]
    uniq, start = np.unique(xs, return_index=True)
    counts = np.diff(np.append(start, len(xs)))
    means = np.add.reduceat(ys, start) / counts
    fitted = pava(means, counts)
    return Calibrator(
        "isotonic", {"breakpoints": uniq.tolist(), "values": fitted.tolist()}
    )


def fit_histogram(scores, labels, num_bins: int) -> Calibrator:
    """Equal-count bins; bin value = safe fraction, PAV-pooled to monotone."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if num_bins < 1:
        raise ValueError("need at least one bin")
    if len(scores) < num_bins:
        raise CalibrationError(f"{len(scores)} samples < {num_bins} bins")
    bv = adaptive_binning((scores, labels), num_bins)
    values = np.array([l.mean() for _, l in bv.bins])
    counts = np.array([len(l) for _, l in bv.bins], dtype=float)
    values = pava(values, counts)
    return Calibrator(
        "histogram",
        {"ranges": [list(r) for r in bv.ranges], "values": values.tolist()},
    )


def fit_beta(scores, labels) -> Calibrator:
    """Constrained logistic fit on (ln s, -ln(1-s)); a, b kept nonnegative."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    _require_both_classes(labels, "beta")
    p = _clip01(scores)
    f1 = np.log(p)
    f2 = -np.log(1.0 - p)
    a, b, c = 1.0, 1.0, 0.0
    for _ in range(GD_ITERS):
        q = _sigmoid(a * f1 + b * f2 + c)
        err = q - labels
        a = max(0.0, a - GD_LR * float(np.mean(err * f1)))
        b = max(0.0, b - GD_LR * float(np.mean(err * f2)))
        c -= GD_LR * float(np.mean(err))
    return Calibrator("beta", {"a": a, "b": b, "c": c})


@dataclass(frozen=True)
class CalibSelection:
    chosen: Calibrator
    ece_by_kind: dict[str, float]


def select_min_ece(candidates, scores, labels, num_bins: int) -> CalibSelection:
    """Pick the candidate with minimum adaptive-bin ECE on (scores, labels).

    Exact ECE ties break by the fixed kind order isotonic, temperature,
    platt, beta, histogram.
    """
    if not candidates:
        raise ValueError("no candidate calibrators")
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    ece_by_kind = {}
    ranked = []
    for pos, cal in enumerate(candidates):
        ece, _ = metrics.ece_mce(cal.apply(scores), labels, num_bins)
        ece_by_kind[cal.kind] = ece
        order = KIND_ORDER.index(cal.kind) if cal.kind in KIND_ORDER else len(KIND_ORDER)
        ranked.append((ece, order, pos, cal))
    ranked.sort(key=lambda t: t[:3])
    return CalibSelection(chosen=ranked[0][3], ece_by_kind=ece_by_kind)


def fit_all(scores, labels, logit_pairs=None, num_bins: int = 10) -> list[Calibrator]:
    """Fit the five calibrator families on the same calibration data."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if logit_pairs is None:
        logit_pairs = np.column_stack([np.zeros(len(scores)), _logit(scores)])
    return [
        fit_isotonic(scores, labels),
        fit_temperature(logit_pairs, labels),
        fit_platt(scores, labels),
        fit_beta(scores, labels),
        fit_histogram(scores, labels, num_bins),
    ]


def save_calibrator(cal: Calibrator, path) -> None:
    with open(path, "w") as fh:
        json.dump({"kind": cal.kind, "params": cal.params}, fh, sort_keys=True, separators=(",", ":"))


def load_calibrator(path) -> Calibrator:
    with open(path) as fh:
        d = json.load(fh)
    return Calibrator(d["kind"], d["params"])
