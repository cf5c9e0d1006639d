"""Equal-count binning and per-bin conformal error bounds for chance predictions.

The bound construction resamples each validation bin, scores each resample by
the absolute gap between its mean predicted chance and its empirical safe
fraction, and takes a rank-based quantile of those gaps. Two quantile rules
are supported: `standard` is the split-conformal rank ceil((M+1)(1-alpha))
(clamped to M) and is the default; `paper` is ceil((M/2+1)(1-alpha)), kept
behind a flag because it selects a much lower rank and cannot reach the
nominal coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

QUANTILE_RULES = ("paper", "standard")


class BinningError(Exception):
    """Fewer pairs than bins."""


class QuantileIndexError(Exception):
    """Requested conformal rank exceeds the number of resamples."""


@dataclass(frozen=True)
class BinnedValidation:
    bins: tuple[tuple[np.ndarray, np.ndarray], ...]  # (scores, labels) per bin
    ranges: tuple[tuple[float, float], ...]          # (min, max) score per bin
    n_dropped: int

    @property
    def num_bins(self) -> int:
        return len(self.bins)

    @property
    def bin_count(self) -> int:
        return len(self.bins[0][0])


@dataclass(frozen=True)
class ConformalBounds:
    c: np.ndarray
    alpha: float
    M: int
    N: int
    quantile_rule: str
    ranges: tuple[tuple[float, float], ...]

    @property
    def num_bins(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class IntervalPrediction:
    score: float
    bin_index: int
    lo: float
    hi: float


def _as_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 1:
        scores, labels = pairs
    else:
        scores = [g for g, _ in pairs]
        labels = [phi for _, phi in pairs]
    return np.asarray(scores, dtype=float), np.asarray(labels, dtype=float)


def adaptive_binning(pairs, num_bins: int) -> BinnedValidation:
    """Sort by score and chunk into `num_bins` equal-count bins.

    Stable sort (ties keep input order). The remainder after
    floor(n / num_bins) * num_bins, i.e. the highest scores, is dropped so
    every bin holds exactly the same count.
    """
    scores, labels = _as_pairs(pairs)
    n = len(scores)
    if n < num_bins:
        raise BinningError(f"{n} pairs cannot fill {num_bins} bins")
    per = n // num_bins
    order = np.argsort(scores, kind="stable")[: per * num_bins]
    bins = []
    ranges = []
    for j in range(num_bins):
        idx = order[j * per : (j + 1) * per]
        bins.append((scores[idx], labels[idx]))
        ranges.append((float(scores[idx[0]]), float(scores[idx[-1]])))
    return BinnedValidation(
        bins=tuple(bins), ranges=tuple(ranges), n_dropped=n - per * num_bins
    )


def quantile_index(M: int, alpha: float, rule: str) -> int:
    """1-based rank of the conformal quantile among M nonconformity scores."""
    if rule == "paper":
        n = math.ceil((M / 2 + 1) * (1 - alpha))
        if n > M:
            need = math.ceil(2 * ((n / (1 - alpha)) - 1))
            raise QuantileIndexError(
                f"rank {n} > M={M} under rule=paper; need M >= {need}"
            )
        return n
    if rule == "standard":
        return min(math.ceil((M + 1) * (1 - alpha)), M)
    raise ValueError(f"unknown quantile rule {rule!r}")


def _resample_deltas(
    scores: np.ndarray, labels: np.ndarray, trials: int, size: int, rng
) -> np.ndarray:
    idx = rng.integers(0, len(scores), size=(trials, size))
    return np.abs(scores[idx].mean(axis=1) - labels[idx].mean(axis=1))


def conformal_calibrate(
    bv: BinnedValidation,
    alpha: float,
    M: int,
    N: int,
    rule: str = "standard",
    seed: int = 0,
) -> ConformalBounds:
    """Per-bin error radii c_j from M resamples of N pairs each.

    Deterministic given seed; each bin uses its own derived stream so the
    per-bin loops are order-independent.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must be in (0, 0.5), got {alpha}")
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    rank = quantile_index(M, alpha, rule)
    c = np.empty(bv.num_bins)
    for j, (scores, labels) in enumerate(bv.bins):
        rng = np.random.default_rng([seed, j])
        deltas = np.sort(_resample_deltas(scores, labels, M, N, rng))
        c[j] = deltas[rank - 1]
    return ConformalBounds(
        c=c, alpha=alpha, M=M, N=N, quantile_rule=rule, ranges=bv.ranges
    )


def assign_bin(ranges, score: float) -> int:
    """Locate a score among stored bin score-ranges.

    Below every range -> first bin; above -> last; inside a range -> that bin
    (lowest if boundary values are shared); in a gap between ranges -> the
    nearer boundary, ties to the lower bin.
    """
    if score <= ranges[0][0]:
        return 0
    if score >= ranges[-1][1]:
        return len(ranges) - 1
    for j, (lo, hi) in enumerate(ranges):
        if lo <= score <= hi:
            return j
        if score < lo:  # in the gap between bin j-1 and bin j
            below = score - ranges[j - 1][1]
            above = lo - score
            return j - 1 if below <= above else j
    return len(ranges) - 1


def interval_predict(bounds: ConformalBounds, score: float) -> IntervalPrediction:
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score must be in [0, 1], got {score}")
    j = assign_bin(bounds.ranges, score)
    radius = float(bounds.c[j])
    return IntervalPrediction(
        score=score,
        bin_index=j,
        lo=max(0.0, score - radius),
        hi=min(1.0, score + radius),
    )


@dataclass(frozen=True)
class CoverageReport:
    per_bin: np.ndarray
    overall: float
    trials_per_bin: int


def empirical_coverage(
    bounds: ConformalBounds, pairs, trials: int, N: int, seed: int = 0
) -> CoverageReport:
    """Fraction of fresh resampled bins whose gap stays within c_j.

    Fresh pairs must come from the same split family as the binning data;
    they are binned with the same equal-count procedure, then each bin is
    resampled `trials` times.
    """
    try:
        fresh = adaptive_binning(pairs, bounds.num_bins)
    except BinningError as exc:
        raise BinningError(f"insufficient fresh data: {exc}") from exc
    per_bin = np.empty(bounds.num_bins)
    for j, (scores, labels) in enumerate(fresh.bins):
        rng = np.random.default_rng([seed, j])
        deltas = _resample_deltas(scores, labels, trials, N, rng)
        per_bin[j] = float(np.mean(deltas <= bounds.c[j]))
    return CoverageReport(
        per_bin=per_bin, overall=float(per_bin.mean()), trials_per_bin=trials
    )
