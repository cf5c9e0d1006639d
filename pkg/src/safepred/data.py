"""Windowed safety datasets: construction, rebalancing, splitting, persistence.

A sample pairs the last m observations (optionally with the actions taken)
with the safety label k steps past the window's end. Two dataset kinds:
`obs_controller` (single fixed controller, no actions) and `obs_action`
(mixed controllers, actions included).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .sim import IMG_H, IMG_W, Trajectory

FORMAT_VERSION = 1

KIND_OBS_CONTROLLER = "obs_controller"
KIND_OBS_ACTION = "obs_action"


class DatasetError(Exception):
    """Malformed dataset file or inconsistent dataset contents."""


class RebalanceError(Exception):
    """One class is empty; 1:1 resampling is impossible (degenerate horizon)."""


class SplitError(Exception):
    """Invalid split fractions or a split that would receive no trajectories."""


@dataclass(frozen=True, eq=False)
class Sample:
    window: tuple[np.ndarray, ...]
    actions: tuple[int, ...] | None
    label: int
    horizon: int
    controller_id: int
    traj_id: int


@dataclass(frozen=True, eq=False)
class Dataset:
    kind: str
    samples: tuple[Sample, ...]
    m: int
    k: int

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def controller_ids(self) -> set[int]:
        return {s.controller_id for s in self.samples}

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=int)

    def validate(self) -> None:
        if self.kind not in (KIND_OBS_CONTROLLER, KIND_OBS_ACTION):
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        if self.kind == KIND_OBS_CONTROLLER and len(self.controller_ids) > 1:
            raise DatasetError("obs_controller dataset mixes controllers")
        for s in self.samples:
            if len(s.window) != self.m or s.horizon != self.k:
                raise DatasetError("sample does not match dataset m/k")
            if (s.actions is not None) != (self.kind == KIND_OBS_ACTION):
                raise DatasetError("action presence does not match dataset kind")


@dataclass(frozen=True)
class SplitSpec:
    train: float
    calib: float
    valid: float
    test: float
    seed: int = 0

    def fractions(self) -> tuple[float, float, float, float]:
        return (self.train, self.calib, self.valid, self.test)


@dataclass(frozen=True, eq=False)
class ForecastSample:
    """One-step forecasting pair: m-frame window plus the true next frame."""

    window: tuple[np.ndarray, ...]
    actions: tuple[int, ...] | None
    target: np.ndarray


def build_windows(
    traj: Trajectory, m: int, k: int, kind: str, traj_id: int = 0
) -> list[Sample]:
    """All valid m-windows of a trajectory, labeled k steps ahead."""
    n = len(traj)
    if n < m + k:
        raise DatasetError(f"trajectory of length {n} too short for m={m}, k={k}")
    out = []
    for i in range(m - 1, n - k):
        steps = traj.steps[i - m + 1 : i + 1]
        actions = None
        if kind == KIND_OBS_ACTION:
            actions = tuple(st.action.force_dir for st in steps)
        out.append(
            Sample(
                window=tuple(st.observation for st in steps),
                actions=actions,
                label=traj.steps[i + k].safety_label,
                horizon=k,
                controller_id=traj.controller_id,
                traj_id=traj_id,
            )
        )
    return out


def build_forecast_pairs(traj: Trajectory, m: int, kind: str) -> list[ForecastSample]:
    """Windows paired with the true next observation, for forecaster training."""
    n = len(traj)
    if n < m + 1:
        raise DatasetError(f"trajectory of length {n} too short for m={m} pairs")
    out = []
    for i in range(m - 1, n - 1):
        steps = traj.steps[i - m + 1 : i + 1]
        actions = None
        if kind == KIND_OBS_ACTION:
            actions = tuple(st.action.force_dir for st in steps)
        out.append(
            ForecastSample(
                window=tuple(st.observation for st in steps),
                actions=actions,
                target=traj.steps[i + 1].observation,
            )
        )
    return out


def build_image_labels(trajs: list[Trajectory]) -> tuple[list[np.ndarray], np.ndarray]:
    """Flat (observation, current safety label) pairs, for evaluator training."""
    images = []
    labels = []
    for traj in trajs:
        for st in traj.steps:
            images.append(st.observation)
            labels.append(st.safety_label)
    return images, np.array(labels, dtype=int)


def rebalance_image_labels(
    images, labels, seed: int
) -> tuple[list[np.ndarray], np.ndarray]:
    """1:1 with-replacement resampling of flat (image, label) pairs."""
    labels = np.asarray(labels, dtype=int)
    idx0 = np.flatnonzero(labels == 0)
    idx1 = np.flatnonzero(labels == 1)
    if len(idx0) == 0 or len(idx1) == 0:
        raise RebalanceError(
            f"cannot rebalance: {len(idx1)} safe / {len(idx0)} unsafe images"
        )
    n = max(len(idx0), len(idx1))
    rng = np.random.default_rng(seed)
    picks = np.concatenate(
        [idx0[rng.integers(0, len(idx0), size=n)], idx1[rng.integers(0, len(idx1), size=n)]]
    )
    picks = picks[rng.permutation(len(picks))]
    return [images[i] for i in picks], labels[picks]


def rebalance(ds: Dataset, seed: int) -> Dataset:
    """Resample with replacement to an exact 1:1 safe:unsafe balance.

    Both classes are redrawn to max(class counts) samples each, so the
    output size is 2*max(class counts).
    """
    unsafe = [s for s in ds.samples if s.label == 0]
    safe = [s for s in ds.samples if s.label == 1]
    if not unsafe or not safe:
        raise RebalanceError(
            f"cannot rebalance: {len(safe)} safe / {len(unsafe)} unsafe samples"
        )
    n = max(len(unsafe), len(safe))
    rng = np.random.default_rng(seed)
    drawn = [unsafe[i] for i in rng.integers(0, len(unsafe), size=n)]
    drawn += [safe[i] for i in rng.integers(0, len(safe), size=n)]
    order = rng.permutation(len(drawn))
    return Dataset(
        kind=ds.kind, samples=tuple(drawn[i] for i in order), m=ds.m, k=ds.k
    )


def split_dataset(
    ds: Dataset, spec: SplitSpec
) -> tuple[Dataset, Dataset, Dataset, Dataset]:
    """Partition into train/calib/valid/test at trajectory granularity.

    Trajectories are shuffled by the split seed and allocated whole, so no
    window ever straddles two splits.
    """
    fracs = spec.fractions()
    if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise SplitError(f"fractions must be positive and sum to 1, got {fracs}")

    traj_ids = sorted({s.traj_id for s in ds.samples})
    n = len(traj_ids)
    rng = np.random.default_rng(spec.seed)
    perm = [traj_ids[i] for i in rng.permutation(n)]

    counts = [int(f * n) for f in fracs]
    remainders = [f * n - c for f, c in zip(fracs, counts)]
    for _ in range(n - sum(counts)):
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    if any(c == 0 for c in counts):
        raise SplitError(f"a split would receive no trajectories: counts {counts}")

    splits = []
    start = 0
    for c in counts:
        ids = set(perm[start : start + c])
        start += c
        splits.append(
            Dataset(
                kind=ds.kind,
                samples=tuple(s for s in ds.samples if s.traj_id in ids),
                m=ds.m,
                k=ds.k,
            )
        )
    return tuple(splits)


def _sample_record(s: Sample) -> dict:
    rec = {
        "label": s.label,
        "controller_id": s.controller_id,
        "traj_id": s.traj_id,
        "window": [[round(float(v), 4) for v in f.ravel()] for f in s.window],
    }
    if s.actions is not None:
        rec["actions"] = list(s.actions)
    return rec


def save_dataset(ds: Dataset, path) -> None:
    if ds.samples:
        h, w = ds.samples[0].window[0].shape
    else:
        h, w = IMG_H, IMG_W
    header = {
        "kind": ds.kind,
        "m": ds.m,
        "k": ds.k,
        "H": h,
        "W": w,
        "version": FORMAT_VERSION,
        "count": len(ds.samples),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for s in ds.samples:
            fh.write(
                json.dumps(_sample_record(s), sort_keys=True, separators=(",", ":"))
                + "\n"
            )


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: bad header: {exc}") from exc
    for key in ("kind", "m", "k", "H", "W", "version", "count"):
        if key not in header:
            raise DatasetError(f"{path}: header missing {key!r}")
    if header["version"] != FORMAT_VERSION:
        raise DatasetError(
            f"{path}: version {header['version']} != {FORMAT_VERSION}"
        )
    if header["count"] != len(lines) - 1:
        raise DatasetError(
            f"{path}: truncated: header says {header['count']} records, "
            f"found {len(lines) - 1}"
        )
    h, w = header["H"], header["W"]
    samples = []
    for lineno, line in enumerate(lines[1:], 2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: bad record: {exc}") from exc
        window = []
        for flat in rec["window"]:
            if len(flat) != h * w:
                raise DatasetError(f"{path}:{lineno}: frame is not {h}x{w}")
            window.append(np.array(flat).reshape(h, w))
        samples.append(
            Sample(
                window=tuple(window),
                actions=tuple(rec["actions"]) if "actions" in rec else None,
                label=int(rec["label"]),
                horizon=header["k"],
                controller_id=int(rec["controller_id"]),
                traj_id=int(rec["traj_id"]),
            )
        )
    ds = Dataset(
        kind=header["kind"], samples=tuple(samples), m=header["m"], k=header["k"]
    )
    ds.validate()
    return ds


def samples_equal(a: Sample, b: Sample) -> bool:
    if (a.label, a.horizon, a.controller_id, a.traj_id, a.actions) != (
        b.label,
        b.horizon,
        b.controller_id,
        b.traj_id,
        b.actions,
    ):
        return False
    if len(a.window) != len(b.window):
        return False
    return all(np.array_equal(x, y) for x, y in zip(a.window, b.window))


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    return (
        (a.kind, a.m, a.k) == (b.kind, b.m, b.k)
        and len(a.samples) == len(b.samples)
        and all(samples_equal(x, y) for x, y in zip(a.samples, b.samples))
    )
