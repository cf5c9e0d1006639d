"""Command-line pipeline: simulate | train | calibrate | evaluate.

Every stage reads and writes under --out-dir with fixed file names, so the
stages can run as independent processes. All randomness derives from one
root seed via sha256(root:stage:index), which makes every stage rerunnable
byte-identically without coupling stages to each other.

Exit codes: 0 ok, 2 bad config/usage, 3 missing input, 4 data error
(degenerate classes, malformed files, binning), 5 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import calib, conformal, data, metrics, nets, predictors, sim

EXIT_CONFIG = 2
EXIT_MISSING_INPUT = 3
EXIT_DATA = 4
EXIT_DIVERGENCE = 5

PREDICTOR_KINDS = ("monolithic", "composite_image", "composite_latent")
SPECIFICITIES = ("specific", "independent")


def derive_seed(root: int, stage: str, index: int | str = 0) -> int:
    digest = hashlib.sha256(f"{root}:{stage}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = "runs/default"
    seed: int = 0
    sim_config: str = ""
    # data collection
    m: int = 5
    horizons: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9)
    windows: int = 20000
    max_len: int = 80
    fractions: tuple[float, float, float, float] = (0.4, 0.2, 0.2, 0.2)
    controller_id: int = 1
    kinds: tuple[str, ...] = (data.KIND_OBS_CONTROLLER, data.KIND_OBS_ACTION)
    # training
    predictors: tuple[str, ...] = PREDICTOR_KINDS
    specificities: tuple[str, ...] = SPECIFICITIES
    learning_rate: float = 3e-3
    evaluator_learning_rate: float = 1e-2
    ae_learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 100
    vae_max_epochs: int = 500
    evaluator_max_epochs: int = 200
    forecaster_max_epochs: int = 300
    hidden: int = 32
    evaluator_hidden: int = 48
    forecaster_hidden: int = 96
    latent_dim: int = 8
    ae_hidden: int = 256
    ae_lambda_latent: float = 1.0
    ae_lambda_safety: float = -1.0  # negative selects the pixel-count default
    ae_warmup_epochs: int = 0
    # calibration / conformal (defaults match the pole-cart hyperparameter row)
    bins: int = 10
    alpha: float = 0.05
    resamples: int = 200
    resample_size: int = 500
    quantile_rule: str = "standard"
    coverage_trials: int = 200

    def train_config(
        self,
        seed: int,
        max_epochs: int | None = None,
        learning_rate: float | None = None,
    ) -> nets.TrainConfig:
        return nets.TrainConfig(
            learning_rate=self.learning_rate if learning_rate is None else learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs if max_epochs is None else max_epochs,
            seed=seed,
        )


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v)


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


_LIST_FIELDS = {
    "horizons": _parse_int_list,
    "fractions": _parse_float_list,
    "kinds": _parse_str_list,
    "predictors": _parse_str_list,
    "specificities": _parse_str_list,
}


def load_run_config(path) -> dict:
    """key=value overrides for RunConfig fields."""
    valid = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in valid:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _LIST_FIELDS:
                out[key] = _LIST_FIELDS[key](value)
            else:
                default = getattr(RunConfig(), key)
                out[key] = type(default)(value)
    return out


def build_config(args) -> RunConfig:
    overrides = {}
    if args.config:
        overrides.update(load_run_config(args.config))
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    cfg = replace(RunConfig(), **overrides)
    if cfg.quantile_rule not in conformal.QUANTILE_RULES:
        raise ValueError(f"unknown quantile rule {cfg.quantile_rule!r}")
    for p in cfg.predictors:
        if p not in PREDICTOR_KINDS:
            raise ValueError(f"unknown predictor kind {p!r}")
    for s in cfg.specificities:
        if s not in SPECIFICITIES:
            raise ValueError(f"unknown specificity {s!r}")
    return cfg


# ---------------------------------------------------------------------------
# file layout

SPLITS = ("train", "calib", "valid", "test")


def data_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "data"


def models_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "models"


def calib_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "calib"


def reports_dir(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / "reports"


def window_file(cfg: RunConfig, kind: str, k: int, split: str) -> Path:
    return data_dir(cfg) / f"{kind}_k{k}_{split}.jsonl"


def forecast_file(cfg: RunConfig, kind: str, split: str) -> Path:
    return data_dir(cfg) / f"forecast_{kind}_{split}.jsonl"


def images_file(cfg: RunConfig, split: str) -> Path:
    return data_dir(cfg) / f"images_{split}.jsonl"


def model_name(pkind: str, specificity: str, k: int) -> str:
    return f"{pkind}_{specificity}_k{k}"


def bundle_file(cfg: RunConfig, pkind: str, specificity: str, k: int) -> Path:
    return models_dir(cfg) / f"{model_name(pkind, specificity, k)}.json"


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing input: {path}")
    return path


# ---------------------------------------------------------------------------
# simulate


def _generate_pool(cfg: RunConfig) -> dict[int, list[tuple[int, sim.Trajectory]]]:
    """Enough episodes per needed controller to cover the window target at max k.

    Only the controllers the requested dataset kinds consume are simulated:
    the whole set for observation-action data, just the designated one when
    only controller-specific data is requested.
    """
    controllers = sim.default_controllers()
    if data.KIND_OBS_ACTION in cfg.kinds:
        needed = controllers
    else:
        needed = [c for c in controllers if c.id == cfg.controller_id]
        if not needed:
            raise ValueError(f"no controller with id {cfg.controller_id}")
    k_max = max(cfg.horizons)
    min_len = cfg.m + k_max
    if cfg.max_len < min_len:
        raise ValueError(f"max_len {cfg.max_len} < m + k_max = {min_len}")
    physics = sim.SimConfig.from_file(cfg.sim_config) if cfg.sim_config else sim.SimConfig()
    pool: dict[int, list[tuple[int, sim.Trajectory]]] = {c.id: [] for c in needed}
    traj_id = 0
    episode = 0
    windows_per = {c.id: 0 for c in needed}
    # Round-robin over controllers until each has enough max-horizon windows.
    while min(windows_per.values()) < cfg.windows:
        ctrl = needed[episode % len(needed)]
        ep_seed = derive_seed(cfg.seed, "simulate-episode", f"{ctrl.id}-{episode}")
        init = sim.sample_initial_state(np.random.default_rng(ep_seed))
        traj = sim.run_episode(ctrl, init, cfg.max_len, seed=ep_seed, cfg=physics)
        episode += 1
        if len(traj) < min_len:
            continue
        pool[ctrl.id].append((traj_id, traj))
        windows_per[ctrl.id] += len(traj) - min_len + 1
        traj_id += 1
    return pool


def _split_trajs(entries, fracs, seed):
    ids = [tid for tid, _ in entries]
    rng = np.random.default_rng(seed)
    perm = [ids[i] for i in rng.permutation(len(ids))]
    counts = [int(f * len(ids)) for f in fracs]
    remainders = [f * len(ids) - c for f, c in zip(fracs, counts)]
    for _ in range(len(ids) - sum(counts)):
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1.0
    if any(c == 0 for c in counts):
        raise data.SplitError(f"a split would receive no trajectories: {counts}")
    out = []
    start = 0
    for c in counts:
        out.append(set(perm[start : start + c]))
        start += c
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    fracs = cfg.fractions
    if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1: {fracs}")
    data_dir(cfg).mkdir(parents=True, exist_ok=True)

    pool = _generate_pool(cfg)
    all_entries = sorted(
        (e for entries in pool.values() for e in entries), key=lambda e: e[0]
    )
    split_ids = _split_trajs(all_entries, fracs, derive_seed(cfg.seed, "split"))

    for kind in cfg.kinds:
        if kind == data.KIND_OBS_CONTROLLER:
            entries = pool[cfg.controller_id]
        elif kind == data.KIND_OBS_ACTION:
            entries = all_entries
        else:
            raise ValueError(f"unknown dataset kind {kind!r}")

        for k in cfg.horizons:
            for split_name, ids in zip(SPLITS, split_ids):
                samples = []
                for tid, traj in entries:
                    if tid in ids and len(traj) >= cfg.m + k:
                        samples.extend(
                            data.build_windows(traj, cfg.m, k, kind, traj_id=tid)
                        )
                ds = data.Dataset(kind, tuple(samples), cfg.m, k)
                labels = ds.labels()
                balanced = data.rebalance(
                    ds, derive_seed(cfg.seed, f"rebalance-{kind}-{k}", split_name)
                )
                data.save_dataset(balanced, window_file(cfg, kind, k, split_name))
                print(
                    f"{kind} k={k} {split_name}: {len(ds)} windows "
                    f"({labels.mean():.3f} safe) -> {len(balanced)} rebalanced"
                )

        # (m+1)-frame, k=0 windows: one-step forecasting pairs for this kind.
        # Only the train split is consumed (forecasters train on Z_t).
        for split_name, ids in zip(SPLITS[:1], split_ids[:1]):
            samples = []
            for tid, traj in entries:
                if tid in ids and len(traj) >= cfg.m + 1:
                    samples.extend(
                        data.build_windows(traj, cfg.m + 1, 0, kind, traj_id=tid)
                    )
            ds = data.Dataset(kind, tuple(samples), cfg.m + 1, 0)
            data.save_dataset(ds, forecast_file(cfg, kind, split_name))

    # Single-frame, k=0 windows over every controller: evaluator/autoencoder
    # training data plus clean test renders for evaluator metrics. Stored as
    # obs_action records since the frames come from mixed controllers.
    for split_name, ids in zip(("train", "test"), (split_ids[0], split_ids[3])):
        samples = []
        for tid, traj in all_entries:
            if tid in ids:
                samples.extend(
                    data.build_windows(traj, 1, 0, data.KIND_OBS_ACTION, traj_id=tid)
                )
        ds = data.Dataset(data.KIND_OBS_ACTION, tuple(samples), 1, 0)
        balanced = data.rebalance(ds, derive_seed(cfg.seed, "rebalance-images", split_name))
        data.save_dataset(balanced, images_file(cfg, split_name))
        print(
            f"images {split_name}: {len(ds)} frames "
            f"({ds.labels().mean():.3f} safe) -> {len(balanced)} rebalanced"
        )
    return 0


# ---------------------------------------------------------------------------
# train


def _write_loss_csv(path: Path, history: list[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for i, v in enumerate(history):
            writer.writerow([i, repr(float(v))])


def _dataset_kind(specificity: str) -> str:
    return (
        data.KIND_OBS_CONTROLLER if specificity == "specific" else data.KIND_OBS_ACTION
    )


def _forecast_pairs(ds: data.Dataset) -> list[data.ForecastSample]:
    """Slice (m+1)-frame windows into (m-frame window, next frame) pairs."""
    pairs = []
    for s in ds.samples:
        pairs.append(
            data.ForecastSample(
                window=s.window[:-1],
                actions=s.actions[:-1] if s.actions is not None else None,
                target=s.window[-1],
            )
        )
    return pairs


def cmd_train(cfg: RunConfig) -> int:
    models_dir(cfg).mkdir(parents=True, exist_ok=True)
    failures = []

    shared: dict[str, object] = {}

    def get_evaluator() -> predictors.Evaluator:
        if "evaluator" not in shared:
            ds = data.load_dataset(_require(images_file(cfg, "train")))
            images = [s.window[0] for s in ds.samples]
            ev, hist = predictors.train_evaluator(
                images,
                ds.labels(),
                augment=True,
                cfg=cfg.train_config(
                    derive_seed(cfg.seed, "train-evaluator"),
                    max_epochs=cfg.evaluator_max_epochs,
                    learning_rate=cfg.evaluator_learning_rate,
                ),
                hidden=(cfg.evaluator_hidden,),
            )
            _write_loss_csv(models_dir(cfg) / "loss_evaluator.csv", hist)
            shared["evaluator"] = ev
        return shared["evaluator"]

    def get_autoencoder() -> predictors.SafetyAutoencoder:
        if "autoencoder" not in shared:
            ds = data.load_dataset(_require(images_file(cfg, "train")))
            images = [s.window[0] for s in ds.samples]
            ae, hist = predictors.train_autoencoder(
                images,
                ds.labels(),
                get_evaluator(),
                cfg=cfg.train_config(
                    derive_seed(cfg.seed, "train-autoencoder"),
                    max_epochs=cfg.vae_max_epochs,
                    learning_rate=cfg.ae_learning_rate,
                ),
                latent_dim=cfg.latent_dim,
                hidden=cfg.ae_hidden,
                lambda_latent=cfg.ae_lambda_latent,
                lambda_safety=None if cfg.ae_lambda_safety < 0 else cfg.ae_lambda_safety,
                safety_warmup_epochs=cfg.ae_warmup_epochs,
            )
            _write_loss_csv(models_dir(cfg) / "loss_autoencoder.csv", hist)
            shared["autoencoder"] = ae
        return shared["autoencoder"]

    def get_image_forecaster(specificity: str) -> predictors.ImageForecaster:
        key = f"image_forecaster_{specificity}"
        if key not in shared:
            ds = data.load_dataset(
                _require(forecast_file(cfg, _dataset_kind(specificity), "train"))
            )
            fc, hist = predictors.train_image_forecaster(
                _forecast_pairs(ds),
                cfg=cfg.train_config(
                    derive_seed(cfg.seed, key), max_epochs=cfg.forecaster_max_epochs
                ),
                hidden=(cfg.forecaster_hidden,),
            )
            _write_loss_csv(models_dir(cfg) / f"loss_{key}.csv", hist)
            shared[key] = fc
        return shared[key]

    def get_latent_forecaster(specificity: str) -> predictors.LatentForecaster:
        key = f"latent_forecaster_{specificity}"
        if key not in shared:
            ds = data.load_dataset(
                _require(forecast_file(cfg, _dataset_kind(specificity), "train"))
            )
            fc, hist = predictors.train_latent_forecaster(
                _forecast_pairs(ds),
                get_autoencoder(),
                cfg=cfg.train_config(
                    derive_seed(cfg.seed, key), max_epochs=cfg.forecaster_max_epochs
                ),
            )
            _write_loss_csv(models_dir(cfg) / f"loss_{key}.csv", hist)
            shared[key] = fc
        return shared[key]

    for pkind in cfg.predictors:
        for specificity in cfg.specificities:
            for k in cfg.horizons:
                name = model_name(pkind, specificity, k)
                try:
                    if pkind == "monolithic":
                        ds = data.load_dataset(
                            _require(window_file(cfg, _dataset_kind(specificity), k, "train"))
                        )
                        model, hist = predictors.train_monolithic(
                            ds,
                            cfg.train_config(derive_seed(cfg.seed, "train-mono", name)),
                            hidden=(cfg.hidden,),
                        )
                        _write_loss_csv(models_dir(cfg) / f"loss_{name}.csv", hist)
                    elif pkind == "composite_image":
                        model = predictors.CompositeImagePredictor(
                            forecaster=get_image_forecaster(specificity),
                            evaluator=get_evaluator(),
                            m=cfg.m,
                            k=k,
                            controller_specific=specificity == "specific",
                        )
                    else:
                        model = predictors.CompositeLatentPredictor(
                            autoencoder=get_autoencoder(),
                            forecaster=get_latent_forecaster(specificity),
                            evaluator=get_evaluator(),
                            m=cfg.m,
                            k=k,
                            controller_specific=specificity == "specific",
                        )
                    predictors.save_predictor(model, bundle_file(cfg, pkind, specificity, k))
                    print(f"trained {name}")
                except nets.DivergenceError as exc:
                    failures.append((name, str(exc)))
                    print(f"DIVERGED {name}: {exc}", file=sys.stderr)

    if failures:
        print(f"{len(failures)} model(s) diverged", file=sys.stderr)
        return EXIT_DIVERGENCE
    return 0


# ---------------------------------------------------------------------------
# calibrate


def _each_bundle(cfg: RunConfig):
    for pkind in cfg.predictors:
        for specificity in cfg.specificities:
            for k in cfg.horizons:
                yield pkind, specificity, k, bundle_file(cfg, pkind, specificity, k)


def _scores_and_labels(cfg: RunConfig, model, specificity: str, k: int, split: str):
    ds = data.load_dataset(_require(window_file(cfg, _dataset_kind(specificity), k, split)))
    return predictors.dataset_scores(model, ds), ds.labels().astype(float)


def _write_bounds_csv(path: Path, bounds: conformal.ConformalBounds) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "range_lo", "range_hi", "c"])
        for j, ((lo, hi), c) in enumerate(zip(bounds.ranges, bounds.c)):
            writer.writerow([j, repr(lo), repr(hi), repr(float(c))])


def cmd_calibrate(cfg: RunConfig) -> int:
    calib_dir(cfg).mkdir(parents=True, exist_ok=True)
    for pkind, specificity, k, bundle in _each_bundle(cfg):
        model = predictors.load_predictor(_require(bundle))
        name = model_name(pkind, specificity, k)

        s_cal, y_cal = _scores_and_labels(cfg, model, specificity, k, "calib")
        candidates = calib.fit_all(s_cal, y_cal, num_bins=cfg.bins)
        selection = calib.select_min_ece(candidates, s_cal, y_cal, cfg.bins)
        calib.save_calibrator(
            selection.chosen, calib_dir(cfg) / f"{name}_calibrator.json"
        )
        with open(calib_dir(cfg) / f"{name}_selection.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "ece"])
            for kind in calib.KIND_ORDER:
                writer.writerow([kind, repr(selection.ece_by_kind[kind])])

        s_val, y_val = _scores_and_labels(cfg, model, specificity, k, "valid")
        g_val = selection.chosen.apply(s_val)
        bv = conformal.adaptive_binning((g_val, y_val), cfg.bins)
        for rule in conformal.QUANTILE_RULES:
            bounds = conformal.conformal_calibrate(
                bv,
                alpha=cfg.alpha,
                M=cfg.resamples,
                N=cfg.resample_size,
                rule=rule,
                seed=derive_seed(cfg.seed, "conformal", f"{name}-{rule}"),
            )
            _write_bounds_csv(calib_dir(cfg) / f"{name}_bounds_{rule}.csv", bounds)
        print(f"calibrated {name}: chose {selection.chosen.kind}")
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _read_bounds_csv(path: Path, cfg: RunConfig, rule: str) -> conformal.ConformalBounds:
    ranges = []
    cs = []
    with open(_require(path), newline="") as fh:
        for rec in csv.DictReader(fh):
            ranges.append((float(rec["range_lo"]), float(rec["range_hi"])))
            cs.append(float(rec["c"]))
    return conformal.ConformalBounds(
        c=np.array(cs),
        alpha=cfg.alpha,
        M=cfg.resamples,
        N=cfg.resample_size,
        quantile_rule=rule,
        ranges=tuple(ranges),
    )


def cmd_evaluate(cfg: RunConfig) -> int:
    reports_dir(cfg).mkdir(parents=True, exist_ok=True)
    all_metrics = []
    calibration_rows = []
    coverage_rows = []

    for pkind, specificity, k, bundle in _each_bundle(cfg):
        model = predictors.load_predictor(_require(bundle))
        name = model_name(pkind, specificity, k)
        calibrator = calib.load_calibrator(
            _require(calib_dir(cfg) / f"{name}_calibrator.json")
        )

        s_test, y_test = _scores_and_labels(cfg, model, specificity, k, "test")
        preds = (s_test > 0.5).astype(int)
        g_test = calibrator.apply(s_test)

        all_metrics.append(
            metrics.compute_report(
                preds, s_test, y_test, cfg.bins, k, f"{pkind}_{specificity}"
            )
        )
        ece_u, mce_u = metrics.ece_mce(s_test, y_test, cfg.bins)
        ece_c, mce_c = metrics.ece_mce(g_test, y_test, cfg.bins)
        calibration_rows.append(
            [f"{pkind}_{specificity}", k, calibrator.kind, ece_u, ece_c, mce_u, mce_c]
        )

        metrics.write_reliability_csv(
            metrics.reliability_data(s_test, y_test, cfg.bins),
            reports_dir(cfg) / f"reliability_{name}_uncal.csv",
        )
        primary_bounds = _read_bounds_csv(
            calib_dir(cfg) / f"{name}_bounds_{cfg.quantile_rule}.csv",
            cfg,
            cfg.quantile_rule,
        )
        metrics.write_reliability_csv(
            metrics.reliability_data(g_test, y_test, cfg.bins, primary_bounds),
            reports_dir(cfg) / f"reliability_{name}_cal.csv",
        )

        for rule in conformal.QUANTILE_RULES:
            bounds = _read_bounds_csv(
                calib_dir(cfg) / f"{name}_bounds_{rule}.csv", cfg, rule
            )
            report = conformal.empirical_coverage(
                bounds,
                (g_test, y_test),
                trials=cfg.coverage_trials,
                N=cfg.resample_size,
                seed=derive_seed(cfg.seed, "coverage", f"{name}-{rule}"),
            )
            for j, cov in enumerate(report.per_bin):
                coverage_rows.append(
                    [f"{pkind}_{specificity}", k, rule, str(j), float(cov), float(bounds.c[j])]
                )
            coverage_rows.append(
                [f"{pkind}_{specificity}", k, rule, "overall", report.overall, ""]
            )
        print(f"evaluated {name}")

    metrics.write_metrics_csv(all_metrics, reports_dir(cfg) / "metrics.csv")
    with open(reports_dir(cfg) / "calibration.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["predictor", "k", "calibrator", "ece_uncal", "ece_cal", "mce_uncal", "mce_cal"]
        )
        for row in calibration_rows:
            writer.writerow(row[:3] + [repr(v) for v in row[3:]])
    with open(reports_dir(cfg) / "coverage.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predictor", "k", "rule", "bin", "coverage", "c"])
        for pred, k, rule, b, cov, c in coverage_rows:
            writer.writerow([pred, k, rule, b, repr(cov), repr(c) if c != "" else ""])
    return 0


# ---------------------------------------------------------------------------
# entry point


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-dir", dest="out_dir", type=str)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--config", type=str, help="key=value RunConfig overrides")
    parser.add_argument("--m", type=int)
    parser.add_argument("--horizons", type=_parse_int_list)
    parser.add_argument("--bins", type=int, help="adaptive bin count Q")
    parser.add_argument("--alpha", type=float, help="miscoverage level")
    parser.add_argument("--resamples", type=int, help="resampled bins per bin (M)")
    parser.add_argument("--resample-size", dest="resample_size", type=int, help="draws per resample (N)")
    parser.add_argument("--quantile-rule", dest="quantile_rule", choices=conformal.QUANTILE_RULES)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safepred",
        description="Calibrated safety prediction pipeline for the pole-cart system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate and persist datasets")
    p_sim.add_argument("--windows", type=int, help="target max-horizon windows per controller")
    p_sim.add_argument("--max-len", dest="max_len", type=int)
    p_sim.add_argument("--fractions", type=_parse_float_list)
    p_sim.add_argument("--controller-id", dest="controller_id", type=int)
    p_sim.add_argument("--kinds", type=_parse_str_list)
    p_sim.add_argument("--sim-config", dest="sim_config", type=str, help="key=value physics constants")

    p_train = sub.add_parser("train", help="train predictor bundles")
    p_cal = sub.add_parser("calibrate", help="fit calibrators and conformal bounds")
    p_eval = sub.add_parser("evaluate", help="compute metrics, reliability, coverage")

    for p in (p_train, p_cal, p_eval):
        p.add_argument("--predictors", type=_parse_str_list)
        p.add_argument("--specificities", type=_parse_str_list)
    for p in (p_train,):
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--evaluator-learning-rate", dest="evaluator_learning_rate", type=float)
        p.add_argument("--ae-learning-rate", dest="ae_learning_rate", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--max-epochs", dest="max_epochs", type=int)
        p.add_argument("--vae-max-epochs", dest="vae_max_epochs", type=int)
        p.add_argument("--evaluator-max-epochs", dest="evaluator_max_epochs", type=int)
        p.add_argument("--forecaster-max-epochs", dest="forecaster_max_epochs", type=int)
        p.add_argument("--hidden", type=int)
        p.add_argument("--evaluator-hidden", dest="evaluator_hidden", type=int)
        p.add_argument("--forecaster-hidden", dest="forecaster_hidden", type=int)
        p.add_argument("--latent-dim", dest="latent_dim", type=int)
        p.add_argument("--ae-hidden", dest="ae_hidden", type=int)
        p.add_argument("--ae-lambda-latent", dest="ae_lambda_latent", type=float)
        p.add_argument("--ae-lambda-safety", dest="ae_lambda_safety", type=float)
        p.add_argument("--ae-warmup-epochs", dest="ae_warmup_epochs", type=int)
    p_eval.add_argument("--coverage-trials", dest="coverage_trials", type=int)

    for p in (p_sim, p_train, p_cal, p_eval):
        _add_common(p)
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (
        data.DatasetError,
        data.RebalanceError,
        data.SplitError,
        conformal.BinningError,
        conformal.QuantileIndexError,
        calib.CalibrationError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (nets.DivergenceError, sim.IntegrationBlowupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
