"""Command-line front end.

Subcommands: generate, estimate, track, bench, predict, esprit,
model-order. All artifacts land in --out-dir: JSON for reports, CSV for
curves. Exit codes: 0 success, 2 usage, 3 data/format, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bench import compare_kernels, run_bench, untrained_bundle
from .channel import DatasetSpec, synth_channel_tensor, synth_freq_response
from .config import SystemConfig, load_config
from .dataset_io import config_from_metadata, generate_dataset, load_dataset, read_metadata
from .errors import (
    ConfigurationError,
    EstimationError,
    FormatError,
    MpcProfError,
    NumericError,
    TrackLostError,
)
from .esprit import EspritConfig, esprit_delays, ls_amp_phase
from .estimator import estimate_initial, track
from .initializer import load_bundle, nn_infer, peak_pick_init, prepare_input
from .model_order import hosvd_singular_values, select_model_order
from .predictor import evaluate_horizon, fit_tracks, horizon_to_csv, is_model_violation, predict_csi
from .profiler import QuantizerSpec, default_bank, profile, profiling_loss, reconstruct, to_db
from .scenario import load_scenario, random_drift_scenario, synthesize_truth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def write_cdf_csv(losses_db: list[float], path: str) -> None:
    """Empirical CDF of per-channel losses, sorted so both columns rise."""
    xs = sorted(float(x) for x in losses_db)
    n = len(xs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("loss_db,probability\n")
        for i, x in enumerate(xs):
            fh.write(f"{x:.6f},{(i + 1) / n:.6f}\n")


def _write_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pool_map(fn, n_items: int, workers: int) -> list:
    """Run fn(i) for i in range(n_items); results come back sorted by i."""
    if workers <= 1:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        out = list(pool.map(fn, range(n_items)))
    return out


def _load_system_config(args) -> SystemConfig:
    if args.config:
        return load_config(args.config)
    return SystemConfig()


def _dataset_config(dataset_dir: str, args) -> SystemConfig:
    # an explicit --config wins; otherwise the dataset's own metadata does
    if args.config:
        return load_config(args.config)
    return config_from_metadata(read_metadata(dataset_dir))


def _out_path(args, name: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _scenario_from_args(args, config: SystemConfig, parser: argparse.ArgumentParser):
    if args.scenario:
        return load_scenario(args.scenario)
    if args.dataset:
        meta = read_metadata(args.dataset)
        raw = dict(meta["spec"])
        if args.seed is not None:
            raw["seed"] = args.seed
        return random_drift_scenario(DatasetSpec(**raw), config, args.channel,
                                     delay_rate=args.delay_rate_ts * config.sample_period)
    parser.error("either --scenario or --dataset is required")


def cmd_generate(args) -> int:
    config = _load_system_config(args)
    try:
        with open(args.spec_file, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.spec_file!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{args.spec_file!r} must hold a JSON object")
    known = {f for f in DatasetSpec.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"unknown dataset spec keys {sorted(unknown)}")
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = DatasetSpec(**raw)
    except TypeError as exc:
        raise FormatError(f"bad dataset spec: {exc}") from exc
    meta = generate_dataset(spec, config, args.out_dir, force=args.force)
    print(json.dumps({"out_dir": args.out_dir,
                      "n_channels": meta["spec"]["n_channels"]}, indent=2))
    return EXIT_OK


def cmd_estimate(args) -> int:
    config = _dataset_config(args.dataset, args)
    records = load_dataset(args.dataset, max_channels=args.max_channels)
    quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)

    bundle = None
    if args.method == "nn":
        if not args.weights:
            print("error: method 'nn' needs --weights FILE; without trained "
                  "weights use --method peak as the starting-point fallback",
                  file=sys.stderr)
            return EXIT_USAGE
        bundle = load_bundle(args.weights)

    def one(i: int) -> dict:
        rec = records[i]
        prof = profile(rec.cir)
        t0 = time.perf_counter()
        if args.method == "start":
            rep = estimate_initial(prof, rec.theta.order, config,
                                   quantizer=quantizer, bank=bank)
            theta, loss_db = rep.theta_hat, rep.loss_db
        elif args.method == "peak":
            theta = peak_pick_init(prof, rec.theta.order, config)
            loss_db = to_db(profiling_loss(prof, reconstruct(
                theta, config, quantizer=quantizer, bank=bank,
                n_taps=len(prof.samples))))
        else:
            theta = nn_infer(prepare_input(rec.cir, config), bundle, config)
            loss_db = to_db(profiling_loss(prof, reconstruct(
                theta, config, quantizer=quantizer, bank=bank,
                n_taps=len(prof.samples))))
        elapsed = time.perf_counter() - t0
        return {"index": rec.index, "loss_db": float(loss_db),
                "elapsed_s": elapsed, "theta_hat": theta.to_dict()}

    rows = _pool_map(one, len(records), args.workers)
    rows.sort(key=lambda r: r["index"])
    losses = [r["loss_db"] for r in rows]
    results = {
        "format_version": 1,
        "method": args.method,
        "dataset": os.path.abspath(args.dataset),
        "n_channels": len(rows),
        "median_loss_db": float(np.median(losses)),
        "channels": rows,
    }
    res_path = _out_path(args, f"estimate_{args.method}_results.json")
    cdf_path = _out_path(args, f"estimate_{args.method}_cdf.csv")
    _write_json(results, res_path)
    write_cdf_csv(losses, cdf_path)
    print(json.dumps({"results": res_path, "cdf": cdf_path,
                      "median_loss_db": results["median_loss_db"]}, indent=2))
    return EXIT_OK


def cmd_track(args) -> int:
    config = _load_system_config(args)
    parser = args._parser
    scenario = _scenario_from_args(args, config, parser)
    if args.steps < 1:
        parser.error("--steps must be >= 1")
    quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)
    pairs = synthesize_truth(scenario, config, list(range(args.steps + 1)))

    rows = []
    rep = estimate_initial(pairs[0][1], scenario.order, config,
                           quantizer=quantizer, bank=bank)
    rows.append({"t": 0, "mode": "start", "loss_db": rep.loss_db,
                 "elapsed_s": rep.elapsed_s, "theta_hat": rep.theta_hat.to_dict()})
    prev = rep.theta_hat
    for t in range(1, args.steps + 1):
        rep = track(prev, pairs[t][1], config, quantizer=quantizer, bank=bank)
        rows.append({"t": t, "mode": "track", "loss_db": rep.loss_db,
                     "elapsed_s": rep.elapsed_s,
                     "theta_hat": rep.theta_hat.to_dict()})
        prev = rep.theta_hat

    results = {
        "format_version": 1,
        "scenario": scenario.to_dict(),
        "steps": args.steps,
        "median_track_loss_db": float(np.median([r["loss_db"] for r in rows[1:]])),
        "rows": rows,
    }
    res_path = _out_path(args, "track_results.json")
    csv_path = _out_path(args, "track_curve.csv")
    _write_json(results, res_path)
    horizon_to_csv([(r["t"], r["loss_db"]) for r in rows], csv_path)
    print(json.dumps({"results": res_path, "curve": csv_path,
                      "median_track_loss_db": results["median_track_loss_db"]},
                     indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _dataset_config(args.dataset, args)
    records = load_dataset(args.dataset, max_channels=args.max_channels)
    bundle = load_bundle(args.weights) if args.weights else None
    report = run_bench(records, config, args.trials, bundle=bundle)
    out = report.to_dict()
    if args.compare_kernels:
        out["kernels"] = compare_kernels(records, config, trials=args.trials)
    res_path = _out_path(args, "bench_report.json")
    _write_json(out, res_path)
    lines = [f"{r.method:24s} {r.median_elapsed_s * 1e3:10.3f} ms "
             f"{r.median_loss_db:9.2f} dB" for r in report.rows]
    print("\n".join(lines))
    print(json.dumps({"report": res_path, "ordering_ok": report.ordering_ok},
                     indent=2))
    return EXIT_OK


def cmd_predict(args) -> int:
    config = _load_system_config(args)
    parser = args._parser
    scenario = _scenario_from_args(args, config, parser)
    t_a, t_b = args.observe
    if t_b - t_a + 1 < 2:
        parser.error("--observe must span at least 2 instants")
    if args.horizon < 0:
        parser.error("--horizon must be >= 0")
    quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)

    observe_ts = list(range(t_a, t_b + 1))
    horizon_ts = list(range(t_b + 1, t_b + 1 + args.horizon))
    pairs = synthesize_truth(scenario, config, observe_ts + horizon_ts)
    observed = pairs[:len(observe_ts)]

    rep = estimate_initial(observed[0][1], scenario.order, config,
                           quantizer=quantizer, bank=bank)
    estimates = [rep.theta_hat]
    prev = rep.theta_hat
    for _, prof_t in observed[1:]:
        rep = track(prev, prof_t, config, quantizer=quantizer, bank=bank)
        estimates.append(rep.theta_hat)
        prev = rep.theta_hat

    tracks = fit_tracks(estimates, times=np.asarray(observe_ts, dtype=np.float64))
    predicted = [predict_csi(tracks, float(t), config) for t in horizon_ts]
    truth_profs = [prof for _, prof in pairs[len(observe_ts):]]
    rows = evaluate_horizon(truth_profs, predicted, t_indices=horizon_ts)

    csv_path = _out_path(args, "predict_horizon.csv")
    horizon_to_csv(rows, csv_path)
    results = {
        "format_version": 1,
        "scenario": scenario.to_dict(),
        "observe": [t_a, t_b],
        "horizon": args.horizon,
        "rows": [{"t": t, "loss_db": float(loss),
                  "violation": is_model_violation(loss)} for t, loss in rows],
    }
    if rows:
        results["median_loss_db"] = float(np.median([loss for _, loss in rows]))
    res_path = _out_path(args, "predict_results.json")
    _write_json(results, res_path)
    print(json.dumps({"results": res_path, "curve": csv_path,
                      "n_steps": len(rows)}, indent=2))
    return EXIT_OK


def cmd_esprit(args) -> int:
    config = _dataset_config(args.dataset, args)
    records = load_dataset(args.dataset, max_channels=args.max_channels)
    quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)

    def one(i: int) -> dict:
        rec = records[i]
        y = synth_freq_response(rec.theta, config)
        cfg = EspritConfig(model_order=args.order or rec.theta.order,
                           use_forward_backward=not args.no_fb)
        t0 = time.perf_counter()
        taus = esprit_delays(y, cfg, config)
        theta = ls_amp_phase(taus, y, config)
        elapsed = time.perf_counter() - t0
        prof = profile(rec.cir)
        loss_db = to_db(profiling_loss(prof, reconstruct(
            theta, config, quantizer=quantizer, bank=bank,
            n_taps=len(prof.samples))))
        truth = np.sort(rec.theta.delays)
        err = (float(np.max(np.abs(np.sort(theta.delays) - truth)))
               if theta.order == rec.theta.order else None)
        return {"index": rec.index, "loss_db": float(loss_db),
                "elapsed_s": elapsed, "max_delay_error_s": err,
                "theta_hat": theta.to_dict()}

    rows = _pool_map(one, len(records), args.workers)
    rows.sort(key=lambda r: r["index"])
    losses = [r["loss_db"] for r in rows]
    results = {
        "format_version": 1,
        "dataset": os.path.abspath(args.dataset),
        "n_channels": len(rows),
        "median_loss_db": float(np.median(losses)),
        "channels": rows,
    }
    res_path = _out_path(args, "esprit_results.json")
    cdf_path = _out_path(args, "esprit_cdf.csv")
    _write_json(results, res_path)
    write_cdf_csv(losses, cdf_path)
    print(json.dumps({"results": res_path, "cdf": cdf_path,
                      "median_loss_db": results["median_loss_db"]}, indent=2))
    return EXIT_OK


def cmd_model_order(args) -> int:
    config = _dataset_config(args.dataset, args)
    records = load_dataset(args.dataset, max_channels=args.max_channels)
    seed = args.seed if args.seed is not None else 0
    tilts = config.tilt_angles
    azis = config.azimuth_angles

    def one(i: int) -> dict:
        rec = records[i]
        rng = np.random.default_rng((seed, rec.index))
        angles = [(tilts[rng.integers(len(tilts))], azis[rng.integers(len(azis))])
                  for _ in range(rec.theta.order)]
        rates = rng.uniform(-np.pi / 8, np.pi / 8, rec.theta.order)
        rot = np.exp(1j * np.outer(rates, np.arange(args.instants)))
        tensor = synth_channel_tensor(rec.theta, config, angles,
                                      n_instants=args.instants,
                                      instant_rotations=rot)
        sv = hosvd_singular_values(tensor)
        order = select_model_order(sv, noise_floor_db=args.floor_db)
        return {"index": rec.index, "true_order": rec.theta.order,
                "selected_order": order, "correct": order == rec.theta.order}

    rows = _pool_map(one, len(records), args.workers)
    rows.sort(key=lambda r: r["index"])
    accuracy = float(np.mean([r["correct"] for r in rows])) if rows else 0.0
    results = {
        "format_version": 1,
        "dataset": os.path.abspath(args.dataset),
        "n_channels": len(rows),
        "floor_db": args.floor_db,
        "instants": args.instants,
        "accuracy": accuracy,
        "channels": rows,
    }
    res_path = _out_path(args, "model_order_results.json")
    _write_json(results, res_path)
    print(json.dumps({"results": res_path, "accuracy": accuracy}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="system config JSON overriding defaults")
    common.add_argument("--seed", type=int, default=None,
                        help="seed override for seeded subcommands")
    common.add_argument("--workers", type=int, default=1,
                        help="worker threads for per-channel work")
    common.add_argument("--out-dir", default=".", help="artifact directory")
    common.add_argument("--force", action="store_true",
                        help="overwrite existing outputs")

    parser = argparse.ArgumentParser(
        prog="mpcprof",
        description="Multipath component profiling, tracking and prediction.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common],
                       help="generate a synthetic channel dataset")
    p.add_argument("spec_file", help="dataset spec JSON")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("estimate", parents=[common],
                       help="run an estimator over a dataset, emit CDF")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--method", choices=("start", "peak", "nn"), default="start")
    p.add_argument("--weights", help="weight bundle for --method nn")
    p.add_argument("--max-channels", type=int, default=None)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("track", parents=[common],
                       help="cold start then track a drifting scenario")
    p.add_argument("--scenario", help="scenario JSON with evolution laws")
    p.add_argument("--dataset", help="draw base parameters from this dataset")
    p.add_argument("--channel", type=int, default=0,
                   help="dataset channel index for the base parameters")
    p.add_argument("--delay-rate-ts", type=float, default=0.1,
                   help="delay drift per step in tap periods (dataset mode)")
    p.add_argument("--steps", type=int, default=10)
    p.set_defaults(fn=cmd_track)

    p = sub.add_parser("bench", parents=[common],
                       help="latency/accuracy benchmark over all methods")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--max-channels", type=int, default=8)
    p.add_argument("--weights", help="trained bundle for the inference row")
    p.add_argument("--compare-kernels", action="store_true",
                   help="also time the pure and compiled kernel backends")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("predict", parents=[common],
                       help="observe a scenario, extrapolate, score the horizon")
    p.add_argument("--scenario", help="scenario JSON with evolution laws")
    p.add_argument("--dataset", help="draw base parameters from this dataset")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--delay-rate-ts", type=float, default=0.1)
    p.add_argument("--observe", type=int, nargs=2, default=(10, 30),
                   metavar=("FIRST", "LAST"))
    p.add_argument("--horizon", type=int, default=70)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("esprit", parents=[common],
                       help="subspace delay baseline over a dataset")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--order", type=int, default=None,
                   help="model order override (default: ground truth)")
    p.add_argument("--no-fb", action="store_true",
                   help="disable forward-backward averaging")
    p.add_argument("--max-channels", type=int, default=None)
    p.set_defaults(fn=cmd_esprit)

    p = sub.add_parser("model-order", parents=[common],
                       help="singular-value order selection accuracy")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--floor-db", type=float, default=-25.0)
    p.add_argument("--instants", type=int, default=8)
    p.add_argument("--max-channels", type=int, default=None)
    p.set_defaults(fn=cmd_model_order)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # subcommands that validate ranges need the parser for usage errors
    args._parser = parser
    try:
        return args.fn(args)
    except (FileExistsError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, EstimationError, TrackLostError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MpcProfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
