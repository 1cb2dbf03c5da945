"""Latency and accuracy benchmark across the estimation methods.

Times cold starts, single tracking steps, both initializers and the
subspace baseline on dataset channels, and reports median wall-clock
seconds next to median reconstruction loss. Absolute times are
environment-bound; only the ordering between methods is meaningful.
"""

from __future__ import annotations

import contextlib
import platform
import time
from dataclasses import dataclass
from statistics import median

import numpy as np

from . import _kernels as K
from .channel import synth_freq_response
from .config import SystemConfig
from .dataset_io import ChannelRecord
from .errors import ConfigurationError
from .esprit import EspritConfig, esprit_delays, ls_amp_phase
from .estimator import estimate_initial, track
from .initializer import (
    ARCH_CONV_INIT,
    WeightBundle,
    conv_architecture_shapes,
    nn_infer,
    peak_pick_init,
    prepare_input,
)
from .profiler import QuantizerSpec, default_bank, profile, profiling_loss, reconstruct, sample_cir, to_db
from .types import MpcParamSet

__all__ = [
    "BENCH_METHODS",
    "WARMUP_RUNS",
    "MIN_TRIALS",
    "MethodStats",
    "BenchReport",
    "run_bench",
    "compare_kernels",
    "untrained_bundle",
]

BENCH_METHODS = (
    "profiling_start",
    "profiling_tracking",
    "nn_start_inference",
    "peak_start_inference",
    "unitary_esprit",
)
WARMUP_RUNS = 2
MIN_TRIALS = 3
# tracking trials fit a target drifted by this many tap periods so the
# step does real work while staying inside the tracking box
TRACK_DRIFT_TAPS = 0.05


@dataclass(frozen=True)
class MethodStats:
    """Per-method summary plus the raw per-trial record behind it."""

    method: str
    median_elapsed_s: float
    median_loss_db: float
    n_trials: int
    trial_elapsed_s: tuple[float, ...]
    trial_loss_db: tuple[float, ...]
    trial_thetas: tuple[MpcParamSet, ...]
    trial_channels: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "median_elapsed_s": self.median_elapsed_s,
            "median_loss_db": self.median_loss_db,
            "n_trials": self.n_trials,
            "trial_elapsed_s": list(self.trial_elapsed_s),
            "trial_loss_db": list(self.trial_loss_db),
            "trial_thetas": [t.to_dict() for t in self.trial_thetas],
            "trial_channels": list(self.trial_channels),
        }


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[MethodStats, ...]
    trials: int
    n_channels: int
    ordering_ok: bool
    environment: dict

    def row(self, method: str) -> MethodStats:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "rows": [r.to_dict() for r in self.rows],
            "trials": self.trials,
            "n_channels": self.n_channels,
            "ordering_ok": self.ordering_ok,
            "environment": dict(self.environment),
        }


def untrained_bundle(config: SystemConfig, model_order: int,
                     seed: int = 0) -> WeightBundle:
    """Deterministic random-weight bundle for timing-only inference runs.

    Inference cost does not depend on the weight values, so this stands in
    when no trained weights are on hand; its loss column is meaningless and
    the report marks it as untrained.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in conv_architecture_shapes(config.obs_window, model_order):
        scale = 0.05 if name.endswith("kernel") else 0.0
        tensors[name] = (scale * rng.standard_normal(shape)).astype(np.float32)
    return WeightBundle(ARCH_CONV_INIT, model_order, config.obs_window, tensors)


def _time_runs(fn, inputs: list, trials: int) -> tuple[list[float], list]:
    """Median-friendly timing loop: warm-ups discarded, monotonic clock."""
    elapsed, outputs = [], []
    n = len(inputs)
    for i in range(WARMUP_RUNS):
        fn(inputs[i % n])
    for i in range(trials):
        arg = inputs[i % n]
        t0 = time.perf_counter()
        out = fn(arg)
        elapsed.append(time.perf_counter() - t0)
        outputs.append(out)
    return elapsed, outputs


def run_bench(records: list[ChannelRecord], config: SystemConfig, trials: int,
              bundle: WeightBundle | None = None,
              quantizer: QuantizerSpec | None = None) -> BenchReport:
    """Time every method on the given channels and summarize medians.

    Channels are visited round-robin; each method sees the same sequence.
    Loss columns are recomputed from the parameters each trial returned,
    never copied out of inner reports. Fewer than MIN_TRIALS trials are
    refused because a median of one or two wall-clock numbers is noise.
    """
    if trials < MIN_TRIALS:
        raise ConfigurationError(
            f"need at least {MIN_TRIALS} trials for stable medians, got {trials}")
    if not records:
        raise ConfigurationError("benchmark needs at least one channel")
    if quantizer is None:
        quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)

    nn_note = "trained"
    if bundle is None:
        bundle = untrained_bundle(config, records[0].theta.order)
        nn_note = "untrained-placeholder"

    # per-channel work products the methods consume, built outside timing
    profs, drift_profs, nn_inputs, freqs = [], [], [], []
    drift = TRACK_DRIFT_TAPS * config.sample_period
    for rec in records:
        prof = profile(rec.cir)
        profs.append(prof)
        moved = MpcParamSet(rec.theta.delays + drift, rec.theta.amplitudes,
                            rec.theta.phases, t_index=rec.theta.t_index + 1)
        drift_profs.append(profile(sample_cir(moved, config,
                                              n_taps=len(prof.samples))))
        nn_inputs.append(prepare_input(rec.cir, config))
        freqs.append(synth_freq_response(rec.theta, config))

    idx = list(range(len(records)))

    def start_fn(i):
        rec = records[i]
        return estimate_initial(profs[i], rec.theta.order, config,
                                quantizer=quantizer, bank=bank).theta_hat

    def track_fn(i):
        return track(records[i].theta, drift_profs[i], config,
                     quantizer=quantizer, bank=bank).theta_hat

    def nn_fn(i):
        return nn_infer(nn_inputs[i], bundle, config)

    def peak_fn(i):
        return peak_pick_init(profs[i], records[i].theta.order, config)

    def esprit_fn(i):
        y = freqs[i]
        taus = esprit_delays(y, EspritConfig(records[i].theta.order), config)
        return ls_amp_phase(taus, y, config)

    method_fns = {
        "profiling_start": (start_fn, profs),
        "profiling_tracking": (track_fn, drift_profs),
        "nn_start_inference": (nn_fn, profs),
        "peak_start_inference": (peak_fn, profs),
        "unitary_esprit": (esprit_fn, profs),
    }

    rows = []
    for method in BENCH_METHODS:
        fn, targets = method_fns[method]
        elapsed, thetas = _time_runs(fn, idx, trials)
        losses = []
        chans = []
        for i in range(trials):
            j = i % len(records)
            chans.append(records[j].index)
            target = targets[j]
            recon = reconstruct(thetas[i], config, quantizer=quantizer,
                                bank=bank, n_taps=len(target.samples))
            losses.append(to_db(profiling_loss(target, recon)))
        rows.append(MethodStats(
            method=method,
            median_elapsed_s=float(median(elapsed)),
            median_loss_db=float(median(losses)),
            n_trials=trials,
            trial_elapsed_s=tuple(elapsed),
            trial_loss_db=tuple(losses),
            trial_thetas=tuple(thetas),
            trial_channels=tuple(chans),
        ))

    by_name = {r.method: r for r in rows}
    init_s = min(by_name["peak_start_inference"].median_elapsed_s,
                 by_name["nn_start_inference"].median_elapsed_s)
    ordering_ok = (init_s
                   < by_name["profiling_tracking"].median_elapsed_s
                   < by_name["profiling_start"].median_elapsed_s)

    env = {
        "kernel_backend": K.ACTIVE_BACKEND,
        "python": platform.python_version(),
        "machine": platform.machine(),
        "nn_weights": nn_note,
        "numpy": np.__version__,
    }
    return BenchReport(tuple(rows), trials, len(records), ordering_ok, env)


_KERNEL_OPS = ("quantize", "bank_readout", "field_from_params",
               "window_error_mag", "refine_sweep")


@contextlib.contextmanager
def _swapped_backend(name: str):
    """Temporarily rebind the kernel package onto another backend."""
    impl = K.get_backend(name)
    saved = {op: getattr(K, op) for op in _KERNEL_OPS}
    try:
        for op in _KERNEL_OPS:
            setattr(K, op, getattr(impl, op))
        yield
    finally:
        for op, fn in saved.items():
            setattr(K, op, fn)


def compare_kernels(records: list[ChannelRecord], config: SystemConfig,
                    trials: int = MIN_TRIALS,
                    quantizer: QuantizerSpec | None = None) -> dict:
    """Cold-start timing for every available kernel backend.

    Runs the identical estimate_initial workload with the compiled and the
    pure backend swapped in turn; results include per-backend median
    seconds and their speed ratio when both are present.
    """
    if trials < MIN_TRIALS:
        raise ConfigurationError(
            f"need at least {MIN_TRIALS} trials for stable medians, got {trials}")
    if not records:
        raise ConfigurationError("benchmark needs at least one channel")
    if quantizer is None:
        quantizer = QuantizerSpec.for_config(config)
    bank = default_bank(config, quantizer)
    profs = [profile(rec.cir) for rec in records]
    idx = list(range(len(records)))

    out = {"trials": trials, "n_channels": len(records), "backends": {}}
    for name in K.available_backends():
        with _swapped_backend(name):
            def fn(i):
                return estimate_initial(profs[i], records[i].theta.order, config,
                                        quantizer=quantizer, bank=bank).theta_hat
            elapsed, _ = _time_runs(fn, idx, trials)
        out["backends"][name] = {
            "median_elapsed_s": float(median(elapsed)),
            "trial_elapsed_s": [float(e) for e in elapsed],
        }
    b = out["backends"]
    if "fast" in b and "pure" in b and b["fast"]["median_elapsed_s"] > 0:
        out["pure_over_fast"] = (b["pure"]["median_elapsed_s"]
                                 / b["fast"]["median_elapsed_s"])
    return out
