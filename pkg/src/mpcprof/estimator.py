"""Iterative multipath parameter estimation against magnitude profiles.

The estimator walks a three-level search schedule (coarse, medium, fine).
At each level it repeatedly sweeps over the components in descending
amplitude order; for each component all 27 combinations of
{-step, 0, +step} on (delay, amplitude, phase) are scored against the
target window with the remaining components frozen, and the best admissible
candidate is taken. A level stops when the relative improvement of a full
sweep drops below the convergence tolerance or the iteration cap is hit.

Tracking reuses the machinery with the coarse level skipped and the search
confined to a box around the previous instant's estimate, which is what
makes per-instant updates an order of magnitude cheaper than a cold start.

Refinement never worsens the windowed score: a sweep whose from-scratch
score ends above its starting score is discarded in favour of its input.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .config import SystemConfig
from .errors import ConfigurationError, EstimationError, TrackLostError
from .initializer import cancel_pick_init, peak_pick_init
from .profiler import QuantizerSpec, SincBank, default_bank, check_lattice, to_db
from .types import MpcParamSet, ProfiledCir, wrap_phase

__all__ = [
    "SearchSchedule",
    "SearchBounds",
    "EstimateReport",
    "refine",
    "estimate_initial",
    "track",
    "LEVELS",
    "MAX_MODEL_ORDER",
]

LEVELS = ("coarse", "medium", "fine")
MAX_MODEL_ORDER = 16


@dataclass(frozen=True)
class SearchSchedule:
    """Step sizes per level plus loop controls.

    Each level maps to (delay_step, amplitude_step, phase_step). Steps must
    shrink (weakly) from coarse to fine, and for exact lattice arithmetic
    every step should be an integer multiple of the corresponding quantizer
    step; `check_against` enforces that.
    """

    coarse: tuple[float, float, float] = (0.5e-7, 0.1, np.pi / 8)
    medium: tuple[float, float, float] = (0.125e-7, 0.02, np.pi / 32)
    fine: tuple[float, float, float] = (1e-7 / 128.0, 0.002, np.pi / 256)
    convergence_tol: float = 1e-6
    max_iterations: int = 200
    tracking_radius: int = 8
    energy_floor: float = 0.0
    reseed_rounds: int = 6
    max_passes: int = 5

    def __post_init__(self) -> None:
        for name in LEVELS:
            steps = getattr(self, name)
            if len(steps) != 3 or any(s <= 0 for s in steps):
                raise ConfigurationError(f"{name} steps must be three positive values")
        for i in range(3):
            if not (self.coarse[i] >= self.medium[i] >= self.fine[i]):
                raise ConfigurationError("steps must not grow from coarse to fine")
        if self.convergence_tol <= 0:
            raise ConfigurationError("convergence_tol must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.tracking_radius < 1:
            raise ConfigurationError("tracking_radius must be >= 1")
        if self.reseed_rounds < 0:
            raise ConfigurationError("reseed_rounds must be >= 0")
        if self.max_passes < 1:
            raise ConfigurationError("max_passes must be >= 1")

    @classmethod
    def for_config(cls, config: SystemConfig) -> "SearchSchedule":
        ts = config.sample_period
        return cls(
            coarse=(ts / 2.0, 0.1, np.pi / 8),
            medium=(ts / 8.0, 0.02, np.pi / 32),
            fine=(ts / 128.0, 0.002, np.pi / 256),
        )

    def steps(self, level: str) -> tuple[float, float, float]:
        if level not in LEVELS:
            raise ConfigurationError(f"unknown search level {level!r}")
        return getattr(self, level)

    def check_against(self, quantizer: QuantizerSpec) -> None:
        qsteps = (quantizer.delay_step, quantizer.amp_step, quantizer.phase_step)
        for name in LEVELS:
            for s, q in zip(getattr(self, name), qsteps):
                ratio = s / q
                if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                    raise ConfigurationError(
                        f"{name} step {s:.3e} is not an integer multiple of "
                        f"quantizer step {q:.3e}"
                    )


@dataclass
class SearchBounds:
    """Per-component inclusive bounds on raw candidate values."""

    tau_lo: np.ndarray
    tau_hi: np.ndarray
    amp_lo: np.ndarray
    amp_hi: np.ndarray
    phi_lo: np.ndarray
    phi_hi: np.ndarray

    @classmethod
    def unbounded(cls, order: int, config: SystemConfig,
                  quantizer: QuantizerSpec) -> "SearchBounds":
        full = np.full(order, np.inf)
        return cls(
            tau_lo=np.zeros(order),
            tau_hi=np.full(order, config.max_delay - quantizer.delay_step),
            amp_lo=np.zeros(order),
            amp_hi=full.copy(),
            phi_lo=-full.copy(),
            phi_hi=full.copy(),
        )

    @classmethod
    def around(cls, theta: MpcParamSet, radius: int,
               steps: tuple[float, float, float], config: SystemConfig,
               quantizer: QuantizerSpec) -> "SearchBounds":
        """Box of +-radius steps around a previous estimate, clipped to range."""
        r_tau = radius * steps[0]
        r_amp = radius * steps[1]
        r_phi = radius * steps[2]
        return cls(
            tau_lo=np.maximum(theta.delays - r_tau, 0.0),
            tau_hi=np.minimum(theta.delays + r_tau, config.max_delay - quantizer.delay_step),
            amp_lo=np.maximum(theta.amplitudes - r_amp, 0.0),
            amp_hi=theta.amplitudes + r_amp,
            phi_lo=theta.phases - r_phi,
            phi_hi=theta.phases + r_phi,
        )


@dataclass
class EstimateReport:
    """Result of a cold start or tracking update."""

    theta_hat: MpcParamSet
    loss_db: float
    iterations: dict[str, int]
    elapsed_s: float
    window: tuple[int, int]
    track_lost: bool = False
    converged: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.to_dict(),
            "loss_db": float(self.loss_db),
            "iterations": dict(self.iterations),
            "elapsed_s": float(self.elapsed_s),
            "window": list(self.window),
            "track_lost": bool(self.track_lost),
            "converged": dict(self.converged),
        }


class _Session:
    """Shared precomputed state for one estimation run."""

    def __init__(self, target: ProfiledCir | np.ndarray, config: SystemConfig,
                 quantizer: QuantizerSpec | None, bank: SincBank | None,
                 schedule: SearchSchedule | None,
                 window: tuple[int, int] | None):
        self.config = config
        self.quantizer = quantizer or QuantizerSpec.for_config(config)
        self.bank = bank or default_bank(config, self.quantizer)
        self.schedule = schedule or SearchSchedule.for_config(config)
        check_lattice(self.bank, self.quantizer)
        self.schedule.check_against(self.quantizer)
        samples = target.samples if isinstance(target, ProfiledCir) else np.asarray(target, dtype=np.float64)
        if samples.ndim != 1 or len(samples) == 0:
            raise ConfigurationError("target profile must be a non-empty vector")
        if len(samples) > 2 * config.grid_len:
            raise ConfigurationError("target longer than the extended delay grid")
        self.target = np.ascontiguousarray(samples, dtype=np.float64)
        if window is None:
            window = (0, len(samples))
        w_start, w_stop = int(window[0]), int(window[1])
        if not (0 <= w_start < w_stop <= len(samples)):
            raise ConfigurationError(f"window {window} invalid for target length {len(samples)}")
        self.w_start, self.w_stop = w_start, w_stop
        d = self.target[w_start:w_stop]
        self.window_energy = float(np.dot(d, d))

    def field(self, delays, amps, phases) -> np.ndarray:
        return K.field_from_params(
            self.bank.table, self.bank.t_min, self.bank.inv_resolution,
            self.config.grid_step, self.config.grid_step, self.w_stop,
            delays, amps, phases,
            self.quantizer.delay_step, self.quantizer.amp_step, self.quantizer.phase_step,
        )

    def score(self, delays, amps, phases) -> float:
        """Windowed objective, bit-identical to window_error over reconstruct.

        The kernels' own scoring is only a proposal heuristic; acceptance
        must be judged in the same floating-point route callers use to
        audit the result, or one-ulp ties flip direction between the two.
        """
        field_ = self.field(delays, amps, phases)
        fr = field_.real[self.w_start:self.w_stop]
        fi = field_.imag[self.w_start:self.w_stop]
        d = self.target[self.w_start:self.w_stop] - np.sqrt(fr * fr + fi * fi)
        return float(np.dot(d, d))

    def sweep(self, delays, amps, phases, level: str, bounds: SearchBounds) -> None:
        d_tau, d_amp, d_phi = self.schedule.steps(level)
        order = np.argsort(-amps, kind="stable").astype(np.intp)
        K.refine_sweep(
            self.bank.table, self.bank.t_min, self.bank.inv_resolution,
            self.config.grid_step, self.config.grid_step,
            self.target, self.w_start, self.w_stop,
            delays, amps, phases, order,
            d_tau, d_amp, d_phi,
            self.quantizer.delay_step, self.quantizer.amp_step, self.quantizer.phase_step,
            np.ascontiguousarray(bounds.tau_lo), np.ascontiguousarray(bounds.tau_hi),
            np.ascontiguousarray(bounds.amp_lo), np.ascontiguousarray(bounds.amp_hi),
            np.ascontiguousarray(bounds.phi_lo), np.ascontiguousarray(bounds.phi_hi),
        )

    def refine_once(self, delays, amps, phases, level: str,
                    bounds: SearchBounds) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
        """One sweep; reverts to the input if the from-scratch score got worse."""
        s_start = self.score(delays, amps, phases)
        d2, a2, p2 = delays.copy(), amps.copy(), phases.copy()
        self.sweep(d2, a2, p2, level, bounds)
        s_end = self.score(d2, a2, p2)
        if s_end > s_start:
            return delays, amps, phases, s_start, s_start
        return d2, a2, p2, s_start, s_end

    def run_levels(self, theta: MpcParamSet, levels: tuple[str, ...],
                   bounds: SearchBounds) -> tuple[MpcParamSet, dict[str, int], dict[str, bool]]:
        delays = np.ascontiguousarray(theta.delays, dtype=np.float64)
        amps = np.ascontiguousarray(theta.amplitudes, dtype=np.float64)
        phases = np.ascontiguousarray(theta.phases, dtype=np.float64)
        iterations: dict[str, int] = {}
        converged: dict[str, bool] = {}
        tol = self.schedule.convergence_tol
        for level in levels:
            count = 0
            done = False
            for _ in range(self.schedule.max_iterations):
                delays, amps, phases, s_start, s_end = self.refine_once(
                    delays, amps, phases, level, bounds)
                count += 1
                if s_end <= 0.0 or (s_start - s_end) <= tol * s_start:
                    done = True
                    break
            iterations[level] = count
            converged[level] = done
        out = MpcParamSet(delays, amps, phases, t_index=theta.t_index,
                          degenerate=theta.degenerate)
        return out, iterations, converged


RESEED_PHASES = (0.0, np.pi)
RESEED_PEAKS = 3
# Normalized score below which re-seeding is not attempted: the fit is
# already far past the point where a stranded path is plausible.
RESEED_SKIP_LOSS = 10.0 ** (-4.5)


def _residual_peaks(resid: np.ndarray, spacing: int, count: int) -> list[int]:
    """Indices of the strongest residual values, mutually `spacing` apart."""
    out: list[int] = []
    for k in np.argsort(-resid, kind="stable"):
        if resid[k] <= 0.0:
            break
        if all(abs(int(k) - p) >= spacing for p in out):
            out.append(int(k))
            if len(out) == count:
                break
    return out


def _reseed_escape(ses: _Session, theta: MpcParamSet, iterations: dict[str, int],
                   bounds: SearchBounds) -> MpcParamSet:
    """Escape merged-path local minima after the level stack has converged.

    The greedy sweep moves one parameter a step at a time, so a path
    stranded on a sidelobe of another path cannot migrate to a genuinely
    unmodelled arrival: every single step is uphill. Each round relocates
    one path onto a residual peak and re-runs all levels; candidate moves
    combine the strongest few residual peaks with every path and a pair of
    restart phases, and the first peak whose best move strictly improves
    the score wins the round. A round with no improvement ends the pass.
    Deterministic, and never worsens the fit.
    """
    L = theta.order
    delays = theta.delays.copy()
    amps = theta.amplitudes.copy()
    phases = theta.phases.copy()
    best = ses.score(delays, amps, phases)
    spacing = max(1, ses.config.n_st // 2)
    for _ in range(ses.schedule.reseed_rounds):
        if best <= RESEED_SKIP_LOSS * ses.window_energy:
            break
        field = ses.field(delays, amps, phases)
        resid = ses.target[ses.w_start:ses.w_stop] - np.abs(field[ses.w_start:ses.w_stop])
        peaks = _residual_peaks(resid, spacing, RESEED_PEAKS)
        improved = False
        for k_rel in peaks:
            tau_new = (ses.w_start + k_rel + 1) * ses.config.grid_step
            for l in range(L):
                for phi0 in RESEED_PHASES:
                    d2, a2, p2 = delays.copy(), amps.copy(), phases.copy()
                    d2[l] = tau_new
                    a2[l] = resid[k_rel]
                    p2[l] = phi0
                    cand = MpcParamSet(d2, a2, p2, t_index=theta.t_index,
                                       degenerate=theta.degenerate)
                    cand, extra_iters, _ = ses.run_levels(cand, LEVELS, bounds)
                    s_new = ses.score(cand.delays, cand.amplitudes, cand.phases)
                    for level, count in extra_iters.items():
                        iterations[level] = iterations.get(level, 0) + count
                    if s_new < best:
                        delays, amps, phases = cand.delays, cand.amplitudes, cand.phases
                        best = s_new
                        improved = True
            if improved:
                break
        if not improved:
            break
    return MpcParamSet(delays, amps, phases, t_index=theta.t_index,
                       degenerate=theta.degenerate)


def refine(theta: MpcParamSet, target: ProfiledCir | np.ndarray, level: str,
           config: SystemConfig, quantizer: QuantizerSpec | None = None,
           bank: SincBank | None = None, schedule: SearchSchedule | None = None,
           window: tuple[int, int] | None = None,
           bounds: SearchBounds | None = None) -> MpcParamSet:
    """One refinement sweep at the given level.

    The returned set never scores worse than the input on the target window;
    if the greedy sweep cannot improve, the input is returned unchanged.
    """
    ses = _Session(target, config, quantizer, bank, schedule, window)
    if bounds is None:
        bounds = SearchBounds.unbounded(theta.order, ses.config, ses.quantizer)
    delays = np.ascontiguousarray(theta.delays, dtype=np.float64)
    amps = np.ascontiguousarray(theta.amplitudes, dtype=np.float64)
    phases = np.ascontiguousarray(theta.phases, dtype=np.float64)
    d, a, p, _, _ = ses.refine_once(delays, amps, phases, level, bounds)
    return MpcParamSet(d.copy(), a.copy(), p.copy(), t_index=theta.t_index,
                       degenerate=theta.degenerate)


def _final_report(ses: _Session, theta: MpcParamSet, iterations, converged,
                  elapsed: float, sort_paths: bool, quantizer: QuantizerSpec) -> EstimateReport:
    out = theta.wrapped()
    if sort_paths:
        out = out.sorted_by_delay()
    if np.any(out.amplitudes < quantizer.amp_step):
        out.degenerate = True
    loss = ses.score(out.delays, out.amplitudes, out.phases) / ses.window_energy
    return EstimateReport(
        theta_hat=out,
        loss_db=to_db(loss),
        iterations=iterations,
        elapsed_s=elapsed,
        window=(ses.w_start, ses.w_stop),
        converged=converged,
    )


def estimate_initial(target: ProfiledCir | np.ndarray, model_order: int,
                     config: SystemConfig,
                     quantizer: QuantizerSpec | None = None,
                     bank: SincBank | None = None,
                     schedule: SearchSchedule | None = None,
                     window: tuple[int, int] | None = None,
                     seed_params: MpcParamSet | None = None) -> EstimateReport:
    """Cold-start estimation from a magnitude profile.

    With no explicit seed, the search starts from both peak picking and
    successive-cancellation picking and keeps whichever start converges
    lower; the two differ exactly on channels where a strong path's
    sidelobes mask weaker arrivals. Raises EstimationError when the target
    window carries no energy. The report's paths are sorted by delay and
    phases wrapped to [0, 2*pi).
    """
    if not (1 <= model_order <= MAX_MODEL_ORDER):
        raise ConfigurationError(
            f"model_order must be in [1, {MAX_MODEL_ORDER}], got {model_order}")
    ses = _Session(target, config, quantizer, bank, schedule, window)
    if ses.window_energy <= ses.schedule.energy_floor:
        raise EstimationError("estimation target window has no energy")
    t0 = time.perf_counter()
    if seed_params is None:
        prof = target if isinstance(target, ProfiledCir) else ProfiledCir(target)
        seeds = [peak_pick_init(prof, model_order, config),
                 cancel_pick_init(prof, model_order, config)]
        if np.array_equal(seeds[0].delays, seeds[1].delays):
            seeds = seeds[:1]
    else:
        if seed_params.order != model_order:
            raise ConfigurationError("seed parameter count does not match model_order")
        seeds = [seed_params]
    bounds = SearchBounds.unbounded(model_order, ses.config, ses.quantizer)
    iterations: dict[str, int] = {}
    best_theta: MpcParamSet | None = None
    best_converged: dict[str, bool] = {}
    best_score = np.inf
    for seed in seeds:
        # Outer passes: a fine-level stop is often a zigzag valley that a
        # fresh medium-step sweep escapes in one move, so cycle the whole
        # stack (plus the re-seeding pass) until a pass no longer pays.
        theta = seed
        converged: dict[str, bool] = {}
        prev: float | None = None
        for _ in range(ses.schedule.max_passes):
            theta, pass_iters, converged = ses.run_levels(theta, LEVELS, bounds)
            for level, count in pass_iters.items():
                iterations[level] = iterations.get(level, 0) + count
            theta = _reseed_escape(ses, theta, iterations, bounds)
            s = ses.score(theta.delays, theta.amplitudes, theta.phases)
            if prev is not None and s >= prev * (1.0 - ses.schedule.convergence_tol):
                break
            prev = s
        s = ses.score(theta.delays, theta.amplitudes, theta.phases)
        if s < best_score:
            best_score, best_theta, best_converged = s, theta, converged
    elapsed = time.perf_counter() - t0
    return _final_report(ses, best_theta, iterations, best_converged, elapsed,
                         sort_paths=True, quantizer=ses.quantizer)


TRACK_LOSS_FLAG_DB = -10.0


def track(prev: MpcParamSet, target: ProfiledCir | np.ndarray,
          config: SystemConfig,
          quantizer: QuantizerSpec | None = None,
          bank: SincBank | None = None,
          schedule: SearchSchedule | None = None,
          window: tuple[int, int] | None = None) -> EstimateReport:
    """Relative update from the previous instant's estimate.

    Skips the coarse level and confines every parameter to a box of
    +-tracking_radius medium steps around `prev`, so path index l in the
    output refers to the same physical path as index l in `prev` (no
    re-sorting). Raises TrackLostError when the new target has no energy;
    flags `track_lost` when the final loss stays above -10 dB.
    """
    ses = _Session(target, config, quantizer, bank, schedule, window)
    if ses.window_energy <= ses.schedule.energy_floor:
        raise TrackLostError("tracking target window has no energy")
    t0 = time.perf_counter()
    bounds = SearchBounds.around(prev, ses.schedule.tracking_radius,
                                 ses.schedule.steps("medium"), ses.config, ses.quantizer)
    theta, iterations, converged = ses.run_levels(prev, ("medium", "fine"), bounds)
    if isinstance(target, ProfiledCir) and target.t_index != prev.t_index:
        theta.t_index = target.t_index
    elapsed = time.perf_counter() - t0
    report = _final_report(ses, theta, iterations, converged, elapsed,
                           sort_paths=False, quantizer=ses.quantizer)
    if report.loss_db > TRACK_LOSS_FLAG_DB:
        report.track_lost = True
    return report
