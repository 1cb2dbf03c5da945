"""Parameter-track fitting, spline extrapolation, and CSI prediction.

Per-snapshot estimates become per-path time series, each parameter gets an
independent natural cubic spline over the observed instants, and predicted
parameter sets drop back into the reconstruction path. Beyond the last
knot the spline continues its final cubic segment, so exactly linear
parameter evolution extrapolates exactly at any horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .config import SystemConfig
from .errors import ConfigurationError
from .profiler import QuantizerSpec, SincBank, profiling_loss, reconstruct, to_db
from .types import MpcParamSet, ProfiledCir, wrap_phase

__all__ = [
    "ParameterTrackSet",
    "fit_tracks",
    "extrapolate",
    "predict_csi",
    "evaluate_horizon",
    "horizon_to_csv",
    "is_model_violation",
    "DEFAULT_CADENCE_MS",
    "MODEL_VIOLATION_DB",
]

# snapshot spacing used when exporting horizons on a wall-clock axis
DEFAULT_CADENCE_MS = 2.0

# losses above this mean the smooth-evolution assumption broke down
MODEL_VIOLATION_DB = -10.0


@dataclass
class ParameterTrackSet:
    """Per-path parameter series over the observed instants.

    delays, amplitudes and phases have shape (order, n_instants); phases
    are stored unwrapped so splines never chase 2*pi jumps. times is the
    strictly increasing observation axis, and t_ob its last entry.
    """

    times: np.ndarray
    delays: np.ndarray
    amplitudes: np.ndarray
    phases_unwrapped: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        for name in ("delays", "amplitudes", "phases_unwrapped"):
            setattr(self, name, np.atleast_2d(np.asarray(getattr(self, name),
                                                         dtype=np.float64)))
        n = len(self.times)
        if n < 2:
            raise ConfigurationError("tracks need at least 2 observed instants")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("observation instants must strictly increase")
        shape = self.delays.shape
        if shape[1] != n or self.amplitudes.shape != shape or \
                self.phases_unwrapped.shape != shape:
            raise ConfigurationError("track arrays must share shape (order, n_instants)")

    @property
    def order(self) -> int:
        return self.delays.shape[0]

    @property
    def t_ob(self) -> float:
        return float(self.times[-1])


def _greedy_match(prev_delays: np.ndarray, new_delays: np.ndarray) -> np.ndarray:
    """Permutation aligning new paths to previous ones by closest delay."""
    order = len(prev_delays)
    cost = np.abs(prev_delays[:, None] - new_delays[None, :])
    perm = np.full(order, -1, dtype=np.intp)
    used_prev = np.zeros(order, dtype=bool)
    used_new = np.zeros(order, dtype=bool)
    for _ in range(order):
        masked = np.where(used_prev[:, None] | used_new[None, :], np.inf, cost)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        perm[i] = j
        used_prev[i] = True
        used_new[j] = True
    return perm


def fit_tracks(estimates: list[MpcParamSet], times: np.ndarray | None = None,
               aligned: bool = True) -> ParameterTrackSet:
    """Assemble per-path series from a sequence of snapshot estimates.

    Estimates produced by track() keep path identity by index, so aligned
    stays True; for independently estimated snapshots pass aligned=False
    and consecutive instants are matched greedily by nearest delay. Phases
    unwrap along time after alignment.
    """
    if len(estimates) < 2:
        raise ConfigurationError("need at least 2 snapshot estimates")
    order = estimates[0].order
    for i, est in enumerate(estimates):
        if est.order != order:
            raise ConfigurationError(
                f"snapshot {i} has {est.order} paths, expected {order}")
    if times is None:
        idx = [e.t_index for e in estimates]
        if all(v is not None for v in idx) and len(set(idx)) == len(idx):
            times = np.asarray(idx, dtype=np.float64)
        else:
            times = np.arange(len(estimates), dtype=np.float64)
    n = len(estimates)
    delays = np.empty((order, n))
    amps = np.empty((order, n))
    phases = np.empty((order, n))

    def put(col: int, est: MpcParamSet, perm: np.ndarray | None) -> None:
        d, a, p = est.delays, est.amplitudes, est.phases
        if perm is not None:
            d, a, p = d[perm], a[perm], p[perm]
        delays[:, col], amps[:, col], phases[:, col] = d, a, p

    put(0, estimates[0], None)
    for col in range(1, n):
        perm = None
        if not aligned:
            perm = _greedy_match(delays[:, col - 1], estimates[col].delays)
        put(col, estimates[col], perm)
    phases = np.unwrap(phases, axis=1)
    return ParameterTrackSet(times, delays, amps, phases)


def _spline_eval(times: np.ndarray, values: np.ndarray, t: float) -> float:
    """Natural cubic spline inside the knots, linear continuation outside.

    The end cubic of a spline fit to quantized track staircases has an
    arbitrary third derivative, so letting it run free diverges cubically
    with the horizon. Continuing with the boundary value and slope keeps
    long-range predictions bounded and stays exact for linear evolution.
    """
    cs = CubicSpline(times, values, bc_type="natural")
    t0, t1 = float(times[0]), float(times[-1])
    if t < t0:
        return float(cs(t0)) + float(cs(t0, 1)) * (t - t0)
    if t > t1:
        return float(cs(t1)) + float(cs(t1, 1)) * (t - t1)
    return float(cs(t))


def extrapolate(tracks: ParameterTrackSet, t_target: float) -> MpcParamSet:
    """Parameter set predicted (or interpolated) at one instant.

    Natural cubic splines per parameter per path, linear beyond the
    observed range; amplitudes are clamped at zero, phases stay unwrapped
    until reconstruction wraps them.
    """
    t = float(t_target)
    order = tracks.order
    delays = np.empty(order)
    amps = np.empty(order)
    phases = np.empty(order)
    for l in range(order):
        delays[l] = _spline_eval(tracks.times, tracks.delays[l], t)
        amps[l] = _spline_eval(tracks.times, tracks.amplitudes[l], t)
        phases[l] = _spline_eval(tracks.times, tracks.phases_unwrapped[l], t)
    return MpcParamSet(delays, np.maximum(amps, 0.0), phases,
                       t_index=int(round(t)))


def predict_csi(tracks: ParameterTrackSet, t_target: float, config: SystemConfig,
                quantizer: QuantizerSpec | None = None,
                bank: SincBank | None = None,
                n_taps: int | None = None) -> ProfiledCir:
    """Extrapolate the tracks and reconstruct the predicted profile.

    Predicted delays are clipped into the representable span so a track
    drifting off the grid still yields a finite profile; such steps score
    badly and surface through the model-violation check rather than as an
    exception mid-horizon.
    """
    theta = extrapolate(tracks, t_target)
    hi = np.nextafter(config.max_delay, 0.0)
    theta = MpcParamSet(np.clip(theta.delays, 0.0, hi), theta.amplitudes,
                        wrap_phase(theta.phases),
                        t_index=theta.t_index, degenerate=theta.degenerate)
    if n_taps is None:
        n_taps = config.obs_window
    return reconstruct(theta, config, quantizer=quantizer, bank=bank, n_taps=n_taps)


def evaluate_horizon(truth_profiles: list[ProfiledCir | np.ndarray],
                     predicted_profiles: list[ProfiledCir | np.ndarray],
                     t_indices: list[int] | None = None) -> list[tuple[int, float]]:
    """Per-step (t_index, loss_db) over a prediction horizon."""
    if len(truth_profiles) != len(predicted_profiles):
        raise ConfigurationError("truth and prediction lists must have equal length")
    if t_indices is None:
        t_indices = list(range(len(truth_profiles)))
    elif len(t_indices) != len(truth_profiles):
        raise ConfigurationError("one t_index per horizon step required")
    return [(int(t), to_db(profiling_loss(tr, pr)))
            for t, tr, pr in zip(t_indices, truth_profiles, predicted_profiles)]


def is_model_violation(loss_db: float) -> bool:
    """Smooth-evolution check: losses above the threshold mean a parameter jump."""
    return bool(loss_db > MODEL_VIOLATION_DB)


def horizon_to_csv(rows: list[tuple[int, float]], path: str,
                   cadence_ms: float = DEFAULT_CADENCE_MS) -> None:
    """Write (t_ms, loss_db) horizon rows for external plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_ms,loss_db\n")
        for t, loss in rows:
            fh.write(f"{t * cadence_ms:.6f},{loss:.6f}\n")
