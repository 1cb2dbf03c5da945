"""Impulse response profiling: synthesis, reconstruction and scoring.

A channel impulse response sampled at bandwidth B is a sum of sinc pulses,
one per multipath component. Estimation works on the magnitude profile of
those samples, and reconstruction rebuilds the profile from quantized path
parameters using a precomputed sinc table instead of evaluating sin() per
tap: the table is sampled densely enough that a shifted linear-interpolation
readout is exact on the quantizer lattice and cheap everywhere else.

The quantizer steps are chosen so that lattice rounding alone stays well
below -60 dB normalized error: half a delay step of T_s/3072 bounds the
per-path error contribution near -76 dB, with amplitude and phase steps
sized to match.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import SystemConfig
from .errors import ConfigurationError, NumericError
from .types import ComplexCir, MpcParamSet, ProfiledCir

__all__ = [
    "QuantizerSpec",
    "SincBank",
    "default_bank",
    "sample_cir",
    "profile",
    "reconstruct",
    "window_error",
    "profiling_loss",
    "to_db",
    "denoise_threshold",
    "write_profile_csv",
]

TWO_PI = 2.0 * np.pi

# Delay step as a fraction of the oversampled grid step. 512 sub-steps per
# grid tap keep the worst-case rounding loss below -70 dB; see module note.
DELAY_SUBSTEPS = 512


@dataclass(frozen=True)
class QuantizerSpec:
    """Lattice steps for delay (s), amplitude (linear) and phase (rad).

    Search steps used by the estimator must be integer multiples of these so
    every visited candidate lands exactly on the lattice.
    """

    delay_step: float
    amp_step: float = 2.5e-4
    phase_step: float = TWO_PI / 16384

    def __post_init__(self) -> None:
        if self.delay_step <= 0 or self.amp_step <= 0 or self.phase_step <= 0:
            raise ConfigurationError("quantizer steps must be positive")

    @classmethod
    def for_config(cls, config: SystemConfig) -> "QuantizerSpec":
        return cls(delay_step=config.sample_period / (DELAY_SUBSTEPS * config.n_st))

    def quantize_params(self, theta: MpcParamSet) -> MpcParamSet:
        """Copy of theta with every parameter rounded to its lattice."""
        return MpcParamSet(
            K.quantize(theta.delays, self.delay_step),
            K.quantize(theta.amplitudes, self.amp_step),
            K.quantize(theta.phases, self.phase_step),
            t_index=theta.t_index,
            degenerate=theta.degenerate,
        )


@dataclass(frozen=True)
class SincBank:
    """Precomputed sinc table with shifted linear-interpolation readout.

    The table holds sinc((t) * B) on a lattice t = t_min + i * resolution
    spanning [-max_delay, 2 * max_delay] plus a small margin, which covers
    every (tap delay - path delay) difference the reconstruction grid can
    produce. Readout for a path delayed by tau evaluates the table at
    (tap - tau); outside the span the readout is zero, but valid inputs
    never reach that regime.
    """

    table: np.ndarray
    t_min: float
    resolution: float
    bandwidth_hz: float

    @property
    def inv_resolution(self) -> float:
        return 1.0 / self.resolution

    @property
    def t_max(self) -> float:
        return self.t_min + (len(self.table) - 1) * self.resolution

    @classmethod
    def build(cls, config: SystemConfig, resolution: float | None = None,
              margin: int = 8) -> "SincBank":
        if resolution is None:
            resolution = config.sample_period / (DELAY_SUBSTEPS * config.n_st)
        if resolution <= 0:
            raise ConfigurationError("bank resolution must be positive")
        span = 3.0 * config.max_delay
        n_core = int(round(span / resolution))
        n = n_core + 2 * margin + 1
        n_lo = int(round(config.max_delay / resolution)) + margin
        t_min = -n_lo * resolution
        t = t_min + resolution * np.arange(n, dtype=np.float64)
        table = np.sinc(t * config.bandwidth_hz)
        return cls(table=table, t_min=t_min, resolution=resolution,
                   bandwidth_hz=config.bandwidth_hz)

    def interpolation_error_bound(self) -> float:
        """Worst-case readout error per unit amplitude, off-lattice.

        Linear interpolation of a function with |f''| <= (pi*B)^2 / 3 on a
        lattice of spacing h errs by at most |f''| * h^2 / 8.
        """
        return (np.pi * self.bandwidth_hz * self.resolution) ** 2 / 24.0

    def readout(self, taps: np.ndarray, delay: float) -> np.ndarray:
        """Reference readout at arbitrary tap delays (numpy path)."""
        return K.bank_readout(self.table, self.t_min, self.inv_resolution,
                              float(taps[0]), float(taps[1] - taps[0]) if len(taps) > 1 else self.resolution,
                              len(taps), delay)


def check_lattice(bank: SincBank, quantizer: QuantizerSpec) -> None:
    """Reject bank/quantizer pairs whose lattices do not nest.

    Readout is exact only when quantized delays land on table entries, which
    requires the delay step to be an integer multiple of the resolution.
    """
    ratio = quantizer.delay_step / bank.resolution
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigurationError(
            f"quantizer delay step {quantizer.delay_step:.3e} is not a multiple "
            f"of the bank resolution {bank.resolution:.3e}"
        )


_BANK_CACHE: dict[tuple, SincBank] = {}


def default_bank(config: SystemConfig, quantizer: QuantizerSpec | None = None) -> SincBank:
    """Shared bank for a configuration; built once and cached."""
    if quantizer is None:
        quantizer = QuantizerSpec.for_config(config)
    key = (config.bandwidth_hz, config.m_prb, config.n_st, quantizer.delay_step)
    bank = _BANK_CACHE.get(key)
    if bank is None:
        bank = SincBank.build(config, resolution=quantizer.delay_step)
        _BANK_CACHE[key] = bank
    return bank


def sample_cir(theta: MpcParamSet, config: SystemConfig,
               n_taps: int | None = None) -> ComplexCir:
    """Exact band-limited impulse response of a parameter set on the delay grid.

    Direct evaluation of the sinc sum; no quantization, no table. This is
    the ground-truth generator that reconstructions are judged against.
    """
    theta.validate(config)
    t = config.delay_grid(n_taps)
    x = (t[None, :] - theta.delays[:, None]) * config.bandwidth_hz
    coef = theta.amplitudes * np.exp(1j * theta.phases)
    samples = coef @ np.sinc(x)
    return ComplexCir(samples, t_index=theta.t_index)


def profile(cir: ComplexCir) -> ProfiledCir:
    """Magnitude profile of a complex impulse response."""
    return ProfiledCir(np.abs(cir.samples), t_index=cir.t_index)


def reconstruct(theta: MpcParamSet, config: SystemConfig,
                quantizer: QuantizerSpec | None = None,
                bank: SincBank | None = None,
                n_taps: int | None = None) -> ProfiledCir:
    """Magnitude profile synthesized from quantized parameters via the bank.

    Parameters are rounded to the quantizer lattice and each path is read
    out of the sinc table. Delays must satisfy 0 <= tau < max_delay so the
    table covers them; violations raise.
    """
    theta.validate(config)
    if quantizer is None:
        quantizer = QuantizerSpec.for_config(config)
    if bank is None:
        bank = default_bank(config, quantizer)
    check_lattice(bank, quantizer)
    if n_taps is None:
        n_taps = config.grid_len
    if not (0 < n_taps <= 2 * config.grid_len):
        raise ConfigurationError(f"n_taps={n_taps} outside (0, {2 * config.grid_len}]")
    field = K.field_from_params(
        bank.table, bank.t_min, bank.inv_resolution,
        config.grid_step, config.grid_step, n_taps,
        np.ascontiguousarray(theta.delays),
        np.ascontiguousarray(theta.amplitudes),
        np.ascontiguousarray(theta.phases),
        quantizer.delay_step, quantizer.amp_step, quantizer.phase_step,
    )
    # sqrt(re^2+im^2) rather than np.abs: hypot rounds the last ulp
    # differently, and the search's accept/revert ties must resolve the
    # same way here as inside the sweep scoring.
    fr, fi = field.real, field.imag
    return ProfiledCir(np.sqrt(fr * fr + fi * fi), t_index=theta.t_index)


def _window_slice(n_a: int, n_b: int, w_start: int, w_stop: int | None) -> tuple[int, int]:
    if n_a != n_b:
        raise ConfigurationError(f"profiles have different lengths ({n_a} vs {n_b})")
    if w_stop is None:
        w_stop = n_a
    if not (0 <= w_start <= w_stop <= n_a):
        raise ConfigurationError(
            f"window [{w_start}, {w_stop}) invalid for length {n_a}"
        )
    return w_start, w_stop


def window_error(truth: ProfiledCir | np.ndarray, estimate: ProfiledCir | np.ndarray,
                 w_start: int = 0, w_stop: int | None = None) -> float:
    """Sum of squared profile differences over the half-open tap window.

    This is the raw objective the refinement search minimizes.
    """
    a = truth.samples if isinstance(truth, ProfiledCir) else np.asarray(truth, dtype=np.float64)
    b = estimate.samples if isinstance(estimate, ProfiledCir) else np.asarray(estimate, dtype=np.float64)
    w_start, w_stop = _window_slice(len(a), len(b), w_start, w_stop)
    d = a[w_start:w_stop] - b[w_start:w_stop]
    return float(np.dot(d, d))


def profiling_loss(truth: ProfiledCir | np.ndarray, estimate: ProfiledCir | np.ndarray,
                   w_start: int = 0, w_stop: int | None = None) -> float:
    """Normalized squared error of a reconstruction over a window (linear).

    window_error divided by the truth energy in the same window. Raises if
    the truth window carries no energy.
    """
    a = truth.samples if isinstance(truth, ProfiledCir) else np.asarray(truth, dtype=np.float64)
    b = estimate.samples if isinstance(estimate, ProfiledCir) else np.asarray(estimate, dtype=np.float64)
    w_start, w_stop = _window_slice(len(a), len(b), w_start, w_stop)
    energy = float(np.dot(a[w_start:w_stop], a[w_start:w_stop]))
    if energy <= 0.0:
        raise NumericError("profiling loss undefined: truth window has zero energy")
    d = a[w_start:w_stop] - b[w_start:w_stop]
    return float(np.dot(d, d)) / energy


def to_db(value: float, floor_db: float = -120.0) -> float:
    """10*log10 with a floor so exact fits do not return -inf."""
    return float(10.0 * np.log10(max(float(value), 10.0 ** (floor_db / 10.0))))


def denoise_threshold(cir: ProfiledCir, noise_floor: float) -> ProfiledCir:
    """Zero every sample below three times the noise floor amplitude."""
    if noise_floor < 0:
        raise ConfigurationError("noise floor must be non-negative")
    s = cir.samples.copy()
    s[s < 3.0 * noise_floor] = 0.0
    return ProfiledCir(s, t_index=cir.t_index)


def write_profile_csv(prof: ProfiledCir, config: SystemConfig, path: str) -> None:
    """Dump a profile as (tap_index, delay_s, magnitude) rows for inspection."""
    t = config.delay_grid(len(prof.samples))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tap_index", "delay_s", "magnitude"])
        for k, (d, m) in enumerate(zip(t, prof.samples)):
            writer.writerow([k, f"{d:.12e}", f"{m:.12e}"])
