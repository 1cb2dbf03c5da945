"""Beamformed channel synthesis and dataset generation.

The radio-side model: a rectangular array observes L specular paths; per
resource block m the frequency response of path l contributes
exp(-j*2*pi*f_m*tau_l) with f_m = m * csi_spacing. Beamforming projects the
antenna axis onto a steering vector per configured (tilt, azimuth) pair, and
the strongest beam's response is what the delay-domain pipeline consumes.

Dataset generation draws random path parameters per channel, synthesizes
the band-limited impulse response on the oversampled grid, and optionally
adds noise that is white across the resource-block frequency samples. The
noise variance is calibrated so the stored window meets the requested SNR
exactly in expectation. Every channel derives its RNG from (seed, index),
so any slice of a dataset can be regenerated independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError
from .profiler import sample_cir
from .types import BeamformedChannel, ChannelTensor, ComplexCir, MpcParamSet

__all__ = [
    "steering_vector",
    "beamform",
    "select_strongest_beam",
    "synth_freq_response",
    "synth_channel_tensor",
    "freq_to_cir",
    "DatasetSpec",
    "generate_channel",
    "generate_params",
]

MAX_REJECTION_ATTEMPTS = 10000


def steering_vector(tilt: float, azimuth: float, config: SystemConfig) -> np.ndarray:
    """Array response for a plane wave from (tilt, azimuth), both radians.

    Element spacings are in wavelengths. The flattened antenna index runs
    vertical-fastest: a = horizontal_index * n_vert + vertical_index.
    """
    pv = np.exp(-2j * np.pi * config.d_vert * np.sin(tilt)
                * np.arange(config.n_vert))
    ph = np.exp(-2j * np.pi * config.d_horiz * np.sin(azimuth)
                * np.arange(config.n_horiz))
    return np.kron(ph, pv)


def beamform(tensor: ChannelTensor, config: SystemConfig) -> BeamformedChannel:
    """Project the antenna axis onto every configured beam (matched filter).

    Beam b = tilt_index * n_azimuths + azimuth_index combines antennas with
    the conjugate steering vector for that direction.
    """
    if tensor.values.shape[0] != config.n_antennas:
        raise ConfigurationError(
            f"tensor has {tensor.values.shape[0]} antennas, config says {config.n_antennas}")
    angles = [(tilt, az) for tilt in config.tilt_angles for az in config.azimuth_angles]
    weights = np.stack([steering_vector(t, a, config).conj() for t, a in angles])
    values = np.einsum("ba,amt->bmt", weights, tensor.values)
    return BeamformedChannel(values, beam_angles=angles, t_indices=tensor.t_indices.copy())


def select_strongest_beam(bf: BeamformedChannel) -> tuple[int, np.ndarray]:
    """Index and response of the beam with the largest total energy.

    Ties resolve to the lowest beam index.
    """
    energy = np.sum(np.abs(bf.values) ** 2, axis=(1, 2))
    best = int(np.argmax(energy))
    return best, bf.values[best]


def synth_freq_response(theta: MpcParamSet, config: SystemConfig) -> np.ndarray:
    """Noise-free per-resource-block frequency response of a parameter set."""
    theta.validate(config)
    f = np.arange(config.m_prb) * config.csi_spacing_hz
    phasors = np.exp(-2j * np.pi * np.outer(f, theta.delays))
    return phasors @ (theta.amplitudes * np.exp(1j * theta.phases))


def synth_channel_tensor(theta: MpcParamSet, config: SystemConfig,
                         path_angles: list[tuple[float, float]],
                         n_instants: int = 1,
                         instant_rotations: np.ndarray | None = None) -> ChannelTensor:
    """Full (antenna, resource block, time) tensor for given path directions.

    Test and model-order helper: each path arrives from its (tilt, azimuth)
    with the steering-vector signature, and an optional per-instant unit
    rotation models phase evolution over time.
    """
    theta.validate(config)
    if len(path_angles) != theta.order:
        raise ConfigurationError("need one (tilt, azimuth) pair per path")
    if instant_rotations is None:
        instant_rotations = np.ones((theta.order, n_instants), dtype=np.complex128)
    instant_rotations = np.asarray(instant_rotations, dtype=np.complex128)
    if instant_rotations.shape != (theta.order, n_instants):
        raise ConfigurationError("instant_rotations must have shape (order, n_instants)")
    f = np.arange(config.m_prb) * config.csi_spacing_hz
    out = np.zeros((config.n_antennas, config.m_prb, n_instants), dtype=np.complex128)
    for l in range(theta.order):
        a = steering_vector(*path_angles[l], config)
        g = theta.amplitudes[l] * np.exp(1j * theta.phases[l])
        freq = np.exp(-2j * np.pi * f * theta.delays[l])
        out += g * np.einsum("a,m,t->amt", a, freq, instant_rotations[l])
    return ChannelTensor(out, t_indices=np.arange(n_instants, dtype=np.int64))


def freq_to_cir(freq: np.ndarray, config: SystemConfig,
                n_taps: int | None = None, t_index: int = 0) -> ComplexCir:
    """Delay-domain samples of a per-resource-block frequency response.

    Inverse transform matching synth_freq_response: averaging the M
    frequency samples with e^{+j 2 pi f_m t} phasors at every grid tap.
    """
    freq = np.asarray(freq, dtype=np.complex128)
    if freq.ndim != 1 or len(freq) != config.m_prb:
        raise ConfigurationError(f"frequency response must have {config.m_prb} samples")
    t = config.delay_grid(n_taps)
    f = np.arange(config.m_prb) * config.csi_spacing_hz
    kernel = np.exp(2j * np.pi * np.outer(t, f))
    return ComplexCir(kernel @ freq / config.m_prb, t_index=t_index)


@dataclass(frozen=True)
class DatasetSpec:
    """Random channel population. Delay quantities are in sample periods."""

    n_channels: int = 15000
    l_min: int = 1
    l_max: int = 5
    delay_min_ts: float = 0.15
    delay_max_ts: float = 5.0
    min_separation_ts: float = 0.5
    snr_db: float | None = None
    seed: int = 0
    window: int = 256
    fixed_order: int | None = None

    def __post_init__(self) -> None:
        if self.n_channels < 1:
            raise ConfigurationError("n_channels must be >= 1")
        if not (1 <= self.l_min <= self.l_max):
            raise ConfigurationError("need 1 <= l_min <= l_max")
        if self.fixed_order is not None and not (self.l_min <= self.fixed_order <= self.l_max):
            raise ConfigurationError("fixed_order outside [l_min, l_max]")
        if not (0.0 <= self.delay_min_ts < self.delay_max_ts):
            raise ConfigurationError("need 0 <= delay_min_ts < delay_max_ts")
        if self.min_separation_ts < 0:
            raise ConfigurationError("min_separation_ts must be non-negative")
        span = self.delay_max_ts - self.delay_min_ts
        if (self.l_max - 1) * self.min_separation_ts >= span:
            raise ConfigurationError(
                "delay range cannot hold l_max paths at the requested separation")
        if self.window < 1:
            raise ConfigurationError("window must be >= 1")

    def validate_against(self, config: SystemConfig) -> None:
        if self.delay_max_ts * config.sample_period >= config.max_delay:
            raise ConfigurationError("delay_max_ts exceeds the delay span")
        if self.window > 2 * config.grid_len:
            raise ConfigurationError("window exceeds the extended delay grid")
        if self.l_max > config.obs_window:
            raise ConfigurationError("l_max exceeds the observation window")

    def to_dict(self) -> dict:
        return {
            "n_channels": self.n_channels, "l_min": self.l_min, "l_max": self.l_max,
            "delay_min_ts": self.delay_min_ts, "delay_max_ts": self.delay_max_ts,
            "min_separation_ts": self.min_separation_ts, "snr_db": self.snr_db,
            "seed": self.seed, "window": self.window, "fixed_order": self.fixed_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown dataset spec keys: {sorted(unknown)}")
        return cls(**d)


def generate_params(spec: DatasetSpec, config: SystemConfig, index: int) -> MpcParamSet:
    """Ground-truth parameters of channel `index`; deterministic in (seed, index).

    The RNG consumption order is part of the dataset contract: path count,
    then delay draws (with rejection until separated), then phases, then
    amplitudes. Amplitudes are exponential, normalized so the strongest is 1.
    """
    rng = np.random.default_rng((spec.seed, index))
    if spec.fixed_order is not None:
        order = spec.fixed_order
    else:
        order = int(rng.integers(spec.l_min, spec.l_max + 1))
    ts = config.sample_period
    lo, hi = spec.delay_min_ts * ts, spec.delay_max_ts * ts
    sep = spec.min_separation_ts * ts
    for _ in range(MAX_REJECTION_ATTEMPTS):
        delays = np.sort(rng.uniform(lo, hi, order))
        if order == 1 or np.min(np.diff(delays)) >= sep:
            break
    else:
        raise ConfigurationError(
            "could not draw separated delays; separation too tight for the range")
    phases = rng.uniform(0.0, 2.0 * np.pi, order)
    amps = rng.exponential(1.0, order)
    amps = amps / np.max(amps)
    return MpcParamSet(delays, amps, phases, t_index=0)


def generate_channel(spec: DatasetSpec, config: SystemConfig,
                     index: int) -> tuple[MpcParamSet, ComplexCir]:
    """Ground truth and (optionally noisy) impulse response of one channel."""
    spec.validate_against(config)
    theta = generate_params(spec, config, index)
    cir = sample_cir(theta, config, n_taps=spec.window)
    if spec.snr_db is not None:
        rng = np.random.default_rng((spec.seed, index, 1))
        signal_energy = float(np.sum(np.abs(cir.samples) ** 2))
        # white across the M frequency samples; the delay-domain transform
        # scales per-tap noise power to sigma^2 / m_prb
        sigma2 = (config.m_prb / spec.window) * signal_energy * 10.0 ** (-spec.snr_db / 10.0)
        w = rng.standard_normal((config.m_prb, 2))
        noise_freq = np.sqrt(sigma2 / 2.0) * (w[:, 0] + 1j * w[:, 1])
        noise = freq_to_cir(noise_freq, config, n_taps=spec.window)
        cir = ComplexCir(cir.samples + noise.samples, t_index=cir.t_index)
    return theta, cir
