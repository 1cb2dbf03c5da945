"""System configuration: numerology, array geometry and the delay grid.

All delay quantities are seconds, frequencies Hz, angles radians. The delay
grid is the oversampled tap lattice on which channel impulse responses are
sampled and profiles are compared:

    t[k] = (k + 1) * sample_period / n_st,   k = 0 .. m_prb * n_st - 1

i.e. tap 0 sits one oversampled step after zero, and the grid spans one
sample period per resource block. An extended grid of twice that length is
available for reconstructions whose tails run past the nominal span.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError

__all__ = ["SystemConfig", "load_config"]


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters.

    Defaults describe the setup all tooling assumes unless overridden: 600
    subcarriers over 50 resource blocks, reference-signal spacing of 180 kHz,
    a 4x16 uniform rectangular array at 0.7/0.5 wavelength spacing, 10 MHz
    single-sided bandwidth and six-fold delay oversampling.
    """

    n_subcarriers: int = 600
    m_prb: int = 50
    csi_spacing_hz: float = 180e3
    n_vert: int = 4
    n_horiz: int = 16
    d_vert: float = 0.7
    d_horiz: float = 0.5
    wavelength_m: float = 0.14
    bandwidth_hz: float = 10e6
    n_st: int = 6
    tilt_angles: tuple[float, ...] = (math.radians(7.0), math.radians(12.0))
    azimuth_angles: tuple[float, ...] = (
        math.radians(-45.0),
        math.radians(-15.0),
        math.radians(15.0),
        math.radians(45.0),
    )
    obs_window: int = 256

    def __post_init__(self) -> None:
        if self.n_subcarriers <= 0 or self.m_prb <= 0:
            raise ConfigurationError("subcarrier and resource block counts must be positive")
        if self.n_subcarriers % self.m_prb != 0:
            raise ConfigurationError(
                f"n_subcarriers={self.n_subcarriers} not divisible by m_prb={self.m_prb}"
            )
        if self.bandwidth_hz <= 0 or self.csi_spacing_hz <= 0:
            raise ConfigurationError("bandwidth and reference-signal spacing must be positive")
        if self.n_st < 1:
            raise ConfigurationError("delay oversampling factor must be >= 1")
        if self.n_vert < 1 or self.n_horiz < 1:
            raise ConfigurationError("array dimensions must be >= 1")
        if self.wavelength_m <= 0 or self.d_vert <= 0 or self.d_horiz <= 0:
            raise ConfigurationError("wavelength and element spacings must be positive")
        if not (0 < self.obs_window <= 2 * self.grid_len):
            raise ConfigurationError(
                f"obs_window={self.obs_window} outside (0, {2 * self.grid_len}]"
            )

    # -- derived quantities ------------------------------------------------

    @property
    def sample_period(self) -> float:
        """Tap period 1/B in seconds."""
        return 1.0 / self.bandwidth_hz

    @property
    def grid_step(self) -> float:
        """Spacing of the oversampled delay grid."""
        return self.sample_period / self.n_st

    @property
    def grid_len(self) -> int:
        """Number of taps on the nominal delay grid."""
        return self.m_prb * self.n_st

    @property
    def max_delay(self) -> float:
        """Upper edge of admissible path delays (exclusive)."""
        return self.m_prb * self.sample_period

    @property
    def n_antennas(self) -> int:
        return self.n_vert * self.n_horiz

    @property
    def n_beams(self) -> int:
        return len(self.tilt_angles) * len(self.azimuth_angles)

    def delay_grid(self, n_taps: int | None = None) -> np.ndarray:
        """Delays of the first `n_taps` grid taps (default: nominal grid).

        Up to twice the nominal length is supported; beyond that the
        reconstruction machinery has no sinc table coverage.
        """
        if n_taps is None:
            n_taps = self.grid_len
        if not (0 < n_taps <= 2 * self.grid_len):
            raise ConfigurationError(f"n_taps={n_taps} outside (0, {2 * self.grid_len}]")
        return (np.arange(1, n_taps + 1, dtype=np.float64) / self.n_st) * self.sample_period

    def replace(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


def load_config(path: str) -> SystemConfig:
    """Read a SystemConfig from a JSON file of field overrides.

    Unknown keys are rejected so typos fail loudly rather than silently
    keeping a default.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config file {path!r} must contain a JSON object")
    known = set(SystemConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("tilt_angles", "azimuth_angles"):
        if key in raw:
            raw[key] = tuple(float(v) for v in raw[key])
    return SystemConfig(**raw)
