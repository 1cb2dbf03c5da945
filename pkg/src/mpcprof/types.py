"""Core data carriers shared across modules.

Multipath parameter sets are stored as parallel float64 arrays (delay,
amplitude, phase per path) rather than lists of records; every numeric
routine in the package wants them that way. Impulse responses come in two
flavours: complex tap vectors straight off the channel, and real magnitude
profiles used as estimation targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError

__all__ = [
    "MpcParamSet",
    "ComplexCir",
    "ProfiledCir",
    "ChannelTensor",
    "BeamformedChannel",
    "wrap_phase",
]

TWO_PI = 2.0 * np.pi


def wrap_phase(phi: np.ndarray | float) -> np.ndarray | float:
    """Wrap phases into [0, 2*pi)."""
    return np.mod(phi, TWO_PI)


def _as_f64(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be one-dimensional")
    return arr


@dataclass
class MpcParamSet:
    """Parameters of L multipath components at one time instant.

    delays are seconds, amplitudes linear (>= 0), phases radians. Paths are
    conventionally kept sorted by delay, but trackers may return them in
    track order so that index l keeps its identity across instants; anything
    that requires sorted delays sorts explicitly.

    `degenerate` marks sets where the producer could not populate all paths
    meaningfully (peak picking found fewer peaks than requested, a path
    collapsed to zero amplitude, an ill-conditioned solve, ...). The values
    are still usable; the flag is advisory.
    """

    delays: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    t_index: int = 0
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.delays = _as_f64(self.delays, "delays")
        self.amplitudes = _as_f64(self.amplitudes, "amplitudes")
        self.phases = _as_f64(self.phases, "phases")
        if not (len(self.delays) == len(self.amplitudes) == len(self.phases)):
            raise ConfigurationError("delays, amplitudes and phases must have equal length")

    @property
    def order(self) -> int:
        """Number of paths L."""
        return len(self.delays)

    def validate(self, config: SystemConfig) -> None:
        """Check ranges against a system configuration; raises on violation."""
        if self.order == 0:
            raise ConfigurationError("parameter set holds no paths")
        if not (np.all(np.isfinite(self.delays))
                and np.all(np.isfinite(self.amplitudes))
                and np.all(np.isfinite(self.phases))):
            raise ConfigurationError("parameter set contains non-finite values")
        if np.any(self.delays < 0.0) or np.any(self.delays >= config.max_delay):
            raise ConfigurationError(
                f"delays must lie in [0, {config.max_delay:.3e}) seconds"
            )
        if np.any(self.amplitudes < 0.0):
            raise ConfigurationError("amplitudes must be non-negative")

    def sorted_by_delay(self) -> "MpcParamSet":
        """Copy with paths reordered by ascending delay (stable)."""
        perm = np.argsort(self.delays, kind="stable")
        return MpcParamSet(
            self.delays[perm].copy(),
            self.amplitudes[perm].copy(),
            self.phases[perm].copy(),
            t_index=self.t_index,
            degenerate=self.degenerate,
        )

    def wrapped(self) -> "MpcParamSet":
        """Copy with phases wrapped into [0, 2*pi)."""
        return MpcParamSet(
            self.delays.copy(),
            self.amplitudes.copy(),
            wrap_phase(self.phases),
            t_index=self.t_index,
            degenerate=self.degenerate,
        )

    def copy(self) -> "MpcParamSet":
        return MpcParamSet(
            self.delays.copy(),
            self.amplitudes.copy(),
            self.phases.copy(),
            t_index=self.t_index,
            degenerate=self.degenerate,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "delays": self.delays.tolist(),
            "amplitudes": self.amplitudes.tolist(),
            "phases": self.phases.tolist(),
            "t_index": int(self.t_index),
            "degenerate": bool(self.degenerate),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MpcParamSet":
        return cls(
            np.asarray(d["delays"], dtype=np.float64),
            np.asarray(d["amplitudes"], dtype=np.float64),
            np.asarray(d["phases"], dtype=np.float64),
            t_index=int(d.get("t_index", 0)),
            degenerate=bool(d.get("degenerate", False)),
        )


@dataclass
class ComplexCir:
    """Complex impulse response samples on the oversampled delay grid."""

    samples: np.ndarray
    t_index: int = 0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ConfigurationError("CIR samples must be one-dimensional")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class ProfiledCir:
    """Magnitude profile of an impulse response (real, >= 0)."""

    samples: np.ndarray
    t_index: int = 0

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ConfigurationError("profile samples must be one-dimensional")

    def __len__(self) -> int:
        return len(self.samples)

    def energy(self, w_start: int = 0, w_stop: int | None = None) -> float:
        """Sum of squared samples over the half-open window [w_start, w_stop)."""
        if w_stop is None:
            w_stop = len(self.samples)
        return float(np.sum(self.samples[w_start:w_stop] ** 2))


@dataclass
class ChannelTensor:
    """Frequency response over (antenna, resource block, time): complex tensor.

    Antenna axis is flattened over the rectangular array with the vertical
    index running fastest: a = n_horiz_index * n_vert + n_vert_index.
    """

    values: np.ndarray
    t_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3:
            raise ConfigurationError("channel tensor must be 3-dimensional")
        self.t_indices = np.asarray(self.t_indices, dtype=np.int64)
        if len(self.t_indices) == 0:
            self.t_indices = np.arange(self.values.shape[2], dtype=np.int64)
        if len(self.t_indices) != self.values.shape[2]:
            raise ConfigurationError("t_indices length must match the time axis")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass
class BeamformedChannel:
    """Per-beam frequency response: (beam, resource block, time)."""

    values: np.ndarray
    beam_angles: list[tuple[float, float]] = field(default_factory=list)
    t_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 3:
            raise ConfigurationError("beamformed channel must be 3-dimensional")
        if self.beam_angles and len(self.beam_angles) != self.values.shape[0]:
            raise ConfigurationError("beam_angles length must match the beam axis")
        self.t_indices = np.asarray(self.t_indices, dtype=np.int64)
        if len(self.t_indices) == 0:
            self.t_indices = np.arange(self.values.shape[2], dtype=np.int64)
        if len(self.t_indices) != self.values.shape[2]:
            raise ConfigurationError("t_indices length must match the time axis")
