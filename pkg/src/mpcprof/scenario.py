"""Declarative parameter-evolution scenarios for prediction runs.

A scenario assigns each path three laws (delay, amplitude, phase), each
one of constant | linear | quadratic | sinusoidal over the snapshot index
t. Scenarios load from JSON so prediction experiments are reproducible
artifacts rather than code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import DatasetSpec, generate_params
from .config import SystemConfig
from .errors import ConfigurationError, FormatError
from .profiler import profile, sample_cir
from .types import MpcParamSet, ProfiledCir

__all__ = [
    "ParameterLaw",
    "PathLaws",
    "DriftScenario",
    "load_scenario",
    "scenario_from_dict",
    "scenario_from_params",
    "random_drift_scenario",
    "synthesize_truth",
    "LAW_KINDS",
]

LAW_KINDS = ("constant", "linear", "quadratic", "sinusoidal")


@dataclass(frozen=True)
class ParameterLaw:
    """One scalar evolution law evaluated on the snapshot axis."""

    kind: str
    base: float
    rate: float = 0.0
    accel: float = 0.0
    amplitude: float = 0.0
    period: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in LAW_KINDS:
            raise ConfigurationError(
                f"unknown law kind {self.kind!r}, expected one of {LAW_KINDS}")
        if self.kind == "sinusoidal" and self.period <= 0.0:
            raise ConfigurationError("sinusoidal laws need a positive period")

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return self.base
        if self.kind == "linear":
            return self.base + self.rate * t
        if self.kind == "quadratic":
            return self.base + self.rate * t + self.accel * t * t
        return self.base + self.amplitude * np.sin(
            2.0 * np.pi * t / self.period + self.phase)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "base": self.base}
        if self.kind in ("linear", "quadratic"):
            d["rate"] = self.rate
        if self.kind == "quadratic":
            d["accel"] = self.accel
        if self.kind == "sinusoidal":
            d.update(amplitude=self.amplitude, period=self.period, phase=self.phase)
        return d


@dataclass(frozen=True)
class PathLaws:
    delay: ParameterLaw
    amplitude: ParameterLaw
    phase: ParameterLaw


@dataclass(frozen=True)
class DriftScenario:
    """Evolution laws for every path plus bookkeeping metadata."""

    paths: tuple[PathLaws, ...]
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.paths:
            raise ConfigurationError("scenario needs at least one path")

    @property
    def order(self) -> int:
        return len(self.paths)

    def params_at(self, t: float) -> MpcParamSet:
        delays = np.array([p.delay.value(t) for p in self.paths])
        amps = np.maximum(np.array([p.amplitude.value(t) for p in self.paths]), 0.0)
        phases = np.array([p.phase.value(t) for p in self.paths])
        return MpcParamSet(delays, amps, phases, t_index=int(round(t)))

    def to_dict(self) -> dict:
        d = {
            "format_version": 1,
            "paths": [
                {"delay": p.delay.to_dict(), "amplitude": p.amplitude.to_dict(),
                 "phase": p.phase.to_dict()}
                for p in self.paths
            ],
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def _law_from_dict(d: dict, where: str) -> ParameterLaw:
    if not isinstance(d, dict) or "kind" not in d or "base" not in d:
        raise FormatError(f"{where}: law needs at least kind and base")
    known = {"kind", "base", "rate", "accel", "amplitude", "period", "phase"}
    unknown = set(d) - known
    if unknown:
        raise FormatError(f"{where}: unknown law keys {sorted(unknown)}")
    try:
        return ParameterLaw(**{k: (str(v) if k == "kind" else float(v))
                               for k, v in d.items()})
    except (TypeError, ValueError, ConfigurationError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def scenario_from_dict(d: dict) -> DriftScenario:
    if not isinstance(d, dict) or "paths" not in d:
        raise FormatError("scenario needs a paths list")
    if d.get("format_version", 1) != 1:
        raise FormatError(f"unsupported scenario format version {d['format_version']}")
    paths = []
    for i, p in enumerate(d["paths"]):
        if not isinstance(p, dict) or set(p) != {"delay", "amplitude", "phase"}:
            raise FormatError(
                f"path {i} must define exactly delay, amplitude and phase laws")
        paths.append(PathLaws(
            delay=_law_from_dict(p["delay"], f"path {i} delay"),
            amplitude=_law_from_dict(p["amplitude"], f"path {i} amplitude"),
            phase=_law_from_dict(p["phase"], f"path {i} phase"),
        ))
    seed = d.get("seed")
    if seed is not None:
        seed = int(seed)
    try:
        return DriftScenario(tuple(paths), seed=seed)
    except ConfigurationError as exc:
        raise FormatError(str(exc)) from exc


def load_scenario(path: str) -> DriftScenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path!r} is not valid scenario JSON: {exc}") from exc
    return scenario_from_dict(d)


def scenario_from_params(theta: MpcParamSet, delay_rate: float = 0.0,
                         amp_rate: float = 0.0, phase_rate: float = 0.0,
                         seed: int | None = None) -> DriftScenario:
    """Linear-drift scenario anchored at an existing parameter set.

    Rates are per snapshot step; zero rates give constant laws so a static
    scenario round-trips exactly.
    """
    def law(base: float, rate: float) -> ParameterLaw:
        if rate == 0.0:
            return ParameterLaw("constant", base)
        return ParameterLaw("linear", base, rate=rate)

    paths = tuple(
        PathLaws(delay=law(float(theta.delays[l]), delay_rate),
                 amplitude=law(float(theta.amplitudes[l]), amp_rate),
                 phase=law(float(theta.phases[l]), phase_rate))
        for l in range(theta.order)
    )
    return DriftScenario(paths, seed=seed)


def random_drift_scenario(spec: DatasetSpec, config: SystemConfig, index: int,
                          delay_rate: float = 0.0, amp_rate: float = 0.0,
                          phase_rate: float = 0.0) -> DriftScenario:
    """Draw base parameters from the dataset generator and attach drift."""
    theta = generate_params(spec, config, index)
    return scenario_from_params(theta, delay_rate=delay_rate, amp_rate=amp_rate,
                                phase_rate=phase_rate, seed=spec.seed)


def synthesize_truth(scenario: DriftScenario, config: SystemConfig,
                     t_indices: list[int] | np.ndarray,
                     n_taps: int | None = None) -> list[tuple[MpcParamSet, ProfiledCir]]:
    """Exact ground-truth parameter sets and profiles along the scenario."""
    if n_taps is None:
        n_taps = config.obs_window
    out = []
    for t in t_indices:
        theta = scenario.params_at(float(t)).wrapped()
        out.append((theta, profile(sample_cir(theta, config, n_taps=n_taps))))
    return out
