"""Subspace delay estimation from frequency-domain channel samples.

The M equally spaced CSI samples of an L-path channel form a sum of L
complex exponentials in frequency, so delays map to rotational factors
recoverable by shift invariance. The implementation spatially smooths a
Hankel arrangement of the samples, optionally extends it forward-backward,
rotates everything into a real-valued basis with the left-Pi-real unitary
matrices, and solves the invariance equation by least squares. Amplitudes
and phases follow from one linear solve against the raw samples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError, EstimationError
from .types import MpcParamSet, wrap_phase

__all__ = [
    "EspritConfig",
    "esprit_delays",
    "ls_amp_phase",
    "CONDITION_LIMIT",
]

# condition number above which the least-squares completion is flagged
CONDITION_LIMIT = 1e10

# relative singular value below which the signal subspace counts as deficient
RANK_TOL = 1e-10


@dataclass(frozen=True)
class EspritConfig:
    """Subarray geometry and model order for one estimation call.

    subarray_length 0 selects the default balance floor(2M/3) between
    aperture and smoothing; the effective value must exceed the model
    order and stay below M.
    """

    model_order: int
    subarray_length: int = 0
    use_forward_backward: bool = True

    def __post_init__(self) -> None:
        if self.model_order < 1:
            raise ConfigurationError("model_order must be >= 1")
        if self.subarray_length < 0:
            raise ConfigurationError("subarray_length must be >= 0 (0 = auto)")

    def effective_subarray(self, config: SystemConfig) -> int:
        p = self.subarray_length if self.subarray_length else (2 * config.m_prb) // 3
        if not (self.model_order < p < config.m_prb):
            raise ConfigurationError(
                f"subarray length {p} must satisfy L < P < M "
                f"(L={self.model_order}, M={config.m_prb})")
        return p


def _exchange(n: int) -> np.ndarray:
    return np.fliplr(np.eye(n))


def _unitary_q(n: int) -> np.ndarray:
    """Left-Pi-real unitary basis: Q^H x is real for conjugate-centro-symmetric x."""
    half = n // 2
    eye = np.eye(half)
    pi = _exchange(half)
    if n % 2 == 0:
        q = np.block([[eye, 1j * eye], [pi, -1j * pi]])
    else:
        col = np.zeros((half, 1))
        q = np.block([
            [eye, col, 1j * eye],
            [col.T, np.array([[np.sqrt(2.0)]]), col.T],
            [pi, col, -1j * pi],
        ])
    return q / np.sqrt(2.0)


def _hankel_snapshots(x: np.ndarray, p: int) -> np.ndarray:
    k = len(x) - p + 1
    idx = np.arange(p)[:, None] + np.arange(k)[None, :]
    return x[idx]


def _signal_subspace(mat: np.ndarray, order: int) -> np.ndarray:
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if len(s) < order or s[0] <= 0.0 or s[order - 1] <= RANK_TOL * s[0]:
        raise EstimationError(
            f"signal subspace rank deficient: need {order} components, "
            f"singular values {s[:order]}")
    return u[:, :order]


def esprit_delays(freq_response: np.ndarray, cfg: EspritConfig,
                  config: SystemConfig) -> np.ndarray:
    """Delays of the dominant L paths, sorted ascending.

    Folds each estimate into the unambiguous span [0, 1/csi_spacing_hz),
    roughly 5.56 us at the default spacing, which comfortably covers the
    valid delay range. Raises EstimationError when the data cannot support
    the requested order.
    """
    x = np.asarray(freq_response, dtype=np.complex128).reshape(-1)
    if len(x) != config.m_prb:
        raise ConfigurationError(
            f"frequency response must have {config.m_prb} samples, got {len(x)}")
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise ConfigurationError("frequency response contains non-finite samples")
    p = cfg.effective_subarray(config)
    order = cfg.model_order
    xs = _hankel_snapshots(x, p)
    j1 = np.eye(p - 1, p, k=0)
    j2 = np.eye(p - 1, p, k=1)
    if cfg.use_forward_backward:
        z = np.hstack([xs, _exchange(p) @ xs.conj() @ _exchange(xs.shape[1])])
        qp = _unitary_q(p)
        q2k = _unitary_q(z.shape[1])
        # exactly real for forward-backward data; .real drops numerical dust
        real_data = (qp.conj().T @ z @ q2k).real
        es = _signal_subspace(real_data, order)
        qp1 = _unitary_q(p - 1).conj().T
        k1 = (qp1 @ (j1 + j2) @ qp).real
        k2 = (qp1 @ (1j * (j1 - j2)) @ qp).real
        psi, *_ = np.linalg.lstsq(k1 @ es, k2 @ es, rcond=None)
        # noise can split real eigenvalues into conjugate pairs; the real
        # part is the standard unitary ESPRIT readout
        mu = 2.0 * np.arctan(np.linalg.eigvals(psi).real)
    else:
        es = _signal_subspace(xs, order)
        psi, *_ = np.linalg.lstsq(j1 @ es, j2 @ es, rcond=None)
        mu = np.angle(np.linalg.eigvals(psi))
    span = 1.0 / config.csi_spacing_hz
    delays = np.mod(-mu / (2.0 * np.pi * config.csi_spacing_hz), span)
    return np.sort(delays)


def ls_amp_phase(delays: np.ndarray, freq_response: np.ndarray,
                 config: SystemConfig) -> MpcParamSet:
    """Least-squares amplitudes and phases for fixed delays.

    Solves min ||A x - y|| with A[m, l] = exp(-2j pi f_m tau_l). A condition
    number beyond CONDITION_LIMIT (for instance duplicated delays) flags
    the result as degenerate instead of raising; the numbers are still the
    minimum-norm solution.
    """
    delays = np.asarray(delays, dtype=np.float64).reshape(-1)
    y = np.asarray(freq_response, dtype=np.complex128).reshape(-1)
    if len(y) != config.m_prb:
        raise ConfigurationError(
            f"frequency response must have {config.m_prb} samples, got {len(y)}")
    if len(delays) < 1:
        raise ConfigurationError("at least one delay required")
    f = np.arange(config.m_prb) * config.csi_spacing_hz
    a = np.exp(-2j * np.pi * np.outer(f, delays))
    s = np.linalg.svd(a, compute_uv=False)
    degenerate = bool(s[-1] <= 0.0 or s[0] / s[-1] > CONDITION_LIMIT)
    x, *_ = np.linalg.lstsq(a, y, rcond=None)
    return MpcParamSet(delays.copy(), np.abs(x), wrap_phase(np.angle(x)),
                       degenerate=degenerate)
