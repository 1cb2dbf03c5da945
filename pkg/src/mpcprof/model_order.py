"""Model order selection from multilinear channel structure.

An L-path channel over (antenna, resource block, time) is a sum of L
rank-1 terms, so every mode-d unfolding of the tensor carries at most L
significant singular values. Counting the values that stay above a noise
floor, mode by mode, and taking the median across modes gives a cheap
deterministic order estimate. A small dense classifier over the same
singular-value features can replace the rule when trained weights are
available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormatError, NumericError
from .initializer import ARCH_ORDER_MLP, WeightBundle, _f32, _relu
from .types import ChannelTensor

__all__ = [
    "ModeSingularValues",
    "hosvd_singular_values",
    "select_model_order",
    "singular_value_features",
    "write_feature_csv",
    "nn_model_order",
    "DEFAULT_NOISE_FLOOR_DB",
    "FEATURE_TOP_K",
]

DEFAULT_NOISE_FLOOR_DB = -25.0
FEATURE_TOP_K = 8


@dataclass
class ModeSingularValues:
    """Per-mode singular value vectors of one channel tensor.

    values[d] holds the singular values of the mode-d unfolding, sorted
    non-increasing. Every mode carries the full tensor energy, which
    `validate` cross-checks.
    """

    values: tuple[np.ndarray, ...]
    tensor_shape: tuple[int, ...]
    degenerate: bool = field(default=False, compare=False)

    @property
    def n_modes(self) -> int:
        return len(self.values)

    def validate(self) -> None:
        if len(self.values) != len(self.tensor_shape):
            raise ConfigurationError("one singular value vector per mode required")
        energies = []
        for d, sv in enumerate(self.values):
            sv = np.asarray(sv, dtype=np.float64)
            if sv.ndim != 1 or sv.size == 0:
                raise ConfigurationError(f"mode {d} singular values must be 1-D and nonempty")
            if not np.all(np.isfinite(sv)) or np.any(sv < 0):
                raise ConfigurationError(f"mode {d} singular values must be finite and >= 0")
            if np.any(np.diff(sv) > 0):
                raise ConfigurationError(f"mode {d} singular values must be non-increasing")
            energies.append(float(np.dot(sv, sv)))
        ref = max(energies)
        if ref > 0.0:
            for d, e in enumerate(energies):
                if abs(e - ref) > 1e-8 * ref:
                    raise NumericError(
                        f"mode {d} energy {e:.6e} disagrees with tensor energy {ref:.6e}")


def _mode_unfolding(x: np.ndarray, d: int) -> np.ndarray:
    # cyclic convention: mode d rows, remaining modes in order d+1, d+2, ...
    n = x.ndim
    axes = [(d + k) % n for k in range(n)]
    return np.transpose(x, axes).reshape(x.shape[d], -1)


def hosvd_singular_values(tensor: ChannelTensor | np.ndarray) -> ModeSingularValues:
    """Singular values of every cyclic mode unfolding (no core retained)."""
    x = tensor.values if isinstance(tensor, ChannelTensor) else np.asarray(tensor)
    if x.size == 0:
        raise ConfigurationError("channel tensor is empty")
    x = x.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
        raise NumericError("channel tensor contains non-finite entries")
    if not np.any(x):
        values = tuple(np.zeros(min(s, x.size // s)) for s in x.shape)
        return ModeSingularValues(values, x.shape, degenerate=True)
    values = tuple(
        np.linalg.svd(_mode_unfolding(x, d), compute_uv=False) for d in range(x.ndim)
    )
    return ModeSingularValues(values, x.shape)


def select_model_order(sv: ModeSingularValues,
                       noise_floor_db: float = DEFAULT_NOISE_FLOOR_DB) -> int:
    """Median over modes of the count of singular values above the floor.

    The floor is relative to each mode's largest value on the 20*log10
    amplitude scale. Degenerate (all-zero) inputs collapse to L=1, the
    smallest representable order.
    """
    sv.validate()
    threshold = 10.0 ** (noise_floor_db / 20.0)
    counts = []
    for vec in sv.values:
        top = float(vec[0])
        if top <= 0.0:
            counts.append(0)
        else:
            counts.append(int(np.sum(vec > top * threshold)))
    return max(1, int(round(float(np.median(counts)))))


def singular_value_features(sv: ModeSingularValues, top_k: int = FEATURE_TOP_K,
                            modes: tuple[int, ...] | None = None) -> np.ndarray:
    """Concatenated per-mode top-k singular values, each mode max-normalized.

    Shorter modes are zero-padded so the feature length is always
    top_k * len(modes); this is the classifier input layout and the CSV
    export format shared with the trainer.
    """
    if top_k < 1:
        raise ConfigurationError("top_k must be >= 1")
    if modes is None:
        modes = tuple(range(sv.n_modes))
    out = np.zeros(top_k * len(modes), dtype=np.float64)
    for i, d in enumerate(modes):
        if not (0 <= d < sv.n_modes):
            raise ConfigurationError(f"mode index {d} out of range")
        vec = np.asarray(sv.values[d], dtype=np.float64)
        top = float(vec[0]) if vec.size else 0.0
        k = min(top_k, vec.size)
        if top > 0.0:
            out[i * top_k:i * top_k + k] = vec[:k] / top
    return out


def write_feature_csv(path: str, orders: list[int],
                      features: list[np.ndarray]) -> None:
    """Dump (order, feature...) rows for the external classifier trainer."""
    if len(orders) != len(features):
        raise ConfigurationError("one order label per feature row required")
    with open(path, "w", encoding="utf-8") as fh:
        width = len(features[0]) if features else 0
        fh.write("order," + ",".join(f"sv{i}" for i in range(width)) + "\n")
        for L, row in zip(orders, features):
            if len(row) != width:
                raise ConfigurationError("feature rows must have equal length")
            fh.write(f"{L}," + ",".join(f"{v:.9e}" for v in row) + "\n")


def nn_model_order(sv: ModeSingularValues, bundle: WeightBundle) -> int:
    """Classifier-based order estimate: 1 + argmax of the class scores.

    The bundle's input_window field holds the expected feature length.
    Optional header keys top_k and modes override the feature layout.
    """
    if bundle.architecture_id != ARCH_ORDER_MLP:
        raise FormatError(
            f"bundle architecture {bundle.architecture_id!r} is not an order classifier")
    top_k = int(bundle.extra.get("top_k", FEATURE_TOP_K))
    modes = bundle.extra.get("modes")
    modes = tuple(int(m) for m in modes) if modes is not None else None
    feats = singular_value_features(sv, top_k=top_k, modes=modes)
    if len(feats) != bundle.input_window:
        raise FormatError(
            f"feature length {len(feats)} does not match bundle input "
            f"({bundle.input_window})")
    h = _f32(feats)
    i = 1
    while f"dense{i}/kernel" in bundle.tensors:
        k = bundle.tensor(f"dense{i}/kernel").astype(np.float64)
        b = bundle.tensor(f"dense{i}/bias").astype(np.float64)
        if h.shape[0] != k.shape[0]:
            raise FormatError(f"dense{i} expects {k.shape[0]} inputs, got {h.shape[0]}")
        h = _f32(_relu(h @ k + b))
        i += 1
    if "head/kernel" not in bundle.tensors:
        raise FormatError("order classifier bundle lacks a head layer")
    k = bundle.tensor("head/kernel").astype(np.float64)
    b = bundle.tensor("head/bias").astype(np.float64)
    if h.shape[0] != k.shape[0]:
        raise FormatError(f"head expects {k.shape[0]} inputs, got {h.shape[0]}")
    scores = h @ k + b
    if not np.all(np.isfinite(scores)):
        raise NumericError("order classifier produced non-finite scores")
    return 1 + int(np.argmax(scores))
