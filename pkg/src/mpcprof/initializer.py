"""Search initialization: peak picking and the learned starting-point model.

Two ways to produce the seed parameter set that the iterative refinement
polishes. Peak picking reads local maxima straight off the magnitude
profile; it is parameter-free and is what the estimation pipeline uses by
default. The neural initializer runs a small convolutional network over the
observed window and decodes its output into path parameters; weights come
from an externally trained bundle and inference here is plain numpy, so the
package has no learning-framework dependency.

Weight bundle file layout (little-endian):

    bytes 0..7    magic "MPCWGT01"
    bytes 8..15   uint64 length of the JSON header
    header        UTF-8 JSON: format_version, architecture_id, model_order,
                  input_window, post_pool_len, layers (name/shape/offset)
    blob          float32 tensors, C order, at the stated byte offsets

The convolutional architecture ("mpc-start-v1") is fixed: two same-padded
width-3 convolutions with 12 filters each, max pooling by 2 then by 4, and
three dense layers (50, 50, 3L). The network sees the observed window as
(magnitude, phase) pairs and emits, per path, delay in sample periods,
linear amplitude and phase over pi; paths are decoded in delay order.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig
from .errors import ConfigurationError, FormatError, NumericError
from .types import MpcParamSet, ProfiledCir, ComplexCir, wrap_phase

__all__ = [
    "NnInput",
    "WeightBundle",
    "load_bundle",
    "save_bundle",
    "prepare_input",
    "nn_forward",
    "nn_infer",
    "peak_pick_init",
    "cancel_pick_init",
    "conv_architecture_shapes",
]

MAGIC = b"MPCWGT01"
ARCH_CONV_INIT = "mpc-start-v1"
ARCH_ORDER_MLP = "order-mlp-v1"

CONV_FILTERS = 12
CONV_WIDTH = 3
POOL_1 = 2
POOL_2 = 4
DENSE_WIDTH = 50


# -- peak picking ------------------------------------------------------------

def peak_pick_init(prof: ProfiledCir, model_order: int,
                   config: SystemConfig) -> MpcParamSet:
    """Seed parameters from the strongest local maxima of a profile.

    Picks local maxima in descending magnitude with a minimum mutual
    spacing of n_st/2 taps, converts tap positions to delays and magnitudes
    to amplitudes, and zeroes all phases. If fewer peaks than paths exist,
    the remaining paths are seeded on the strongest leftover taps (same
    spacing rule, relaxed if nothing survives) and the set is flagged
    degenerate. An all-zero profile yields all paths at the grid origin,
    flagged degenerate.
    """
    if model_order < 1:
        raise ConfigurationError("model_order must be >= 1")
    s = prof.samples
    n = len(s)
    if n < 2:
        raise ConfigurationError("profile too short for peak picking")
    if n > 2 * config.grid_len:
        raise ConfigurationError("profile longer than the extended delay grid")
    spacing = max(1, config.n_st // 2)
    grid = config.delay_grid(n)

    if not np.any(s > 0.0):
        zeros = np.zeros(model_order)
        return MpcParamSet(zeros.copy(), zeros.copy(), zeros.copy(),
                           t_index=prof.t_index, degenerate=True)

    left = np.empty(n, dtype=bool)
    right = np.empty(n, dtype=bool)
    left[0] = True
    left[1:] = s[1:] > s[:-1]
    right[-1] = True
    right[:-1] = s[:-1] >= s[1:]
    peak_idx = np.nonzero(left & right & (s > 0.0))[0]

    chosen: list[int] = []
    degenerate = False
    for k in peak_idx[np.argsort(-s[peak_idx], kind="stable")]:
        if len(chosen) == model_order:
            break
        if all(abs(int(k) - c) >= spacing for c in chosen):
            chosen.append(int(k))
    if len(chosen) < model_order:
        degenerate = True
        by_mag = np.argsort(-s, kind="stable")
        for k in by_mag:
            if len(chosen) == model_order:
                break
            if int(k) not in chosen and all(abs(int(k) - c) >= spacing for c in chosen):
                chosen.append(int(k))
        for k in by_mag:
            if len(chosen) == model_order:
                break
            if int(k) not in chosen:
                chosen.append(int(k))
        while len(chosen) < model_order:
            chosen.append(0)

    taps = np.array(sorted(chosen), dtype=np.int64)
    return MpcParamSet(grid[taps], s[taps].astype(np.float64),
                       np.zeros(model_order), t_index=prof.t_index,
                       degenerate=degenerate)


def cancel_pick_init(prof: ProfiledCir, model_order: int,
                     config: SystemConfig) -> MpcParamSet:
    """Seed parameters by successive cancellation on the magnitude profile.

    Plain peak ranking binds to the sidelobes of strong arrivals, which
    outweigh genuinely weak paths (a sinc's first sidelobe carries 22% of
    its peak). Here each picked path's magnitude footprint is subtracted
    from the working profile before the next pick, so later picks see the
    residual instead of the strongest path's skirt. The same minimum
    spacing rule as peak_pick_init applies; phases start at zero.
    """
    if model_order < 1:
        raise ConfigurationError("model_order must be >= 1")
    s = prof.samples.copy()
    n = len(s)
    if n < 2:
        raise ConfigurationError("profile too short for peak picking")
    if n > 2 * config.grid_len:
        raise ConfigurationError("profile longer than the extended delay grid")
    if not np.any(s > 0.0):
        zeros = np.zeros(model_order)
        return MpcParamSet(zeros.copy(), zeros.copy(), zeros.copy(),
                           t_index=prof.t_index, degenerate=True)
    spacing = max(1, config.n_st // 2)
    grid = config.delay_grid(n)
    picks: list[tuple[int, float]] = []
    degenerate = False
    for _ in range(model_order):
        k = -1
        for cand in np.argsort(-s, kind="stable"):
            if all(abs(int(cand) - c) >= spacing for c, _ in picks):
                k = int(cand)
                break
        if k < 0 or s[k] <= 0.0:
            degenerate = True
            taken = {c for c, _ in picks}
            leftovers = [int(c) for c in np.argsort(-s, kind="stable")
                         if int(c) not in taken]
            k = leftovers[0] if leftovers else 0
        a = max(float(s[k]), 0.0)
        picks.append((k, a))
        s = np.maximum(
            s - a * np.abs(np.sinc((grid - grid[k]) * config.bandwidth_hz)), 0.0)
    picks.sort()
    taps = [k for k, _ in picks]
    return MpcParamSet(grid[taps], np.array([a for _, a in picks]),
                       np.zeros(model_order), t_index=prof.t_index,
                       degenerate=degenerate)


# -- learned initializer ------------------------------------------------------

@dataclass
class NnInput:
    """Network input: (window, 2) float64, columns (magnitude, phase)."""

    values: np.ndarray
    t_index: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != 2:
            raise ConfigurationError("network input must have shape (window, 2)")


def prepare_input(cir: ComplexCir, config: SystemConfig) -> NnInput:
    """Magnitude/phase encoding of the first obs_window taps of a CIR.

    Phase of an exactly zero sample is defined as zero.
    """
    w = config.obs_window
    if len(cir.samples) < w:
        raise ConfigurationError(
            f"CIR has {len(cir.samples)} taps, observation window needs {w}")
    x = cir.samples[:w]
    mag = np.abs(x)
    phase = np.where(mag > 0.0, np.angle(x), 0.0)
    return NnInput(np.stack([mag, phase], axis=1), t_index=cir.t_index)


def conv_architecture_shapes(input_window: int, model_order: int) -> list[tuple[str, tuple[int, ...]]]:
    """Expected layer names and shapes for the convolutional initializer.

    Convolution kernels are stored (width, in_channels, out_channels) and
    dense kernels (in_features, out_features).
    """
    pooled = (input_window // POOL_1) // POOL_2
    if pooled < 1:
        raise ConfigurationError(
            f"input window {input_window} collapses to nothing after pooling")
    flat = pooled * CONV_FILTERS
    return [
        ("conv1/kernel", (CONV_WIDTH, 2, CONV_FILTERS)),
        ("conv1/bias", (CONV_FILTERS,)),
        ("conv2/kernel", (CONV_WIDTH, CONV_FILTERS, CONV_FILTERS)),
        ("conv2/bias", (CONV_FILTERS,)),
        ("dense1/kernel", (flat, DENSE_WIDTH)),
        ("dense1/bias", (DENSE_WIDTH,)),
        ("dense2/kernel", (DENSE_WIDTH, DENSE_WIDTH)),
        ("dense2/bias", (DENSE_WIDTH,)),
        ("head/kernel", (DENSE_WIDTH, 3 * model_order)),
        ("head/bias", (3 * model_order,)),
    ]


@dataclass
class WeightBundle:
    """Parsed weight file: header metadata plus named float32 tensors."""

    architecture_id: str
    model_order: int
    input_window: int
    tensors: dict[str, np.ndarray]
    format_version: int = 1
    extra: dict = field(default_factory=dict)

    def tensor(self, name: str) -> np.ndarray:
        try:
            return self.tensors[name]
        except KeyError:
            raise FormatError(f"weight bundle is missing tensor {name!r}") from None


def _validate_conv_bundle(bundle: WeightBundle) -> None:
    expected = conv_architecture_shapes(bundle.input_window, bundle.model_order)
    for name, shape in expected:
        t = bundle.tensor(name)
        if tuple(t.shape) != shape:
            raise FormatError(
                f"tensor {name!r} has shape {tuple(t.shape)}, expected {shape}")


def load_bundle(path: str) -> WeightBundle:
    """Read and validate a weight bundle file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:8] != MAGIC:
        raise FormatError(f"{path!r} is not a weight bundle (bad magic)")
    header_len = int.from_bytes(raw[8:16], "little")
    if 16 + header_len > len(raw):
        raise FormatError("weight bundle header overruns the file")
    try:
        header = json.loads(raw[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"weight bundle header is not valid JSON: {exc}") from exc
    for key in ("format_version", "architecture_id", "model_order",
                "input_window", "layers"):
        if key not in header:
            raise FormatError(f"weight bundle header lacks {key!r}")
    blob = raw[16 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for layer in header["layers"]:
        name = layer["name"]
        shape = tuple(int(v) for v in layer["shape"])
        offset = int(layer["offset"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if offset < 0 or end > len(blob):
            raise FormatError(f"tensor {name!r} overruns the weight blob")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = flat.reshape(shape).astype(np.float32)
    bundle = WeightBundle(
        architecture_id=str(header["architecture_id"]),
        model_order=int(header["model_order"]),
        input_window=int(header["input_window"]),
        tensors=tensors,
        format_version=int(header["format_version"]),
        extra={k: v for k, v in header.items()
               if k not in ("format_version", "architecture_id", "model_order",
                            "input_window", "layers")},
    )
    if bundle.format_version != 1:
        raise FormatError(f"unsupported bundle format version {bundle.format_version}")
    if bundle.architecture_id == ARCH_CONV_INIT:
        _validate_conv_bundle(bundle)
    return bundle


def save_bundle(bundle: WeightBundle, path: str) -> None:
    """Write a bundle; atomic via temp file + rename."""
    layers = []
    chunks = []
    offset = 0
    for name, tensor in bundle.tensors.items():
        data = np.ascontiguousarray(tensor, dtype="<f4")
        layers.append({"name": name, "shape": list(data.shape), "offset": offset,
                       "size": data.nbytes})
        chunks.append(data.tobytes())
        offset += data.nbytes
    header = {
        "format_version": bundle.format_version,
        "architecture_id": bundle.architecture_id,
        "model_order": bundle.model_order,
        "input_window": bundle.input_window,
        "layers": layers,
        **bundle.extra,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    payload = MAGIC + len(header_bytes).to_bytes(8, "little") + header_bytes + b"".join(chunks)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- numpy forward pass -------------------------------------------------------

def _conv1d_same(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Width-3 same-padded stride-1 convolution; x is (n, c_in), float64."""
    width, c_in, c_out = kernel.shape
    pad = (width - 1) // 2
    xp = np.zeros((x.shape[0] + 2 * pad, c_in))
    xp[pad:pad + x.shape[0]] = x
    out = np.zeros((x.shape[0], c_out))
    for w in range(width):
        out += xp[w:w + x.shape[0]] @ kernel[w].astype(np.float64)
    return out + bias.astype(np.float64)


def _maxpool1d(x: np.ndarray, size: int) -> np.ndarray:
    """Non-overlapping max pooling; incomplete trailing windows are dropped."""
    n = (x.shape[0] // size) * size
    return x[:n].reshape(n // size, size, x.shape[1]).max(axis=1)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _f32(x: np.ndarray) -> np.ndarray:
    # Activations are rounded to float32 after every layer so that the
    # numpy pass reproduces a float32 runtime bit-for-bit close.
    return x.astype(np.float32).astype(np.float64)


def nn_forward(x: NnInput | np.ndarray, bundle: WeightBundle) -> np.ndarray:
    """Raw network output (3L encoded values) for one observed window."""
    if bundle.architecture_id != ARCH_CONV_INIT:
        raise FormatError(
            f"bundle architecture {bundle.architecture_id!r} is not a starting-point model")
    h = x.values if isinstance(x, NnInput) else np.asarray(x, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != 2:
        raise ConfigurationError("network input must have shape (window, 2)")
    if h.shape[0] != bundle.input_window:
        raise ConfigurationError(
            f"input window {h.shape[0]} does not match bundle ({bundle.input_window})")
    h = _f32(h)
    h = _f32(_relu(_conv1d_same(h, bundle.tensor("conv1/kernel"), bundle.tensor("conv1/bias"))))
    h = _maxpool1d(h, POOL_1)
    h = _f32(_relu(_conv1d_same(h, bundle.tensor("conv2/kernel"), bundle.tensor("conv2/bias"))))
    h = _maxpool1d(h, POOL_2)
    h = h.reshape(-1)
    h = _f32(_relu(h @ bundle.tensor("dense1/kernel").astype(np.float64)
                   + bundle.tensor("dense1/bias").astype(np.float64)))
    h = _f32(_relu(h @ bundle.tensor("dense2/kernel").astype(np.float64)
                   + bundle.tensor("dense2/bias").astype(np.float64)))
    h = _f32(h @ bundle.tensor("head/kernel").astype(np.float64)
             + bundle.tensor("head/bias").astype(np.float64))
    return h.astype(np.float32)


def nn_infer(x: NnInput, bundle: WeightBundle, config: SystemConfig) -> MpcParamSet:
    """Decode the network output into a parameter set.

    Per path the network emits (delay / sample_period, amplitude,
    phase / pi). Delays are clamped into the representable span, amplitudes
    floored at zero, phases wrapped; paths come out sorted by delay.
    """
    raw = nn_forward(x, bundle).astype(np.float64)
    if not np.all(np.isfinite(raw)):
        raise NumericError("network produced non-finite outputs")
    if len(raw) % 3 != 0:
        raise FormatError("network output length is not a multiple of 3")
    trip = raw.reshape(-1, 3)
    delays = np.clip(trip[:, 0] * config.sample_period, 0.0,
                     np.nextafter(config.max_delay, 0.0))
    amps = np.maximum(trip[:, 1], 0.0)
    phases = wrap_phase(trip[:, 2] * np.pi)
    theta = MpcParamSet(delays, amps, phases, t_index=x.t_index)
    return theta.sorted_by_delay()
