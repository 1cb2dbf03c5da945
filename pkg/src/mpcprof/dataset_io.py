"""Binary dataset storage.

A dataset is a directory holding `metadata.json` (format version, channel
count, stored window length, the generating spec and the system config) and
`channels.bin` with one variable-length record per channel, little-endian:

    uint32                      path count L
    float64 * 3L                per path: delay_s, amplitude, phase
    float64 * 2W                impulse response, re/im interleaved per tap

Records are written in channel order and read sequentially. File bytes are
fully determined by (spec, config), with no timestamps, so regenerating a
dataset reproduces it bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .channel import DatasetSpec, generate_channel
from .config import SystemConfig
from .errors import FormatError
from .types import ComplexCir, MpcParamSet

__all__ = [
    "ChannelRecord",
    "write_dataset",
    "generate_dataset",
    "read_metadata",
    "iter_dataset",
    "load_dataset",
]

FORMAT_VERSION = 1
METADATA_NAME = "metadata.json"
CHANNELS_NAME = "channels.bin"


@dataclass
class ChannelRecord:
    """One stored channel: ground truth parameters plus impulse response."""

    index: int
    theta: MpcParamSet
    cir: ComplexCir


def _encode_record(theta: MpcParamSet, cir: ComplexCir, window: int) -> bytes:
    if len(cir.samples) != window:
        raise FormatError(
            f"channel holds {len(cir.samples)} taps, dataset window is {window}")
    head = np.uint32(theta.order).tobytes()
    triples = np.empty((theta.order, 3), dtype="<f8")
    triples[:, 0] = theta.delays
    triples[:, 1] = theta.amplitudes
    triples[:, 2] = theta.phases
    iq = np.empty((window, 2), dtype="<f8")
    iq[:, 0] = cir.samples.real
    iq[:, 1] = cir.samples.imag
    return head + triples.tobytes() + iq.tobytes()


def write_dataset(records: Iterable[tuple[MpcParamSet, ComplexCir]],
                  spec: DatasetSpec, config: SystemConfig, out_dir: str,
                  force: bool = False) -> dict:
    """Stream records to disk; refuses to overwrite unless `force`."""
    os.makedirs(out_dir, exist_ok=True)
    meta_path = os.path.join(out_dir, METADATA_NAME)
    bin_path = os.path.join(out_dir, CHANNELS_NAME)
    if not force and (os.path.exists(meta_path) or os.path.exists(bin_path)):
        raise FileExistsError(
            f"dataset already exists in {out_dir!r} (use force to overwrite)")
    n_written = 0
    with open(bin_path, "wb") as fh:
        for theta, cir in records:
            fh.write(_encode_record(theta, cir, spec.window))
            n_written += 1
    if n_written != spec.n_channels:
        raise FormatError(
            f"spec promises {spec.n_channels} channels, generator yielded {n_written}")
    metadata = {
        "format_version": FORMAT_VERSION,
        "n_channels": n_written,
        "window": spec.window,
        "spec": spec.to_dict(),
        "config": {
            "n_subcarriers": config.n_subcarriers,
            "m_prb": config.m_prb,
            "csi_spacing_hz": config.csi_spacing_hz,
            "n_vert": config.n_vert,
            "n_horiz": config.n_horiz,
            "d_vert": config.d_vert,
            "d_horiz": config.d_horiz,
            "wavelength_m": config.wavelength_m,
            "bandwidth_hz": config.bandwidth_hz,
            "n_st": config.n_st,
            "tilt_angles": list(config.tilt_angles),
            "azimuth_angles": list(config.azimuth_angles),
            "obs_window": config.obs_window,
        },
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return metadata


def generate_dataset(spec: DatasetSpec, config: SystemConfig, out_dir: str,
                     force: bool = False) -> dict:
    """Generate spec.n_channels channels and write them out."""
    spec.validate_against(config)

    def _records():
        for index in range(spec.n_channels):
            yield generate_channel(spec, config, index)

    return write_dataset(_records(), spec, config, out_dir, force=force)


def read_metadata(dataset_dir: str) -> dict:
    meta_path = os.path.join(dataset_dir, METADATA_NAME)
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{dataset_dir!r} holds no dataset metadata") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"dataset metadata is not valid JSON: {exc}") from exc
    for key in ("format_version", "n_channels", "window"):
        if key not in meta:
            raise FormatError(f"dataset metadata lacks {key!r}")
    if meta["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported dataset format version {meta['format_version']}")
    return meta


def config_from_metadata(meta: dict) -> SystemConfig:
    raw = dict(meta.get("config", {}))
    for key in ("tilt_angles", "azimuth_angles"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return SystemConfig(**raw)


def iter_dataset(dataset_dir: str, max_channels: int | None = None) -> Iterator[ChannelRecord]:
    """Yield channel records in stored order."""
    meta = read_metadata(dataset_dir)
    window = int(meta["window"])
    n_channels = int(meta["n_channels"])
    if max_channels is not None:
        n_channels = min(n_channels, max_channels)
    bin_path = os.path.join(dataset_dir, CHANNELS_NAME)
    record_tail = 16 * window
    try:
        fh = open(bin_path, "rb")
    except FileNotFoundError:
        raise FormatError(f"{dataset_dir!r} lacks {CHANNELS_NAME}") from None
    with fh:
        for index in range(n_channels):
            head = fh.read(4)
            if len(head) < 4:
                raise FormatError(f"dataset truncated at channel {index}")
            order = int(np.frombuffer(head, dtype="<u4")[0])
            if not (1 <= order <= 4096):
                raise FormatError(f"channel {index} has implausible path count {order}")
            body = fh.read(24 * order + record_tail)
            if len(body) < 24 * order + record_tail:
                raise FormatError(f"dataset truncated inside channel {index}")
            triples = np.frombuffer(body, dtype="<f8", count=3 * order).reshape(order, 3)
            iq = np.frombuffer(body, dtype="<f8", offset=24 * order).reshape(window, 2)
            theta = MpcParamSet(triples[:, 0].copy(), triples[:, 1].copy(),
                                triples[:, 2].copy())
            cir = ComplexCir(iq[:, 0] + 1j * iq[:, 1])
            yield ChannelRecord(index=index, theta=theta, cir=cir)


def load_dataset(dataset_dir: str, max_channels: int | None = None) -> list[ChannelRecord]:
    return list(iter_dataset(dataset_dir, max_channels=max_channels))
