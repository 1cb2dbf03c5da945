"""On-disk dataset format: round trips, determinism, corruption handling."""

import hashlib
import json
import os

import numpy as np
import pytest

from mpcprof import (
    DatasetSpec,
    FormatError,
    config_from_metadata,
    generate_channel,
    generate_dataset,
    iter_dataset,
    load_dataset,
    read_metadata,
    write_dataset,
)


def _digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def test_roundtrip_recovers_exact_values(config, tmp_path):
    spec = DatasetSpec(n_channels=7, l_max=4, seed=2, window=96)
    out = str(tmp_path / "ds")
    generate_dataset(spec, config, out)
    records = load_dataset(out)
    assert len(records) == 7
    for rec in records:
        theta, cir = generate_channel(spec, config, rec.index)
        # float64 values survive the binary round trip bit for bit
        np.testing.assert_array_equal(rec.theta.delays, theta.delays)
        np.testing.assert_array_equal(rec.theta.amplitudes, theta.amplitudes)
        np.testing.assert_array_equal(rec.theta.phases, theta.phases)
        np.testing.assert_array_equal(rec.cir.samples, cir.samples)
        assert len(rec.cir.samples) == 96
    assert [r.index for r in records] == list(range(7))


def test_regeneration_is_byte_identical(config, tmp_path):
    spec = DatasetSpec(n_channels=5, seed=8, snr_db=12.0, window=64)
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    generate_dataset(spec, config, a)
    generate_dataset(spec, config, b)
    assert _digest(os.path.join(a, "channels.bin")) == _digest(os.path.join(b, "channels.bin"))
    assert _digest(os.path.join(a, "metadata.json")) == _digest(os.path.join(b, "metadata.json"))


def test_overwrite_requires_force(config, tmp_path):
    spec = DatasetSpec(n_channels=2, seed=1, window=32)
    out = str(tmp_path / "ds")
    generate_dataset(spec, config, out)
    with pytest.raises(FileExistsError):
        generate_dataset(spec, config, out)
    generate_dataset(spec, config, out, force=True)


def test_metadata_contents(config, tmp_path):
    spec = DatasetSpec(n_channels=3, seed=5, window=48)
    out = str(tmp_path / "ds")
    written = generate_dataset(spec, config, out)
    meta = read_metadata(out)
    assert meta == written
    assert meta["n_channels"] == 3
    assert meta["window"] == 48
    assert DatasetSpec.from_dict(meta["spec"]) == spec
    assert config_from_metadata(meta) == config


def test_write_dataset_checks_promised_count(config, tmp_path):
    spec = DatasetSpec(n_channels=4, seed=0, window=32)
    pairs = [generate_channel(spec, config, i) for i in range(2)]
    with pytest.raises(FormatError):
        write_dataset(pairs, spec, config, str(tmp_path / "short"))


def test_iter_dataset_max_channels(config, tmp_path):
    spec = DatasetSpec(n_channels=6, seed=3, window=32)
    out = str(tmp_path / "ds")
    generate_dataset(spec, config, out)
    got = list(iter_dataset(out, max_channels=4))
    assert [r.index for r in got] == [0, 1, 2, 3]
    assert len(load_dataset(out, max_channels=100)) == 6


def test_missing_files_raise(tmp_path):
    with pytest.raises(FormatError):
        read_metadata(str(tmp_path))
    with pytest.raises(FormatError):
        list(iter_dataset(str(tmp_path / "nowhere")))


def test_corrupt_metadata_raises(config, tmp_path):
    out = str(tmp_path / "ds")
    generate_dataset(DatasetSpec(n_channels=1, window=32), config, out)
    meta_path = os.path.join(out, "metadata.json")
    with open(meta_path, "w") as fh:
        fh.write("{not json")
    with pytest.raises(FormatError):
        read_metadata(out)
    with open(meta_path, "w") as fh:
        json.dump({"format_version": 1}, fh)
    with pytest.raises(FormatError):
        read_metadata(out)


def test_truncated_channels_raise(config, tmp_path):
    out = str(tmp_path / "ds")
    generate_dataset(DatasetSpec(n_channels=3, seed=4, window=32), config, out)
    bin_path = os.path.join(out, "channels.bin")
    size = os.path.getsize(bin_path)
    with open(bin_path, "rb") as fh:
        data = fh.read()
    with open(bin_path, "wb") as fh:
        fh.write(data[:size - 17])
    with pytest.raises(FormatError):
        load_dataset(out)


def test_garbage_path_count_raises(config, tmp_path):
    out = str(tmp_path / "ds")
    generate_dataset(DatasetSpec(n_channels=1, seed=4, window=32), config, out)
    bin_path = os.path.join(out, "channels.bin")
    with open(bin_path, "r+b") as fh:
        fh.write((2 ** 31).to_bytes(4, "little"))
    with pytest.raises(FormatError):
        load_dataset(out)
