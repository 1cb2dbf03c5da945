import numpy as np
import pytest

from mpcprof import MpcParamSet, QuantizerSpec, SystemConfig, default_bank


@pytest.fixture(scope="session")
def config():
    return SystemConfig()


@pytest.fixture(scope="session")
def quantizer(config):
    return QuantizerSpec.for_config(config)


@pytest.fixture(scope="session")
def bank(config, quantizer):
    return default_bank(config, quantizer)


def lattice_params(rng, config, quantizer, order,
                   delay_span_ts=(0.15, 5.0), amp_range=(0.05, 1.0)):
    """Random parameter set with every value exactly on the quantizer lattice."""
    ts = config.sample_period
    lo = int(np.ceil(delay_span_ts[0] * ts / quantizer.delay_step))
    hi = int(np.floor(delay_span_ts[1] * ts / quantizer.delay_step))
    delays = rng.integers(lo, hi + 1, order) * quantizer.delay_step
    a_lo = int(np.ceil(amp_range[0] / quantizer.amp_step))
    a_hi = int(np.floor(amp_range[1] / quantizer.amp_step))
    amps = rng.integers(a_lo, a_hi + 1, order) * quantizer.amp_step
    n_phi = int(round(2.0 * np.pi / quantizer.phase_step))
    phases = rng.integers(0, n_phi, order) * quantizer.phase_step
    return MpcParamSet(np.sort(delays), amps, phases)


@pytest.fixture(scope="session")
def make_lattice_params(config, quantizer):
    def factory(rng, order, **kw):
        return lattice_params(rng, config, quantizer, order, **kw)
    return factory
