import numpy as np
import pytest

from mpcprof import (
    ChannelTensor,
    ComplexCir,
    ConfigurationError,
    MpcParamSet,
    ProfiledCir,
    SystemConfig,
    wrap_phase,
)


def test_wrap_phase_oracle():
    two_pi = 2.0 * np.pi
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(-0.1) == pytest.approx(two_pi - 0.1)
    assert wrap_phase(two_pi) == pytest.approx(0.0, abs=1e-15)
    assert wrap_phase(7 * np.pi) == pytest.approx(np.pi)
    arr = wrap_phase(np.array([-1.0, 1.0, 10.0]))
    assert np.all((arr >= 0.0) & (arr < two_pi))


def test_param_set_basics():
    th = MpcParamSet([2e-7, 1e-7], [0.5, 1.0], [0.1, 0.2])
    assert th.order == 2
    assert th.delays.dtype == np.float64


def test_param_set_length_mismatch():
    with pytest.raises(ConfigurationError):
        MpcParamSet([1e-7], [1.0, 0.5], [0.0])


def test_param_set_validate(config):
    MpcParamSet([1e-7], [1.0], [0.0]).validate(config)
    with pytest.raises(ConfigurationError):
        MpcParamSet([-1e-9], [1.0], [0.0]).validate(config)
    with pytest.raises(ConfigurationError):
        MpcParamSet([config.max_delay], [1.0], [0.0]).validate(config)
    with pytest.raises(ConfigurationError):
        MpcParamSet([1e-7], [-0.1], [0.0]).validate(config)
    with pytest.raises(ConfigurationError):
        MpcParamSet([np.nan], [1.0], [0.0]).validate(config)
    with pytest.raises(ConfigurationError):
        MpcParamSet([], [], []).validate(config)


def test_sorted_by_delay_is_stable():
    th = MpcParamSet([3e-7, 1e-7, 1e-7], [0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    s = th.sorted_by_delay()
    np.testing.assert_array_equal(s.delays, [1e-7, 1e-7, 3e-7])
    # equal delays keep their original relative order
    np.testing.assert_array_equal(s.amplitudes, [0.2, 0.3, 0.1])
    np.testing.assert_array_equal(s.phases, [2.0, 3.0, 1.0])


def test_wrapped_copies():
    th = MpcParamSet([1e-7], [1.0], [-0.5])
    w = th.wrapped()
    assert w.phases[0] == pytest.approx(2.0 * np.pi - 0.5)
    assert th.phases[0] == -0.5


def test_param_set_dict_roundtrip():
    th = MpcParamSet([1e-7, 2e-7], [1.0, 0.3], [0.1, 5.9],
                     t_index=4, degenerate=True)
    back = MpcParamSet.from_dict(th.to_dict())
    np.testing.assert_array_equal(back.delays, th.delays)
    np.testing.assert_array_equal(back.amplitudes, th.amplitudes)
    np.testing.assert_array_equal(back.phases, th.phases)
    assert back.t_index == 4 and back.degenerate


def test_cir_and_profile_shapes():
    c = ComplexCir(np.ones(8, dtype=complex))
    assert len(c) == 8
    with pytest.raises(ConfigurationError):
        ComplexCir(np.ones((2, 2)))
    p = ProfiledCir(np.arange(4.0))
    assert p.energy() == pytest.approx(0 + 1 + 4 + 9)
    assert p.energy(1, 3) == pytest.approx(1 + 4)
    with pytest.raises(ConfigurationError):
        ProfiledCir(np.ones((2, 2)))


def test_channel_tensor_time_axis():
    t = ChannelTensor(np.zeros((2, 3, 4), dtype=complex))
    np.testing.assert_array_equal(t.t_indices, [0, 1, 2, 3])
    assert t.shape == (2, 3, 4)
    with pytest.raises(ConfigurationError):
        ChannelTensor(np.zeros((2, 3, 4), dtype=complex), t_indices=np.arange(3))
    with pytest.raises(ConfigurationError):
        ChannelTensor(np.zeros((2, 3), dtype=complex))
