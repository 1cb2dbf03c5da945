"""Drift scenarios: parameter evolution laws and truth synthesis."""

import json

import numpy as np
import pytest

from mpcprof import (
    ConfigurationError,
    DatasetSpec,
    DriftScenario,
    FormatError,
    MpcParamSet,
    ParameterLaw,
    PathLaws,
    load_scenario,
    profile,
    random_drift_scenario,
    sample_cir,
    scenario_from_dict,
    scenario_from_params,
    synthesize_truth,
)


def _linear_scenario():
    path = PathLaws(
        delay=ParameterLaw("linear", base=1.0e-6, rate=5.0e-9),
        amplitude=ParameterLaw("constant", base=0.8),
        phase=ParameterLaw("linear", base=0.5, rate=0.1),
    )
    return DriftScenario(paths=(path,), seed=3)


# ---------------------------------------------------------------------- laws


def test_law_values():
    assert ParameterLaw("constant", base=2.5).value(100.0) == 2.5
    assert ParameterLaw("linear", base=1.0, rate=0.5).value(4.0) == pytest.approx(3.0)
    q = ParameterLaw("quadratic", base=1.0, rate=0.5, accel=0.25)
    assert q.value(2.0) == pytest.approx(1.0 + 1.0 + 1.0)
    s = ParameterLaw("sinusoidal", base=2.0, amplitude=0.5, period=8.0, phase=np.pi / 2)
    assert s.value(0.0) == pytest.approx(2.5)
    assert s.value(4.0) == pytest.approx(1.5)
    assert s.value(2.0) == pytest.approx(2.0, abs=1e-12)


def test_law_validation():
    with pytest.raises(ConfigurationError):
        ParameterLaw("cubic", base=0.0)
    with pytest.raises(ConfigurationError):
        ParameterLaw("sinusoidal", base=0.0, amplitude=1.0, period=0.0)


# ----------------------------------------------------------------- scenarios


def test_params_at_evaluates_laws(config):
    sc = _linear_scenario()
    theta = sc.params_at(10.0)
    assert theta.order == 1
    assert theta.delays[0] == pytest.approx(1.05e-6)
    assert theta.amplitudes[0] == pytest.approx(0.8)
    assert theta.phases[0] == pytest.approx(1.5)
    assert theta.t_index == 10


def test_params_at_clamps_negative_amplitude():
    path = PathLaws(
        delay=ParameterLaw("constant", base=1.0e-6),
        amplitude=ParameterLaw("linear", base=0.1, rate=-0.05),
        phase=ParameterLaw("constant", base=0.0),
    )
    theta = DriftScenario(paths=(path,)).params_at(10.0)
    assert theta.amplitudes[0] == 0.0


def test_scenario_json_roundtrip(tmp_path):
    sc = _linear_scenario()
    d = sc.to_dict()
    text = json.dumps(d)
    again = scenario_from_dict(json.loads(text))
    assert again.order == 1
    for t in (0.0, 3.0, 17.5):
        a = sc.params_at(t)
        b = again.params_at(t)
        np.testing.assert_allclose(a.delays, b.delays, atol=1e-18)
        np.testing.assert_allclose(a.phases, b.phases, atol=1e-15)
    path = tmp_path / "scenario.json"
    path.write_text(text)
    loaded = load_scenario(str(path))
    assert loaded.order == 1


@pytest.mark.parametrize("doc", [
    {},
    {"paths": [{"delay": {"kind": "constant", "base": 0.0}}]},
    {"paths": [{"delay": {"kind": "constant", "base": 0.0},
                "amplitude": {"kind": "constant", "base": 1.0},
                "phase": {"kind": "constant", "base": 0.0},
                "spin": {"kind": "constant", "base": 0.0}}]},
    {"format_version": 9, "paths": []},
])
def test_scenario_from_dict_rejects(doc):
    with pytest.raises(FormatError):
        scenario_from_dict(doc)


def test_load_scenario_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(FormatError):
        load_scenario(str(path))


def test_scenario_from_params_static_roundtrip(config):
    theta = MpcParamSet(np.array([1.0e-6, 2.0e-6]), np.array([1.0, 0.4]),
                        np.array([0.3, 5.0]))
    sc = scenario_from_params(theta)
    for t in (0.0, 50.0):
        got = sc.params_at(t)
        np.testing.assert_array_equal(got.delays, theta.delays)
        np.testing.assert_array_equal(got.amplitudes, theta.amplitudes)
        np.testing.assert_array_equal(got.phases, theta.phases)
    # zero rates serialize as pure constant laws
    kinds = {p["delay"]["kind"] for p in sc.to_dict()["paths"]}
    assert kinds == {"constant"}


def test_scenario_from_params_linear_drift(config):
    theta = MpcParamSet(np.array([1.0e-6]), np.array([1.0]), np.array([0.0]))
    sc = scenario_from_params(theta, delay_rate=2.0e-9)
    assert sc.params_at(5.0).delays[0] == pytest.approx(1.01e-6)


def test_random_drift_scenario_deterministic(config):
    spec = DatasetSpec(n_channels=10, seed=6)
    a = random_drift_scenario(spec, config, 4, delay_rate=1e-9)
    b = random_drift_scenario(spec, config, 4, delay_rate=1e-9)
    np.testing.assert_array_equal(a.params_at(3.0).delays, b.params_at(3.0).delays)
    c = random_drift_scenario(spec, config, 5, delay_rate=1e-9)
    assert not np.array_equal(a.params_at(0.0).delays, c.params_at(0.0).delays)


def test_synthesize_truth_matches_direct_synthesis(config):
    sc = _linear_scenario()
    pairs = synthesize_truth(sc, config, [0, 4, 9], n_taps=64)
    assert len(pairs) == 3
    for t, (theta, prof) in zip([0, 4, 9], pairs):
        assert theta.t_index == t
        manual = profile(sample_cir(theta, config, n_taps=64))
        np.testing.assert_array_equal(prof.samples, manual.samples)
        assert prof.t_index == t
    # the drift actually moves the profile peak
    assert not np.array_equal(pairs[0][1].samples, pairs[2][1].samples)
