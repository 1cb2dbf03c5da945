"""Model-order selection from per-mode singular values."""

import numpy as np
import pytest

from mpcprof import (
    ConfigurationError,
    FormatError,
    ModeSingularValues,
    NumericError,
    WeightBundle,
    hosvd_singular_values,
    nn_model_order,
    select_model_order,
    singular_value_features,
)
from mpcprof.model_order import ARCH_ORDER_MLP, write_feature_csv


def _rank_terms(gains, shape):
    """Superposition of orthogonal rank-1 terms along basis vectors."""
    x = np.zeros(shape, dtype=np.complex128)
    for l, g in enumerate(gains):
        x[l, l, l] = g
    return x


# --------------------------------------------------------------------- hosvd


def test_rank_one_tensor_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x = np.einsum("i,j,k->ijk", a, b, c)
    sv = hosvd_singular_values(x)
    assert sv.n_modes == 3
    expected_top = np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    for d in range(3):
        assert sv.values[d][0] == pytest.approx(expected_top, rel=1e-12)
        # rank 1: everything after the leading value is numerically zero
        assert np.all(sv.values[d][1:] < 1e-9 * expected_top)
    assert select_model_order(sv) == 1


def test_orthogonal_terms_count_as_order():
    sv = hosvd_singular_values(_rank_terms([1.0, 0.5, 0.2], (4, 5, 6)))
    for d in range(3):
        np.testing.assert_allclose(sv.values[d][:3], [1.0, 0.5, 0.2], atol=1e-12)
    assert select_model_order(sv, noise_floor_db=-25.0) == 3


def test_zero_tensor_degenerate_order_one():
    sv = hosvd_singular_values(np.zeros((3, 4, 5), dtype=complex))
    assert sv.degenerate
    assert select_model_order(sv) == 1


def test_scaling_and_unitary_invariance():
    x = _rank_terms([1.0, 0.3], (4, 5, 6))
    base = select_model_order(hosvd_singular_values(x))
    assert select_model_order(hosvd_singular_values(512.0 * x)) == base
    q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((4, 4)))
    rotated = np.einsum("ia,ajk->ijk", q, x)
    sv_a = hosvd_singular_values(x)
    sv_b = hosvd_singular_values(rotated)
    for d in range(3):
        np.testing.assert_allclose(sv_b.values[d], sv_a.values[d], atol=1e-10)


def test_hosvd_validation():
    with pytest.raises(ConfigurationError):
        hosvd_singular_values(np.zeros((0, 3)))
    bad = np.ones((2, 2, 2), dtype=complex)
    bad[0, 0, 0] = np.nan
    with pytest.raises(NumericError):
        hosvd_singular_values(bad)


# ----------------------------------------------------------- order selection


def _flat_sv(vec):
    """Synthetic mode values: the same vector for all three modes."""
    v = np.asarray(vec, dtype=np.float64)
    return ModeSingularValues((v.copy(), v.copy(), v.copy()),
                              (len(v), len(v), len(v)))


def test_noise_floor_semantics():
    sv = _flat_sv([1.0, 0.1, 1e-4])
    # -25 dB floor = 0.0562 relative amplitude: the 0.1 value survives
    assert select_model_order(sv, noise_floor_db=-25.0) == 2
    # -15 dB floor = 0.178: only the leading value survives
    assert select_model_order(sv, noise_floor_db=-15.0) == 1
    # a floor below -80 dB admits the 1e-4 value too
    assert select_model_order(sv, noise_floor_db=-90.0) == 3


def test_select_validates_energy_consistency():
    sv = ModeSingularValues((np.array([1.0]), np.array([2.0]), np.array([1.0])),
                            (1, 1, 1))
    with pytest.raises(NumericError):
        select_model_order(sv)


def test_select_rejects_increasing_values():
    sv = ModeSingularValues((np.array([0.5, 1.0]),) * 3, (2, 2, 2))
    with pytest.raises(ConfigurationError):
        select_model_order(sv)


# ------------------------------------------------------------------ features


def test_features_layout_and_normalization():
    sv = _flat_sv([4.0, 2.0, 1.0])
    feats = singular_value_features(sv, top_k=5)
    assert feats.shape == (15,)
    for d in range(3):
        np.testing.assert_allclose(feats[d * 5:d * 5 + 3], [1.0, 0.5, 0.25])
        np.testing.assert_array_equal(feats[d * 5 + 3:d * 5 + 5], 0.0)


def test_features_mode_subset_and_validation():
    sv = _flat_sv([2.0, 1.0])
    feats = singular_value_features(sv, top_k=2, modes=(1,))
    np.testing.assert_allclose(feats, [1.0, 0.5])
    with pytest.raises(ConfigurationError):
        singular_value_features(sv, top_k=0)
    with pytest.raises(ConfigurationError):
        singular_value_features(sv, modes=(5,))


def test_feature_csv(tmp_path):
    path = str(tmp_path / "features.csv")
    write_feature_csv(path, [1, 3], [np.array([1.0, 0.5]), np.array([1.0, 0.9])])
    lines = open(path).read().splitlines()
    assert lines[0] == "order,sv0,sv1"
    assert lines[1].startswith("1,1.0")
    assert lines[2].startswith("3,1.0")
    with pytest.raises(ConfigurationError):
        write_feature_csv(path, [1], [np.zeros(2), np.zeros(2)])
    with pytest.raises(ConfigurationError):
        write_feature_csv(path, [1, 2], [np.zeros(2), np.zeros(3)])


# ---------------------------------------------------------------- classifier


def _order_bundle(n_classes=4, feature_len=24, head_bias=None):
    tensors = {
        "head/kernel": np.zeros((feature_len, n_classes), dtype=np.float32),
        "head/bias": np.zeros(n_classes, dtype=np.float32),
    }
    if head_bias is not None:
        tensors["head/bias"][:] = head_bias
    return WeightBundle(architecture_id=ARCH_ORDER_MLP, model_order=n_classes,
                        input_window=feature_len, tensors=tensors)


def test_nn_model_order_argmax_decode():
    sv = _flat_sv([1.0, 0.5, 0.1])
    bundle = _order_bundle(head_bias=[0.0, 0.0, 5.0, 0.0])
    assert nn_model_order(sv, bundle) == 3


def test_nn_model_order_uses_features():
    # one hand-set weight: score class 1 by the second singular value
    sv_strong = _flat_sv([1.0, 0.9])
    sv_weak = _flat_sv([1.0, 0.01])
    bundle = _order_bundle()
    bundle.tensors["head/kernel"][1, 1] = 10.0
    bundle.tensors["head/bias"][0] = 1.0
    assert nn_model_order(sv_strong, bundle) == 2
    assert nn_model_order(sv_weak, bundle) == 1


def test_nn_model_order_validation():
    sv = _flat_sv([1.0, 0.5])
    with pytest.raises(FormatError):
        nn_model_order(sv, _order_bundle(feature_len=7))
    wrong_arch = _order_bundle()
    wrong_arch.architecture_id = "mpc-start-v1"
    with pytest.raises(FormatError):
        nn_model_order(sv, wrong_arch)
    headless = _order_bundle()
    del headless.tensors["head/kernel"]
    with pytest.raises(FormatError):
        nn_model_order(sv, headless)
    bad = _order_bundle(head_bias=[np.inf, 0, 0, 0])
    with pytest.raises(NumericError):
        nn_model_order(sv, bad)
