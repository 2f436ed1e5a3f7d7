"""Readout noise models: rates, crosstalk, drift, presets, serialization."""

import numpy as np
import pytest

from robustshadows import DriftSchedule, ReadoutNoiseModel, make_preset
from robustshadows.errors import ConfigError
from robustshadows.noise import (
    PRESET_N_QUBITS,
    PRESET_SPECS,
    apply_readout_noise_batch,
    exact_channel_matrix,
)


def test_noiseless_model_is_identity():
    model = ReadoutNoiseModel.noiseless(3)
    bits = np.array([[0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    gen = np.random.default_rng(0)
    out = apply_readout_noise_batch(bits, model, np.arange(2), gen)
    assert np.array_equal(out, bits)
    assert np.allclose(exact_channel_matrix(model, 3), np.eye(8))


def test_none_model_is_identity():
    bits = np.array([[0, 1]], dtype=np.uint8)
    out = apply_readout_noise_batch(bits, None, np.arange(1), np.random.default_rng(1))
    assert np.array_equal(out, bits)


def test_single_qubit_channel_matrix():
    model = ReadoutNoiseModel(np.array([0.03]), np.array([0.08]))
    expect = np.array([[0.97, 0.03], [0.08, 0.92]])
    assert np.allclose(exact_channel_matrix(model, 1), expect, atol=1e-15)


def test_channel_matrix_rows_are_distributions():
    model = ReadoutNoiseModel(
        np.array([0.03, 0.10, 0.02]),
        np.array([0.05, 0.01, 0.07]),
        pairwise=((0, 2, 0.04),),
    )
    p = exact_channel_matrix(model, 3)
    assert np.all(p >= -1e-15)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_pairwise_term_flips_both_bits_together():
    model = ReadoutNoiseModel(np.zeros(2), np.zeros(2), pairwise=((0, 1, 0.25),))
    p = exact_channel_matrix(model, 2)
    # from |00>: stay with 0.75, land on |11> with 0.25, never on |01>/|10>
    assert abs(p[0, 0] - 0.75) < 1e-15
    assert abs(p[0, 3] - 0.25) < 1e-15
    assert p[0, 1] == 0.0 and p[0, 2] == 0.0


def test_empirical_flip_rate_matches_model():
    p01, p10 = 0.06, 0.11
    model = ReadoutNoiseModel(np.array([p01]), np.array([p10]))
    gen = np.random.default_rng(7)
    n = 200000
    zeros = apply_readout_noise_batch(
        np.zeros((n, 1), dtype=np.uint8), model, np.arange(n), gen
    )
    ones = apply_readout_noise_batch(
        np.ones((n, 1), dtype=np.uint8), model, np.arange(n), gen
    )
    s01 = np.sqrt(p01 * (1 - p01) / n)
    s10 = np.sqrt(p10 * (1 - p10) / n)
    assert abs(zeros.mean() - p01) < 4 * s01
    assert abs((1 - ones.mean()) - p10) < 4 * s10


def test_drift_schedule_interpolation():
    drift = DriftSchedule(((0, 1.0), (100, 2.0)))
    assert drift.factor(0) == 1.0
    assert drift.factor(100) == 2.0
    assert abs(drift.factor(50) - 1.5) < 1e-12
    # clamped outside the knot range
    assert drift.factor(-5) == 1.0
    assert drift.factor(400) == 2.0
    assert drift.max_factor() == 2.0


def test_drift_schedule_validation():
    with pytest.raises(ConfigError):
        DriftSchedule(((10, 1.0), (5, 2.0)))
    with pytest.raises(ConfigError):
        DriftSchedule(((0, 0.0),))
    with pytest.raises(ConfigError):
        DriftSchedule(())


def test_drift_scales_flip_rates():
    drift = DriftSchedule(((0, 1.0), (1000, 3.0)))
    model = ReadoutNoiseModel(np.array([0.02]), np.array([0.02]), drift=drift)
    p_start = exact_channel_matrix(model, 1, drift_factor=float(model.drift_factor(0)))
    p_end = exact_channel_matrix(model, 1, drift_factor=float(model.drift_factor(1000)))
    assert abs(p_start[0, 1] - 0.02) < 1e-15
    assert abs(p_end[0, 1] - 0.06) < 1e-15


def test_model_rate_bounds_are_enforced():
    with pytest.raises(ConfigError):
        ReadoutNoiseModel(np.array([-0.01]), np.array([0.0]))
    with pytest.raises(ConfigError):
        ReadoutNoiseModel(np.array([1.2]), np.array([0.0]))
    drift = DriftSchedule(((0, 1.0), (10, 4.0)))
    with pytest.raises(ConfigError):
        # 0.3 * 4 exceeds 1 at the drift peak
        ReadoutNoiseModel(np.array([0.3]), np.array([0.0]), drift=drift)


def test_restrict_keeps_prefix_and_inner_pairs():
    model = ReadoutNoiseModel(
        np.arange(1, 5) / 100.0,
        np.arange(1, 5) / 200.0,
        pairwise=((0, 1, 0.02), (2, 3, 0.03)),
    )
    narrow = model.restrict(2)
    assert narrow.n_qubits == 2
    assert np.allclose(narrow.p01, [0.01, 0.02])
    assert narrow.pairwise == ((0, 1, 0.02),)


def test_serialization_roundtrip():
    drift = DriftSchedule(((0, 1.0), (500, 2.0)))
    model = ReadoutNoiseModel(
        np.array([0.01, 0.02]),
        np.array([0.03, 0.04]),
        pairwise=((0, 1, 0.05),),
        drift=drift,
    )
    back = ReadoutNoiseModel.from_dict(model.to_dict())
    assert np.allclose(back.p01, model.p01)
    assert np.allclose(back.p10, model.p10)
    assert back.pairwise == model.pairwise
    assert back.drift.knots == drift.knots


@pytest.mark.parametrize("name", sorted(PRESET_SPECS))
def test_preset_rates_hit_published_mean_and_range(name):
    lo, hi, mean = PRESET_SPECS[name]
    model = make_preset(name)
    assert model.n_qubits == PRESET_N_QUBITS
    assert np.array_equal(model.p01, model.p10)
    assert abs(model.p01.mean() - mean) < 1e-12
    assert np.all(model.p01 >= lo - 1e-12)
    assert np.all(model.p01 <= hi + 1e-12)
    assert model.p01.std() > 0.0  # per-qubit spread, not a constant register


def test_preset_is_deterministic():
    a = make_preset("pulse-150us")
    b = make_preset("pulse-150us")
    assert np.array_equal(a.p01, b.p01)
    # frozen regression of the first draws
    assert np.allclose(
        a.p01[:3], [0.0157730991, 0.0129157555, 0.008], atol=1e-10
    )


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        make_preset("pulse-75us")
