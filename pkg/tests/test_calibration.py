"""Twirled calibration: estimators, invertibility guards, crosstalk screen."""

import numpy as np
import pytest

from robustshadows import (
    CalibrationRecords,
    NonInvertibleCalibrationError,
    NonInvertibleCalibrationWarning,
    RandomStream,
    ReadoutNoiseModel,
    SimulatedDevice,
    crosstalk_statistic,
    default_pairs,
    estimate_f,
    run_calibration,
)
from robustshadows.calibration import CalibrationEstimate
from robustshadows.errors import EstimationError
from robustshadows.oracle import coefficients_from_model, exact_crosstalk_statistic


def test_noiseless_calibration_is_exact():
    """Without readout noise every shot agrees, so f = 1/3 with zero spread."""
    dev = SimulatedDevice(3)
    rec = run_calibration(3, 200, dev, RandomStream(1))
    est = estimate_f(rec)
    assert np.array_equal(est.f_local, np.full(3, 1.0 / 3.0))
    assert np.array_equal(est.p_flip, np.zeros(3))
    for val in est.f_pair.values():
        assert val == 1.0 / 9.0


def test_hand_worked_example():
    rec = CalibrationRecords(
        shot_index=[0, 1, 2, 3],
        batch_index=[0, 0, 0, 0],
        flip=np.array([[0, 0], [1, 0], [1, 1], [0, 1]]),
        outcome=np.array([[0, 0], [1, 1], [0, 1], [0, 0]]),
    )
    with pytest.warns(NonInvertibleCalibrationWarning):
        est = estimate_f(rec, pairs=[(0, 1)])
    # q0 agrees on shots 0,1,3: mean sign 1/2, so f = 1/6
    assert abs(est.f_local[0] - 1.0 / 6.0) < 1e-15
    # q1 agrees on shots 0,2: mean sign 0, so f = 0 (non-invertible)
    assert est.f_local[1] == 0.0
    assert abs(est.f_pair[(0, 1)] - (-1.0 / 18.0)) < 1e-15
    assert abs(est.p_flip[0] - 0.25) < 1e-15
    assert est.n_shots == 4


def test_invertibility_guard():
    with pytest.warns(NonInvertibleCalibrationWarning):
        est = CalibrationEstimate(np.array([0.3, 0.0, -0.05]))
    est.require_invertible((0,))
    with pytest.raises(NonInvertibleCalibrationError):
        est.require_invertible((0, 1))
    with pytest.raises(NonInvertibleCalibrationError):
        est.inverse_f((2,))
    assert np.allclose(est.inverse_f((0,)), [1.0 / 0.3])


def test_noiseless_constructor():
    est = CalibrationEstimate.noiseless(4)
    assert np.array_equal(est.f_local, np.full(4, 1.0 / 3.0))
    assert est.n_shots == 0


def test_mix_averages_locals_and_shared_pairs():
    a = CalibrationEstimate(np.array([0.30, 0.32]), {(0, 1): 0.10}, n_shots=100)
    b = CalibrationEstimate(np.array([0.34, 0.30]), {(0, 1): 0.08}, n_shots=300)
    m = a.mix(b)
    assert np.allclose(m.f_local, [0.32, 0.31])
    assert abs(m.f_pair[(0, 1)] - 0.09) < 1e-15
    assert m.n_shots == 400
    with pytest.raises(EstimationError):
        a.mix(CalibrationEstimate(np.array([0.3])))


def test_default_pairs_are_adjacent():
    assert default_pairs(4) == [(0, 1), (1, 2), (2, 3)]
    assert default_pairs(1) == []


def test_pair_request_forms():
    rec = CalibrationRecords(
        [0, 1], [0, 0], np.zeros((2, 3), np.uint8), np.zeros((2, 3), np.uint8)
    )
    assert set(estimate_f(rec, pairs="all").f_pair) == {(0, 1), (0, 2), (1, 2)}
    assert estimate_f(rec, pairs=[]).f_pair == {}
    with pytest.raises(EstimationError):
        estimate_f(rec, pairs=[(0, 3)])
    with pytest.raises(EstimationError):
        estimate_f(rec, pairs=[(1, 1)])


def test_estimates_converge_to_channel_coefficients():
    p01 = np.array([0.03, 0.08, 0.015])
    p10 = np.array([0.05, 0.02, 0.060])
    model = ReadoutNoiseModel(p01, p10)
    dev = SimulatedDevice(3, model)
    rec = run_calibration(3, 120000, dev, RandomStream(2024))
    est = estimate_f(rec, pairs="all")
    coeffs = coefficients_from_model(model, 3)
    # single-shot values are +-1/3, so the mean has sigma ~ 1/(3 sqrt(T))
    sigma = 1.0 / (3.0 * np.sqrt(len(rec)))
    for q in range(3):
        lam = tuple(int(k == q) for k in range(3))
        assert abs(est.f_local[q] - coeffs[lam]) < 4 * sigma
    sigma_pair = 1.0 / (9.0 * np.sqrt(len(rec)))
    for (i, j), val in est.f_pair.items():
        lam = tuple(int(k in (i, j)) for k in range(3))
        assert abs(val - coeffs[lam]) < 4 * sigma_pair


def test_crosstalk_statistic_against_oracle():
    model = ReadoutNoiseModel.symmetric(0.01, 2, pairwise=((0, 1, 0.05),))
    dev = SimulatedDevice(2, model)
    rec = run_calibration(2, 150000, dev, RandomStream(77))
    est = estimate_f(rec)
    stat = crosstalk_statistic(est, 0, 1)
    exact = exact_crosstalk_statistic(model, 2, 0, 1)
    assert abs(stat - exact) < 0.003
    # and the separable analog is consistent with zero
    sep = SimulatedDevice(2, ReadoutNoiseModel.symmetric(0.01, 2))
    est0 = estimate_f(run_calibration(2, 150000, sep, RandomStream(78)))
    assert abs(crosstalk_statistic(est0, 0, 1)) < 0.003


def test_crosstalk_statistic_requires_estimated_pair():
    est = CalibrationEstimate(np.array([0.3, 0.3, 0.3]), {(0, 1): 0.1})
    crosstalk_statistic(est, 1, 0)  # order-insensitive lookup
    with pytest.raises(EstimationError):
        crosstalk_statistic(est, 1, 2)


def test_run_calibration_is_deterministic():
    dev = SimulatedDevice(2, ReadoutNoiseModel.symmetric(0.1, 2))
    a = run_calibration(2, 50, dev, RandomStream(5), batch_index=3, shot_offset=100)
    b = run_calibration(2, 50, dev, RandomStream(5), batch_index=3, shot_offset=100)
    assert np.array_equal(a.flip, b.flip)
    assert np.array_equal(a.outcome, b.outcome)
    assert np.all(a.batch_index == 3)
    assert a.shot_index[0] == 100 and a.shot_index[-1] == 149


def test_run_calibration_width_check():
    dev = SimulatedDevice(2)
    with pytest.raises(EstimationError):
        run_calibration(3, 10, dev, RandomStream(0))
    with pytest.raises(EstimationError):
        run_calibration(2, 0, dev, RandomStream(0))
