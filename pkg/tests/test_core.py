"""Statevector backend checks: conventions, gates, sampling, reductions."""

import numpy as np
import pytest

from robustshadows import (
    DensityMatrix,
    Gate,
    ProductState,
    StateVector,
    apply_gate,
    exact_expectation,
    purity,
    reduced_density,
    state_overlap,
)
from robustshadows.core import (
    BASIS_GATES,
    MAX_QUBITS,
    PAULI,
    bits_to_index,
    haar_random_single_qubit,
    index_to_bits,
    sample_z_basis_batch,
)
from robustshadows.errors import BackendError


def bell_state() -> StateVector:
    psi = StateVector.zero(2)
    psi = apply_gate(psi, Gate.single(BASIS_GATES["X"], 0))  # H
    cnot = np.zeros((4, 4))
    cnot[0, 0] = cnot[1, 1] = cnot[2, 3] = cnot[3, 2] = 1.0
    return apply_gate(psi, Gate(cnot, (0, 1)))


def test_bit_index_conventions():
    # qubit 0 is the most significant bit
    assert index_to_bits(1, 2).tolist() == [0, 1]
    assert index_to_bits(2, 2).tolist() == [1, 0]
    assert bits_to_index(np.array([1, 0])) == 2
    idx = np.arange(8)
    assert np.array_equal(bits_to_index(index_to_bits(idx, 3)), idx)


def test_zero_state_probabilities():
    p = StateVector.zero(3).probabilities()
    assert p[0] == 1.0
    assert np.all(p[1:] == 0.0)


def test_hadamard_on_msb_qubit():
    psi = apply_gate(StateVector.zero(2), Gate.single(BASIS_GATES["X"], 0))
    amp = psi.amplitudes
    # (|00> + |10>) / sqrt(2): indices 0 and 2
    assert abs(amp[0] - 1 / np.sqrt(2)) < 1e-12
    assert abs(amp[2] - 1 / np.sqrt(2)) < 1e-12
    assert abs(amp[1]) < 1e-12 and abs(amp[3]) < 1e-12


def test_zz_phase_is_diagonal_phase():
    theta = 0.37
    psi = StateVector(2, np.array([0, 0, 0, 1], dtype=complex))
    out = apply_gate(psi, Gate.zz_phase(theta, (0, 1)))
    # Z(x)Z eigenvalue on |11> is +1
    assert abs(out.amplitudes[3] - np.exp(-1j * theta)) < 1e-12
    psi01 = StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
    out01 = apply_gate(psi01, Gate.zz_phase(theta, (0, 1)))
    assert abs(out01.amplitudes[1] - np.exp(1j * theta)) < 1e-12


def test_gate_application_preserves_norm():
    gen = np.random.default_rng(5)
    psi = StateVector.zero(3)
    for q in range(3):
        psi = apply_gate(psi, haar_random_single_qubit(gen, q))
    psi = apply_gate(psi, Gate.zz_phase(0.81, (0, 2)))
    assert abs(np.sum(np.abs(psi.amplitudes) ** 2) - 1.0) < 1e-12


def test_bell_state_correlators():
    bell = bell_state()
    assert abs(exact_expectation(bell, "ZZ") - 1.0) < 1e-12
    assert abs(exact_expectation(bell, "XX") - 1.0) < 1e-12
    assert abs(exact_expectation(bell, "YY") + 1.0) < 1e-12
    assert abs(exact_expectation(bell, "ZI")) < 1e-12
    assert abs(exact_expectation(bell, "II") - 1.0) < 1e-12


def test_bell_reduced_state_is_maximally_mixed():
    bell = bell_state()
    rho = reduced_density(bell, (0,))
    assert np.allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)
    assert abs(purity(rho) - 0.5) < 1e-12


def test_reduced_density_subset_order():
    # asymmetric product state: qubit 0 in |1>, qubit 1 in |0>
    prod = ProductState((np.array([0.0, 1.0]), np.array([1.0, 0.0])))
    psi = prod.to_statevector()
    r10 = reduced_density(psi, (1, 0))
    expect = np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert np.allclose(r10.matrix, expect, atol=1e-12)


def test_purity_bounds_on_random_states():
    gen = np.random.default_rng(11)
    amp = gen.standard_normal(8) + 1j * gen.standard_normal(8)
    psi = StateVector(3, amp / np.linalg.norm(amp))
    for subset in [(0,), (1, 2), (0, 2)]:
        p = purity(reduced_density(psi, subset))
        assert 2.0 ** -len(subset) - 1e-12 <= p <= 1.0 + 1e-12
    assert abs(purity(reduced_density(psi, (0, 1, 2))) - 1.0) < 1e-12


def test_state_overlap_projector_matches_probability():
    zero = DensityMatrix(1, np.diag([1.0, 0.0]).astype(complex))
    plus = DensityMatrix(1, np.full((2, 2), 0.5, dtype=complex))
    assert abs(state_overlap(zero, plus) - 0.5) < 1e-12


def test_product_state_matches_kron():
    gen = np.random.default_rng(3)
    factors = []
    for _ in range(3):
        v = gen.standard_normal(2) + 1j * gen.standard_normal(2)
        factors.append(v / np.linalg.norm(v))
    prod = ProductState(tuple(factors))
    dense = factors[0]
    for fac in factors[1:]:
        dense = np.kron(dense, fac)
    assert np.allclose(prod.to_statevector().amplitudes, dense, atol=1e-12)


def test_sampling_distribution_on_plus_state():
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    psi = ProductState((plus, np.array([1.0, 0.0]))).to_statevector()
    gen = np.random.default_rng(17)
    bits = sample_z_basis_batch(psi, 40000, gen)
    assert np.all(bits[:, 1] == 0)
    rate = bits[:, 0].mean()
    sigma = 0.5 / np.sqrt(40000)
    assert abs(rate - 0.5) < 4 * sigma


def test_haar_gate_statistics():
    gen = np.random.default_rng(23)
    overlaps = []
    for _ in range(2000):
        g = haar_random_single_qubit(gen)
        u = g.matrix
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-10)
        overlaps.append(abs(u[0, 0]) ** 2)
    # |<0|U|0>|^2 is uniform on [0, 1] under the Haar measure
    sigma = np.sqrt(1.0 / 12.0 / 2000)
    assert abs(np.mean(overlaps) - 0.5) < 4 * sigma


def test_pauli_table_is_involutive():
    for name, mat in PAULI.items():
        assert np.allclose(mat @ mat, np.eye(2), atol=1e-14), name


def test_register_width_cap():
    with pytest.raises(BackendError):
        StateVector.zero(MAX_QUBITS + 1)


def test_density_matrix_validation():
    with pytest.raises(BackendError):
        DensityMatrix(1, np.array([[0.7, 0.0], [0.0, 0.7]], dtype=complex))
