"""Dense statevector simulation for small registers.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a computational-basis index, so
  ``|b_0 b_1 ... b_{n-1}>`` lives at index ``sum_i b_i * 2**(n-1-i)`` and
  axis ``i`` of ``amplitudes.reshape((2,)*n)`` belongs to qubit ``i``.
* Registers are capped at 14 qubits; everything here is exact dense
  linear algebra and is meant as ground truth, not as a scalable simulator.
* Functions that consume randomness take a ``numpy.random.Generator``
  (see :mod:`robustshadows.rng` for how generators are derived).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BackendError

MAX_QUBITS = 14
ATOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Basis-change gates for randomized z/x/y readout: measuring Z after g is
# equivalent to measuring g^dag Z g, which is Z, X, Y respectively.
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_DAG = np.array([[1, 0], [0, -1j]], dtype=complex)
BASIS_GATES = {
    "Z": np.eye(2, dtype=complex),
    "X": HADAMARD,
    "Y": HADAMARD @ S_DAG,
}
BASIS_CHARS = "ZXY"


def _check_n_qubits(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise BackendError(f"register width must be in [1, {MAX_QUBITS}], got {n}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_n_qubits(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise BackendError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > ATOL:
            raise BackendError(f"state norm deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def tensor(self) -> np.ndarray:
        """View of the amplitudes as a (2,)*n tensor, axis i = qubit i."""
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ProductState:
    """Unentangled state given by one normalized 2-vector per qubit.

    Kept separate from :class:`StateVector` because measurement sampling of a
    product state factorizes per qubit, which is the fast path for large
    randomized-measurement runs.
    """

    factors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        _check_n_qubits(len(self.factors))
        checked = []
        for k, f in enumerate(self.factors):
            f = np.asarray(f, dtype=complex)
            if f.shape != (2,):
                raise BackendError(f"factor {k} must be a 2-vector, got {f.shape}")
            if abs(np.sum(np.abs(f) ** 2) - 1.0) > ATOL:
                raise BackendError(f"factor {k} is not normalized")
            checked.append(_readonly(f))
        object.__setattr__(self, "factors", tuple(checked))

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    def to_statevector(self) -> StateVector:
        amps = np.array([1.0 + 0.0j])
        for f in self.factors:
            amps = np.kron(amps, f)
        return StateVector(self.n_qubits, amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on ``n_qubits``."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        _check_n_qubits(self.n_qubits)
        m = np.asarray(self.matrix, dtype=complex)
        d = 2**self.n_qubits
        if m.shape != (d, d):
            raise BackendError(f"expected {d}x{d} density matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > ATOL:
            raise BackendError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > ATOL:
            raise BackendError("density matrix trace deviates from 1")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise BackendError("density matrix has a significantly negative eigenvalue")
        object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def from_statevector(cls, state: StateVector) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.n_qubits, np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class Gate:
    """Unitary acting on an ordered tuple of target qubits.

    ``matrix`` is 2x2 for one target or 4x4 for two; for two targets the row
    index is ``2*b_first + b_second``.
    """

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        if len(set(targets)) != len(targets):
            raise BackendError(f"gate targets must be distinct, got {targets}")
        d = 2 ** len(targets)
        if len(targets) not in (1, 2) or m.shape != (d, d):
            raise BackendError(
                f"gate must be 2x2 on one target or 4x4 on two, got {m.shape} on {targets}"
            )
        if np.max(np.abs(m.conj().T @ m - np.eye(d))) > ATOL:
            raise BackendError("gate matrix is not unitary")
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "targets", targets)

    @classmethod
    def single(cls, matrix: np.ndarray, qubit: int) -> "Gate":
        return cls(matrix, (qubit,))

    @classmethod
    def zz_phase(cls, angle: float, qubits: tuple[int, int]) -> "Gate":
        """exp(-i * angle * Z (x) Z), diagonal in the computational basis."""
        zz = np.array([1.0, -1.0, -1.0, 1.0])
        return cls(np.diag(np.exp(-1j * angle * zz)), qubits)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply a gate and return the new state (input is never mutated)."""
    n = state.n_qubits
    for t in gate.targets:
        if not 0 <= t < n:
            raise BackendError(f"gate target {t} outside register of width {n}")
    psi = state.tensor()
    k = len(gate.targets)
    moved = np.moveaxis(psi, gate.targets, range(k))
    flat = moved.reshape(2**k, -1)
    out = gate.matrix @ flat
    out = np.moveaxis(out.reshape((2,) * n), range(k), gate.targets)
    return StateVector(n, out.reshape(-1))


def index_to_bits(index: int | np.ndarray, n_qubits: int) -> np.ndarray:
    """Basis index -> bit array with qubit 0 first (most significant)."""
    idx = np.asarray(index)
    shifts = np.arange(n_qubits - 1, -1, -1)
    return ((idx[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    n = bits.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return bits @ weights


def sample_z_basis(state: StateVector, gen: np.random.Generator) -> np.ndarray:
    """One computational-basis sample, returned as a bit array (qubit 0 first)."""
    return sample_z_basis_batch(state, 1, gen)[0]


def sample_z_basis_batch(
    state: StateVector, n_shots: int, gen: np.random.Generator
) -> np.ndarray:
    """(n_shots, n_qubits) array of independent basis samples."""
    cdf = np.cumsum(state.probabilities())
    cdf[-1] = 1.0  # guard against float round-off at the top end
    u = gen.random(n_shots)
    idx = np.searchsorted(cdf, u, side="right")
    return index_to_bits(idx, state.n_qubits)


def reduced_density(state: StateVector, subset: tuple[int, ...]) -> DensityMatrix:
    """Partial trace over the complement of ``subset`` (output order = subset order)."""
    n = state.n_qubits
    subset = tuple(int(q) for q in subset)
    if len(set(subset)) != len(subset):
        raise BackendError(f"subset qubits must be distinct, got {subset}")
    for q in subset:
        if not 0 <= q < n:
            raise BackendError(f"subset qubit {q} outside register of width {n}")
    k = len(subset)
    rest = [q for q in range(n) if q not in subset]
    moved = np.moveaxis(state.tensor(), subset, range(k))
    flat = moved.reshape(2**k, 2 ** len(rest))
    rho = flat @ flat.conj().T
    return DensityMatrix(k, rho)


def exact_expectation(state: StateVector, pauli: str) -> float:
    """<psi| P |psi> for a Pauli string over 'IXYZ' of length n_qubits."""
    n = state.n_qubits
    if len(pauli) != n or any(c not in PAULI for c in pauli):
        raise BackendError(f"pauli string must be length {n} over IXYZ, got {pauli!r}")
    phi = state
    for q, c in enumerate(pauli):
        if c != "I":
            phi = apply_gate(phi, Gate.single(PAULI[c], q))
    val = np.vdot(state.amplitudes, phi.amplitudes)
    return float(val.real)


def purity(dm: DensityMatrix) -> float:
    """Tr(rho^2); for Hermitian rho this is the squared Frobenius norm."""
    return float(np.sum(np.abs(dm.matrix) ** 2))


def state_overlap(a: DensityMatrix, b: DensityMatrix) -> float:
    """Tr(rho sigma) for two density matrices of equal width."""
    if a.n_qubits != b.n_qubits:
        raise BackendError("overlap requires equal register widths")
    return float(np.trace(a.matrix @ b.matrix).real)


def haar_random_single_qubit(gen: np.random.Generator, qubit: int = 0) -> Gate:
    """Haar-distributed single-qubit unitary via QR of a complex Gaussian.

    The R-diagonal phase fix makes the QR factorization unique, which is what
    turns the Gaussian measure into the Haar measure.
    """
    z = (gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return Gate.single(q * (d / np.abs(d)), qubit)
