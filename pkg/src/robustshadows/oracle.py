"""Brute-force ground truth for the twirled measurement channel.

Everything here is small, exact and slow on purpose: channels are dense
superoperators in the normalized Pauli basis (sigma_0 = I/sqrt(2), etc.,
qubit 0 = most significant base-4 digit), twirls are literal averages over
the ensemble, and measurement statistics are enumerated outcome by outcome.
The fast estimator code elsewhere in the package is tested against these
routines, never the other way around.

Channel conventions.  ``M_Z`` is the z-readout channel
(|sigma_0)(sigma_0| + |sigma_Z)(sigma_Z|) per qubit.  The twirled noisy
channel is the ensemble average of omega(U)^T (M_Z Lambda) omega(U) where
Lambda is the classical readout channel and U runs over per-qubit
basis-change gates {I, H, HS^dag} times flips {I, X}.  The average lands in
the span of the irrep projectors Pi_lambda, lambda in {0,1}^n, with
Pi_0 = |sigma_0)(sigma_0| and Pi_1 the traceless complement on each qubit,
and its coefficients f_lambda are what the calibration protocol estimates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import BASIS_GATES, PAULI, DensityMatrix, index_to_bits
from .errors import BackendError
from .noise import ReadoutNoiseModel, exact_channel_matrix

MAX_ORACLE_QUBITS = 3

_SQRT2 = np.sqrt(2.0)
NORMALIZED_PAULI_1Q = tuple(PAULI[c] / _SQRT2 for c in "IXYZ")


def _pauli_basis(n: int) -> list[np.ndarray]:
    basis = [np.array([[1.0]])]
    for _ in range(n):
        basis = [np.kron(b, p) for b in basis for p in NORMALIZED_PAULI_1Q]
    return basis


def pauli_patterns(n: int) -> list[tuple[int, ...]]:
    """Identity/traceless pattern of each basis element, in basis order."""
    digits = itertools.product(range(4), repeat=n)
    return [tuple(int(d != 0) for d in ds) for ds in digits]


@dataclass(frozen=True)
class Superoperator:
    """Real matrix of a Hermiticity-preserving map in the normalized Pauli basis."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_ORACLE_QUBITS:
            raise BackendError(
                f"oracle superoperators support 1..{MAX_ORACLE_QUBITS} qubits"
            )
        m = np.asarray(self.matrix)
        d = 4**self.n_qubits
        if np.iscomplexobj(m):
            if np.max(np.abs(m.imag)) > 1e-12:
                raise BackendError("superoperator has a non-real Pauli-basis matrix")
            m = m.real
        if m.shape != (d, d):
            raise BackendError(f"expected {d}x{d} superoperator, got {m.shape}")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_channel(cls, fn, n_qubits: int) -> "Superoperator":
        """Build the matrix by applying ``fn`` to every basis element."""
        basis = _pauli_basis(n_qubits)
        cols = []
        for q in basis:
            out = fn(q)
            cols.append([np.trace(p.conj().T @ out) for p in basis])
        return cls(n_qubits, np.array(cols).T)

    @classmethod
    def classical(cls, p_matrix: np.ndarray, n_qubits: int) -> "Superoperator":
        """Readout channel rho -> sum_{b,b'} p[b,b'] <b|rho|b> |b'><b'|."""
        p = np.asarray(p_matrix, dtype=float)

        def fn(a):
            return np.diag(p.T @ np.diag(a))

        return cls.from_channel(fn, n_qubits)

    @classmethod
    def unitary(cls, u: np.ndarray, n_qubits: int) -> "Superoperator":
        return cls.from_channel(lambda a: u @ a @ u.conj().T, n_qubits)

    def check_trace_preserving(self, atol: float = 1e-12) -> None:
        """CPTP maps keep the identity row equal to the unit row."""
        row = self.matrix[0]
        expect = np.zeros_like(row)
        expect[0] = 1.0
        if np.max(np.abs(row - expect)) > atol:
            raise BackendError("superoperator does not preserve trace")


def mz_superop(n_qubits: int) -> Superoperator:
    """Ideal z-readout channel: keeps I and Z components per qubit."""
    keep = np.array([1.0, 0.0, 0.0, 1.0])
    diag = np.array([1.0])
    for _ in range(n_qubits):
        diag = np.kron(diag, keep)
    return Superoperator(n_qubits, np.diag(diag))


def xflip_ensemble() -> list[np.ndarray]:
    """Per-qubit twirl gates: basis change in {I, H, HS^dag}, then optional X."""
    gates = []
    for g in BASIS_GATES.values():
        for a in (0, 1):
            gates.append((np.linalg.matrix_power(PAULI["X"], a) @ g))
    return gates


def clifford_ensemble_1q() -> list[np.ndarray]:
    """All 24 single-qubit Cliffords (up to phase), generated from H and S."""
    s = np.array([[1, 0], [0, 1j]], dtype=complex)
    h = BASIS_GATES["X"]

    def key(u: np.ndarray) -> bytes:
        flat = u.reshape(-1)
        pivot = flat[np.argmax(np.abs(flat) > 1e-8)]
        canon = np.round(u * (abs(pivot) / pivot), 9)
        # adding complex zero flushes -0.0 to +0.0 in both components, so
        # equal-up-to-phase matrices serialize to identical bytes
        return (canon + (0.0 + 0.0j)).tobytes()

    group: dict[bytes, np.ndarray] = {key(np.eye(2, dtype=complex)): np.eye(2, dtype=complex)}
    frontier = list(group.values())
    while frontier:
        nxt = []
        for u in frontier:
            for gname, g in (("h", h), ("s", s)):
                v = g @ u
                k = key(v)
                if k not in group:
                    group[k] = v
                    nxt.append(v)
        frontier = nxt
    if len(group) != 24:
        raise BackendError(f"clifford generation produced {len(group)} elements")
    return list(group.values())


def _resolve_channel_matrix(
    noise: ReadoutNoiseModel | np.ndarray | None, n_qubits: int, drift_factor: float
) -> np.ndarray:
    if noise is None or isinstance(noise, ReadoutNoiseModel):
        return exact_channel_matrix(noise, n_qubits, drift_factor)
    p = np.asarray(noise, dtype=float)
    dim = 2**n_qubits
    if p.shape != (dim, dim):
        raise BackendError(f"stochastic matrix must be {dim}x{dim}, got {p.shape}")
    if np.any(p < -1e-12) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
        raise BackendError("stochastic matrix rows must be probability vectors")
    return p


def build_noisy_channel(
    noise: ReadoutNoiseModel | np.ndarray | None,
    n_qubits: int,
    ensemble: str = "xflip",
    drift_factor: float = 1.0,
) -> Superoperator:
    """Twirl average of omega(U)^T M_Z Lambda omega(U), by literal enumeration.

    ``ensemble`` is "xflip" for the protocol's {I, H, HS^dag} x {I, X} gates
    or "clifford" for the full 24-element single-qubit group (slow; used as a
    cross-check that both give the same channel).
    """
    if ensemble == "xflip":
        gates = xflip_ensemble()
    elif ensemble == "clifford":
        gates = clifford_ensemble_1q()
    else:
        raise BackendError(f"unknown twirl ensemble {ensemble!r}")
    p = _resolve_channel_matrix(noise, n_qubits, drift_factor)
    k = mz_superop(n_qubits).matrix @ Superoperator.classical(p, n_qubits).matrix
    ptms = [Superoperator.unitary(g, 1).matrix for g in gates]
    total = np.zeros_like(k)
    for combo in itertools.product(ptms, repeat=n_qubits):
        r = combo[0]
        for factor in combo[1:]:
            r = np.kron(r, factor)
        total += r.T @ k @ r
    return Superoperator(n_qubits, total / len(gates) ** n_qubits)


def projector_diag(lam: tuple[int, ...]) -> np.ndarray:
    """Diagonal of Pi_lambda in the Pauli basis (the projectors are diagonal)."""
    d0 = np.array([1.0, 0.0, 0.0, 0.0])
    d1 = np.array([0.0, 1.0, 1.0, 1.0])
    diag = np.array([1.0])
    for bit in lam:
        diag = np.kron(diag, d1 if bit else d0)
    return diag


def expansion_coefficients(sop: Superoperator) -> dict[tuple[int, ...], float]:
    """f_lambda = Tr(M Pi_lambda) / Tr(Pi_lambda) for every lambda in {0,1}^n."""
    diag = np.diagonal(sop.matrix)
    out = {}
    for lam in itertools.product((0, 1), repeat=sop.n_qubits):
        proj = projector_diag(lam)
        out[lam] = float(np.dot(diag, proj) / proj.sum())
    return out


def coefficients_from_model(
    noise: ReadoutNoiseModel | np.ndarray | None,
    n_qubits: int,
    drift_factor: float = 1.0,
) -> dict[tuple[int, ...], float]:
    """Direct route: f_lambda = (sigma_Z^lambda | Lambda | sigma_Z^lambda) / 3^|lambda|.

    Expanded over classical outcomes this is
    3^-|lambda| 2^-n sum_{b,b'} (-1)^{<b,lambda> + <b',lambda>} p[b -> b'].
    """
    p = _resolve_channel_matrix(noise, n_qubits, drift_factor)
    dim = 2**n_qubits
    bits = index_to_bits(np.arange(dim), n_qubits)
    out = {}
    for lam in itertools.product((0, 1), repeat=n_qubits):
        parity = (bits @ np.asarray(lam, dtype=np.uint8)) % 2
        signs = 1.0 - 2.0 * parity
        out[lam] = float(signs @ p @ signs / (dim * 3.0 ** sum(lam)))
    return out


def stochastic_x_weights(p_matrix: np.ndarray) -> np.ndarray:
    """Flip-pattern weights of the X-symmetrized channel: w_c = mean_b p[b, b^c]."""
    p = np.asarray(p_matrix, dtype=float)
    dim = p.shape[0]
    idx = np.arange(dim)
    return np.array([p[idx, idx ^ c].mean() for c in range(dim)])


def channel_matrix_from_x_weights(weights: np.ndarray) -> np.ndarray:
    """Stochastic matrix of rho -> sum_c w_c X^c rho X^c on classical inputs."""
    w = np.asarray(weights, dtype=float)
    dim = w.size
    idx = np.arange(dim)
    return w[idx[:, None] ^ idx[None, :]]


def exact_crosstalk_statistic(
    noise: ReadoutNoiseModel | np.ndarray, n_qubits: int, i: int, j: int
) -> float:
    """Exact f_i * f_j - f_(i,j); zero iff the channel factorizes over (i, j)."""
    coeffs = coefficients_from_model(noise, n_qubits)
    e_i = tuple(int(q == i) for q in range(n_qubits))
    e_j = tuple(int(q == j) for q in range(n_qubits))
    e_ij = tuple(int(q in (i, j)) for q in range(n_qubits))
    return coeffs[e_i] * coeffs[e_j] - coeffs[e_ij]


# --- closed-form bias of the non-robust estimator under local noise ---


def bias_fidelity_1q(f: float, target_overlap: float, trace_obs: float = 1.0) -> float:
    """|(1 - 3 f) ((O|rho) - (O|I)/2)| for a single-qubit observable O.

    For O = |phi><phi| and rho = |phi><phi| this reduces to the flip
    probability itself.
    """
    return abs((1.0 - 3.0 * f) * (target_overlap - trace_obs / 2.0))


def bias_pauli_2q(f_i: float, f_j: float, correlator: float) -> float:
    """|<P (x) P'>| * |1 - 9 f_i f_j| for a two-qubit Pauli correlator."""
    return abs(correlator) * abs(1.0 - 9.0 * f_i * f_j)


def bias_purity_1q(f: float, overlap: float) -> float:
    """|((rho|sigma) - 1/2) (1 - 9 f^2)| for single-qubit quadratic estimates."""
    return abs((overlap - 0.5) * (1.0 - 9.0 * f * f))


def noisy_purity_2q(
    f_i: float, f_j: float, overlap: float, overlap_i: float, overlap_j: float
) -> float:
    """Expected value of the non-robust two-qubit overlap estimator.

    ``overlap`` is (rho|sigma) on the pair and ``overlap_i``/``overlap_j``
    the marginal overlaps.  At f = 1/3 this returns ``overlap`` itself.
    """
    g_i = 9.0 * f_i * f_i
    g_j = 9.0 * f_j * f_j
    return (
        0.25
        + g_i * (overlap_i / 2.0 - 0.25)
        + g_j * (overlap_j / 2.0 - 0.25)
        + g_i * g_j * (0.25 - (overlap_i + overlap_j) / 2.0 + overlap)
    )


def bias_purity_2q(
    f_i: float, f_j: float, overlap: float, overlap_i: float, overlap_j: float
) -> float:
    """Deviation magnitude of the expected non-robust value from (rho|sigma)."""
    return abs(noisy_purity_2q(f_i, f_j, overlap, overlap_i, overlap_j) - overlap)


# --- exhaustive measurement-record distribution (tiny registers) ---


def readout_tuple_distribution(
    rho: DensityMatrix,
    noise: ReadoutNoiseModel | np.ndarray | None,
    drift_factor: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All (basis, flip, outcome) tuples with their exact probabilities.

    Returns (bases, flips, outcomes, probs) arrays with one row per tuple;
    bases hold 0/1/2 for Z/X/Y.  Bases and flips are uniform by protocol;
    outcome probabilities come from the rotated state and the exact noise
    matrix.  Width is capped at 2 qubits (the row count is 12^n).
    """
    n = rho.n_qubits
    if n > 2:
        raise BackendError("tuple enumeration supports at most 2 qubits")
    dim = 2**n
    p_noise = _resolve_channel_matrix(noise, n, drift_factor)
    gate_list = [BASIS_GATES[c] for c in "ZXY"]
    bases, flips, outcomes, probs = [], [], [], []
    for basis in itertools.product(range(3), repeat=n):
        g = np.array([[1.0]])
        for b in basis:
            g = np.kron(g, gate_list[b])
        rot = g @ rho.matrix @ g.conj().T
        ideal = np.real(np.diagonal(rot)).copy()
        ideal[ideal < 0] = 0.0
        for flip_bits in itertools.product((0, 1), repeat=n):
            mask = 0
            for q, a in enumerate(flip_bits):
                if a:
                    mask |= 1 << (n - 1 - q)
            flipped = ideal[np.arange(dim) ^ mask]
            read = flipped @ p_noise
            for out_idx in range(dim):
                out_bits = tuple((out_idx >> (n - 1 - q)) & 1 for q in range(n))
                bases.append(basis)
                flips.append(flip_bits)
                outcomes.append(out_bits)
                probs.append(read[out_idx] / (3.0**n * 2.0**n))
    return (
        np.array(bases, dtype=np.int8),
        np.array(flips, dtype=np.uint8),
        np.array(outcomes, dtype=np.uint8),
        np.array(probs, dtype=float),
    )
