"""Randomized single-qubit-basis measurements and bias-mitigated estimators.

Acquisition draws, per shot and qubit, a uniform basis from {Z, X, Y} and a
uniform X flip, measures through the noisy device, and stores everything in
:class:`~robustshadows.records.ShadowRecords`.  The flip layer commutes
through the readout classically, so post-processing always works with the
adjusted outcome b xor a and the plain basis rotations.

Estimation inverts the calibrated measurement channel qubit by qubit.  The
single-shot reconstruction is

    rho_hat = prod_j [ f_j^-1 * g_j^dag |b~_j><b~_j| g_j + (1 - f_j^-1)/2 * I ]

which averages to the state when the f_j are the true channel coefficients.
Linear estimators contract this with a product observable; quadratic ones
(subsystem purities, overlaps) evaluate closed-form two-copy kernels on
pairs of shots.  Passing ``CalibrationEstimate.noiseless(n)`` runs the exact
same code with f = 1/3, which is the non-robust mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _quadratic as _q
from .calibration import CalibrationEstimate
from .core import BASIS_GATES, PAULI, ProductState, StateVector, index_to_bits
from .device import SimulatedDevice
from .errors import EstimationError
from .records import ShadowRecords, ShadowShot, as_shadow_records
from .rng import RandomStream
from .stats import ShadowFrequencyModel

_BASIS_MATS = tuple(BASIS_GATES[c] for c in "ZXY")


# --- acquisition ---


def run_shadow_acquisition(
    prep: StateVector | ProductState,
    n_shots: int,
    device: SimulatedDevice,
    rng: RandomStream,
    batch_index: int = 0,
    shot_offset: int = 0,
) -> ShadowRecords:
    """Acquire randomized-measurement records of one prepared state.

    Bases, flips, measurement draws and readout noise come from separate
    substreams of ``rng``, so the whole batch is a pure function of
    (rng, prep, device).  Product states are sampled per qubit; entangled
    states take the dense per-shot path.
    """
    if n_shots < 1:
        raise EstimationError("acquisition needs at least one shot")
    n = prep.n_qubits
    if device.n_qubits != n:
        raise EstimationError("device width does not match state width")
    basis = np.floor(rng.split("basis").generator().random((n_shots, n)) * 3).astype(np.int8)
    flips = (rng.split("flip").generator().random((n_shots, n)) < 0.5).astype(np.uint8)
    u = rng.split("measure").generator().random(n_shots)
    if isinstance(prep, ProductState):
        ideal = _sample_product(prep, basis, rng.split("measure-bits").generator())
    else:
        ideal = _sample_rotated(prep, basis, u)
    shot_index = shot_offset + np.arange(n_shots, dtype=np.int64)
    outcome = device.measure_bits(ideal ^ flips, shot_index, rng.split("noise").generator())
    batch = np.full(n_shots, batch_index, dtype=np.int32)
    return ShadowRecords(shot_index, batch, basis, flips, outcome)


def _sample_product(
    prep: ProductState, basis: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    """Per-qubit Bernoulli sampling: P(1) = |<1| g phi_q>|^2."""
    n = prep.n_qubits
    p_one = np.empty((n, 3))
    for q, phi in enumerate(prep.factors):
        for g in range(3):
            p_one[q, g] = abs(_BASIS_MATS[g][1] @ phi) ** 2
    probs = p_one[np.arange(n)[None, :], basis]
    return (gen.random(basis.shape) < probs).astype(np.uint8)


def _sample_rotated(prep: StateVector, basis: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Dense path: rotate the state per shot, sample one basis index."""
    n = prep.n_qubits
    psi0 = prep.tensor()
    idx = np.empty(len(u), dtype=np.int64)
    for t in range(len(u)):
        psi = psi0
        for q in range(n):
            g = basis[t, q]
            if g:
                psi = np.moveaxis(np.tensordot(_BASIS_MATS[g], psi, axes=([1], [q])), 0, q)
        cdf = np.cumsum(np.abs(psi.reshape(-1)) ** 2)
        cdf[-1] = 1.0
        idx[t] = np.searchsorted(cdf, u[t], side="right")
    return index_to_bits(idx, n)


# --- single-shot reconstruction ---


@dataclass(frozen=True)
class LocalSnapshot:
    """Per-qubit 2x2 factors of one inverted snapshot; each has unit trace."""

    factors: np.ndarray  # (n, 2, 2) complex

    def __post_init__(self) -> None:
        f = np.asarray(self.factors, dtype=complex)
        traces = np.trace(f, axis1=1, axis2=2)
        if np.max(np.abs(traces - 1.0)) > 1e-12:
            raise EstimationError("snapshot factors must have unit trace")
        f.flags.writeable = False
        object.__setattr__(self, "factors", f)

    @property
    def n_qubits(self) -> int:
        return self.factors.shape[0]

    def dense(self, subset: tuple[int, ...] | None = None) -> np.ndarray:
        qubits = range(self.n_qubits) if subset is None else subset
        out = np.array([[1.0 + 0.0j]])
        for q in qubits:
            out = np.kron(out, self.factors[q])
        return out


def snapshot(shot: ShadowShot, f: CalibrationEstimate) -> LocalSnapshot:
    """Invert the calibrated channel on one shot."""
    n = shot.basis.size
    f.require_invertible(range(n))
    adjusted = shot.flip_mask ^ shot.outcome
    eye = np.eye(2, dtype=complex)
    factors = np.empty((n, 2, 2), dtype=complex)
    for q in range(n):
        g = _BASIS_MATS[shot.basis[q]]
        ket = g.conj().T[:, int(adjusted[q])]
        finv = 1.0 / f.f_local[q]
        factors[q] = finv * np.outer(ket, ket.conj()) + (1.0 - finv) / 2.0 * eye
    return LocalSnapshot(factors)


# --- linear estimators ---


class Estimate(NamedTuple):
    value: float
    stderr: float


@dataclass(frozen=True)
class LocalObservable:
    """Tensor product of single-qubit Hermitian operators on a qubit subset."""

    qubits: tuple[int, ...]
    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise EstimationError(f"observable qubits must be distinct: {qubits}")
        ops = []
        for m in self.operators:
            m = np.asarray(m, dtype=complex)
            if m.shape != (2, 2) or np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise EstimationError("observable factors must be Hermitian 2x2")
            m.flags.writeable = False
            ops.append(m)
        if len(ops) != len(qubits):
            raise EstimationError("one operator per qubit required")
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "operators", tuple(ops))

    @classmethod
    def pauli(cls, paulis: str, qubits: tuple[int, ...]) -> "LocalObservable":
        return cls(qubits, tuple(PAULI[c] for c in paulis))

    @classmethod
    def projector(cls, target: np.ndarray, qubit: int) -> "LocalObservable":
        target = np.asarray(target, dtype=complex)
        if target.shape != (2,):
            raise EstimationError("projector target must be a single-qubit 2-vector")
        norm = np.sqrt(np.sum(np.abs(target) ** 2))
        target = target / norm
        return cls((qubit,), (np.outer(target, target.conj()),))


def _shot_values(records: ShadowRecords, f: CalibrationEstimate, obs: LocalObservable) -> np.ndarray:
    """Per-shot estimator values Tr(O rho_hat), vectorized over shots."""
    n = records.n_qubits
    for q in obs.qubits:
        if not 0 <= q < n:
            raise EstimationError(f"observable qubit {q} outside register of width {n}")
    if f.n_qubits != n:
        raise EstimationError("calibration width does not match records")
    f.require_invertible(obs.qubits)
    adjusted = records.adjusted_outcome()
    values = np.ones(len(records))
    for q, op in zip(obs.qubits, obs.operators):
        # table[g, b] = <b| g O g^dag |b>
        table = np.empty((3, 2))
        for g in range(3):
            rot = _BASIS_MATS[g] @ op @ _BASIS_MATS[g].conj().T
            table[g] = np.real(np.diagonal(rot))
        finv = 1.0 / f.f_local[q]
        trace_op = float(np.real(np.trace(op)))
        values = values * (
            finv * table[records.basis[:, q], adjusted[:, q]]
            + (1.0 - finv) / 2.0 * trace_op
        )
    return values


def estimate_observable(shots, f: CalibrationEstimate, obs: LocalObservable) -> Estimate:
    """Mean and standard error of the inverted-snapshot estimator."""
    records = as_shadow_records(shots)
    if len(records) == 0:
        raise EstimationError("no shadow records")
    values = _shot_values(records, f, obs)
    stderr = (
        float(np.std(values, ddof=1) / np.sqrt(len(values)))
        if len(values) > 1
        else float("nan")
    )
    return Estimate(float(values.mean()), stderr)


def estimate_fidelity_1q(shots, f: CalibrationEstimate, target: np.ndarray, qubit: int) -> Estimate:
    """Fidelity of one qubit's reduced state with a pure single-qubit target."""
    return estimate_observable(shots, f, LocalObservable.projector(target, qubit))


def estimate_pauli_correlator(
    shots, f: CalibrationEstimate, paulis: str, qubits: tuple[int, ...]
) -> Estimate:
    """<P_i (x) P_j (x) ...> for non-identity Paulis on the given qubits."""
    if len(paulis) != len(qubits) or any(c not in "XYZ" for c in paulis):
        raise EstimationError(f"correlator needs one of XYZ per qubit, got {paulis!r}")
    return estimate_observable(shots, f, LocalObservable.pauli(paulis, qubits))


# --- quadratic estimators (purities and overlaps) ---


class PurityEstimate(NamedTuple):
    value: float
    stderr: float
    n_pairs: int
    exhaustive: bool


DEFAULT_MAX_PAIRS = 1_000_000


def naive_pair_values(
    rec_a: ShadowRecords, rec_b: ShadowRecords, f: CalibrationEstimate,
    subset: tuple[int, ...],
) -> np.ndarray:
    """Two-copy kernel Tr(rho_hat sigma_hat) on aligned record rows.

    Per qubit the kernel is f^-2 (delta_bb' delta_gg' - delta_gg'/2) + 1/2,
    where basis equality is on the stored basis ids and outcomes are
    compared after flip adjustment.  Rows with differing bases contribute
    the constant 1/2 for that qubit.
    """
    if len(rec_a) != len(rec_b):
        raise EstimationError("kernel expects aligned record sets of equal length")
    f.require_invertible(subset)
    cols = list(subset)
    finv2 = (1.0 / f.f_local[cols]) ** 2
    rows = np.arange(len(rec_a))
    return _q.naive_kernel(
        rec_a.basis[:, cols], rec_a.adjusted_outcome()[:, cols],
        rec_b.basis[:, cols], rec_b.adjusted_outcome()[:, cols],
        rows, rows, finv2,
    )


def same_basis_pair_values(
    rec_a: ShadowRecords, rec_b: ShadowRecords, f: CalibrationEstimate,
    subset: tuple[int, ...],
) -> np.ndarray:
    """Matching-basis two-copy kernel: prod_q (1/2)(f^-2/3 * (-1)^(b~+b~') + 1).

    Only defined for aligned rows whose bases agree on the subset.
    """
    if len(rec_a) != len(rec_b):
        raise EstimationError("kernel expects aligned record sets of equal length")
    f.require_invertible(subset)
    cols = list(subset)
    if not np.array_equal(rec_a.basis[:, cols], rec_b.basis[:, cols]):
        raise EstimationError("matching-basis kernel fed non-matching rows")
    finv2 = (1.0 / f.f_local[cols]) ** 2
    rows = np.arange(len(rec_a))
    return _q.same_basis_kernel(
        rec_a.adjusted_outcome()[:, cols], rec_b.adjusted_outcome()[:, cols],
        rows, rows, finv2,
    )


def _estimate_quadratic(
    shots_a, shots_b, f: CalibrationEstimate, subset: tuple[int, ...],
    matching: bool, max_pairs: int, n_resamples: int,
    rng: RandomStream | None,
) -> PurityEstimate:
    rec_a = as_shadow_records(shots_a)
    rec_b = None if shots_b is None or shots_b is shots_a else as_shadow_records(shots_b)
    subset = tuple(int(q) for q in subset)
    for q in subset:
        if not 0 <= q < rec_a.n_qubits:
            raise EstimationError(f"subset qubit {q} outside register")
    f.require_invertible(subset)
    if rng is None:
        rng = RandomStream(871623).split("quadratic")
    cols = list(subset)
    finv2 = (1.0 / f.f_local[cols]) ** 2

    def arrays(rec):
        return rec.basis[:, cols], rec.adjusted_outcome()[:, cols]

    def point(ba, aa, bb, ab, gen):
        """(mean, n_pairs, exhaustive); bb/ab None for within-set pairs."""
        if matching:
            ii, jj, exhaustive = _q.pair_indices_matching(
                _q.basis_keys(ba), None if bb is None else _q.basis_keys(bb),
                max_pairs, gen,
            )
        else:
            ii, jj, exhaustive = _q.pair_indices_all(
                len(ba), None if bb is None else len(bb), max_pairs, gen
            )
        if matching:
            vals = _q.same_basis_kernel(aa, aa if ab is None else ab, ii, jj, finv2)
        else:
            vals = _q.naive_kernel(ba, aa, ba if bb is None else bb,
                                   aa if ab is None else ab, ii, jj, finv2)
        return float(vals.mean()), len(ii), exhaustive

    basis_a, adj_a = arrays(rec_a)
    basis_b, adj_b = (None, None) if rec_b is None else arrays(rec_b)
    value, n_pairs, exhaustive = point(
        basis_a, adj_a, basis_b, adj_b, rng.split("point").generator()
    )

    if n_resamples >= 2:
        sub_a = rec_a.restrict(subset)
        model_a = ShadowFrequencyModel.fit(sub_a)
        model_b = None if rec_b is None else ShadowFrequencyModel.fit(rec_b.restrict(subset))
        local = list(range(len(subset)))
        boots = np.empty(n_resamples)
        for r in range(n_resamples):
            gen = rng.split("boot", r).generator()
            synth_a = model_a.resample(len(rec_a), gen)
            sa, aa = synth_a.basis[:, local], synth_a.adjusted_outcome()[:, local]
            if model_b is None:
                sb = ab = None
            else:
                synth_b = model_b.resample(len(rec_b), gen)
                sb, ab = synth_b.basis[:, local], synth_b.adjusted_outcome()[:, local]
            boots[r], _, _ = point(sa, aa, sb, ab, rng.split("boot-pairs", r).generator())
        stderr = float(np.std(boots, ddof=1))
    else:
        stderr = float("nan")
    return PurityEstimate(value, stderr, n_pairs, exhaustive)


def estimate_purity_naive(
    shots_a, shots_b, f: CalibrationEstimate, subset: tuple[int, ...],
    max_pairs: int = DEFAULT_MAX_PAIRS, n_resamples: int = 20,
    rng: RandomStream | None = None,
) -> PurityEstimate:
    """Tr(rho_S sigma_S) from all shot pairs, any bases.

    Pass ``shots_b=None`` (or the same object) for the purity of one record
    set; distinct record sets give the overlap of two states.  When the pair
    count exceeds ``max_pairs`` a fixed-seed uniform subsample is used; the
    standard error comes from a parametric bootstrap.
    """
    return _estimate_quadratic(
        shots_a, shots_b, f, subset, False, max_pairs, n_resamples, rng
    )


def estimate_purity_same_basis(
    shots_a, shots_b, f: CalibrationEstimate, subset: tuple[int, ...],
    max_pairs: int = DEFAULT_MAX_PAIRS, n_resamples: int = 20,
    rng: RandomStream | None = None,
) -> PurityEstimate:
    """Tr(rho_S sigma_S) from matching-basis shot pairs only.

    Restricting to pairs measured in the same per-qubit bases removes the
    constant mismatch term of the naive kernel and is the recommended
    default for subsystem purities.
    """
    return _estimate_quadratic(
        shots_a, shots_b, f, subset, True, max_pairs, n_resamples, rng
    )
