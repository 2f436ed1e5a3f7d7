"""Twirled readout calibration.

Each calibration shot prepares |0...0>, applies an independent uniform layer
of X flips, and reads the register out through the noisy device.  The
single-shot coefficient estimators are

    f_i     = (1/3)   * (-1)^(a_i xor b_i)
    f_(i,j) = (1/9)   * (-1)^(a_i xor b_i xor a_j xor b_j)

whose means converge to the twirled-channel expansion coefficients; the
1/3^|lambda| prefactors are the inverse irrep traces.  For noiseless readout
b equals a and every single-qubit estimate is exactly 1/3, which corresponds
to flip probability p = (1 - 3 f) / 2 = 0.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .device import SimulatedDevice
from .errors import EstimationError, NonInvertibleCalibrationError
from .records import CalibrationRecords, as_calibration_records
from .rng import RandomStream


class NonInvertibleCalibrationWarning(UserWarning):
    """Raised as a warning when a calibrated f is not positive."""


@dataclass(frozen=True)
class CalibrationEstimate:
    """Calibrated channel coefficients for one register.

    ``f_local[i]`` is the single-qubit coefficient, ``f_pair`` maps requested
    pairs to the joint coefficient, ``p_flip`` the implied symmetrized flip
    probability (1 - 3 f) / 2.  ``ci`` optionally holds 95% intervals keyed
    like ``("f_local", i)`` or ``("f_pair", i, j)``.

    A coefficient f <= 0 means the twirled channel is not invertible on that
    qubit.  Construction warns; any attempt to *use* the inverse raises, so
    a bad calibration poisons robust estimates loudly instead of silently.
    """

    f_local: np.ndarray
    f_pair: dict[tuple[int, int], float] = field(default_factory=dict)
    n_shots: int = 0
    ci: dict[tuple, tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        f = np.asarray(self.f_local, dtype=float)
        f.flags.writeable = False
        object.__setattr__(self, "f_local", f)
        bad = np.flatnonzero(f <= 0.0)
        if bad.size:
            warnings.warn(
                f"calibrated f <= 0 on qubit(s) {bad.tolist()}; "
                "the readout channel is not invertible there",
                NonInvertibleCalibrationWarning,
                stacklevel=2,
            )

    @property
    def n_qubits(self) -> int:
        return self.f_local.size

    @property
    def p_flip(self) -> np.ndarray:
        return (1.0 - 3.0 * self.f_local) / 2.0

    @classmethod
    def noiseless(cls, n_qubits: int) -> "CalibrationEstimate":
        """The exact noise-free coefficients; used for non-robust estimation."""
        pairs = {}
        return cls(np.full(n_qubits, 1.0 / 3.0), pairs, 0, None)

    def require_invertible(self, qubits) -> None:
        bad = [int(q) for q in qubits if self.f_local[q] <= 0.0]
        if bad:
            raise NonInvertibleCalibrationError(
                f"cannot invert readout on qubit(s) {bad}: calibrated f <= 0"
            )

    def inverse_f(self, qubits) -> np.ndarray:
        self.require_invertible(qubits)
        return 1.0 / self.f_local[list(qubits)]

    def mix(self, other: "CalibrationEstimate") -> "CalibrationEstimate":
        """Equal-weight average of two estimates (used between batch phases)."""
        if other.n_qubits != self.n_qubits:
            raise EstimationError("cannot mix calibrations of different widths")
        pairs = {
            k: 0.5 * (self.f_pair[k] + other.f_pair[k])
            for k in self.f_pair.keys() & other.f_pair.keys()
        }
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonInvertibleCalibrationWarning)
            return CalibrationEstimate(
                0.5 * (self.f_local + other.f_local), pairs,
                self.n_shots + other.n_shots, None,
            )


def run_calibration(
    n_qubits: int,
    n_shots: int,
    device: SimulatedDevice,
    rng: RandomStream,
    batch_index: int = 0,
    shot_offset: int = 0,
) -> CalibrationRecords:
    """Acquire twirled calibration shots through the device.

    Flip masks come from the "flip" substream, readout noise from "noise";
    both are deterministic functions of ``rng``.  ``shot_offset`` places the
    shots on the global experiment clock for drift purposes.
    """
    if n_shots < 1:
        raise EstimationError("calibration needs at least one shot")
    if device.n_qubits != n_qubits:
        raise EstimationError("device width does not match requested register")
    flips = (rng.split("flip").generator().random((n_shots, n_qubits)) < 0.5).astype(np.uint8)
    shot_index = shot_offset + np.arange(n_shots, dtype=np.int64)
    # X^a on |0..0> lands exactly on |a>, so the true pre-readout bits are the mask.
    outcomes = device.measure_bits(flips, shot_index, rng.split("noise").generator())
    batch = np.full(n_shots, batch_index, dtype=np.int32)
    return CalibrationRecords(shot_index, batch, flips, outcomes)


def default_pairs(n_qubits: int) -> list[tuple[int, int]]:
    """Adjacent pairs (i, i+1); the cheap default for crosstalk screening."""
    return [(i, i + 1) for i in range(n_qubits - 1)]


def estimate_f(
    shots,
    pairs: list[tuple[int, int]] | str | None = None,
) -> CalibrationEstimate:
    """Estimate channel coefficients from calibration records.

    ``pairs`` may be an explicit list, "all", or None for adjacent pairs.
    Means are computed with numpy's pairwise summation, so the reduction is
    deterministic and order-stable.
    """
    records = as_calibration_records(shots)
    n = records.n_qubits
    if pairs is None:
        pair_list = default_pairs(n)
    elif pairs == "all":
        pair_list = [(i, j) for i, j in itertools.combinations(range(n), 2)]
    else:
        pair_list = [(int(i), int(j)) for i, j in pairs]
    for i, j in pair_list:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise EstimationError(f"invalid coefficient pair ({i}, {j})")
    signs = 1.0 - 2.0 * records.adjusted_outcome()  # (-1)^(a xor b), (T, n)
    f_local = signs.mean(axis=0) / 3.0
    f_pair = {
        (i, j): float((signs[:, i] * signs[:, j]).mean() / 9.0) for i, j in pair_list
    }
    return CalibrationEstimate(f_local, f_pair, len(records), None)


def crosstalk_statistic(estimate: CalibrationEstimate, i: int, j: int) -> float:
    """f_i * f_j - f_(i,j): zero in expectation iff readout factorizes on (i, j)."""
    key = (i, j) if (i, j) in estimate.f_pair else (j, i)
    if key not in estimate.f_pair:
        raise EstimationError(f"pair ({i}, {j}) was not estimated")
    return float(estimate.f_local[i] * estimate.f_local[j] - estimate.f_pair[key])
