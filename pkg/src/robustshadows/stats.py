"""Experiment planning and uncertainty quantification.

The bootstrap here is parametric in the narrow sense used throughout the
package: a record set is summarized by its per-qubit basis frequencies and
per-(qubit, basis) outcome frequencies, synthetic record sets of equal size
are drawn from that product model, and the estimator is re-run on each.
Intervals are normal approximations centred on the real-data estimate.  A
nonparametric mode (resampling whole records with replacement) is available
where cross-qubit correlations matter, e.g. for crosstalk statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable

import numpy as np

from .errors import EstimationError
from .records import (
    CalibrationRecords,
    ShadowRecords,
    as_calibration_records,
    as_shadow_records,
)
from .rng import RandomStream

# --- interleaved experiment plan ---


@dataclass(frozen=True)
class PhaseSpec:
    kind: str  # "calibration" or "acquisition"
    batch_index: int
    start_shot: int
    n_shots: int


@dataclass(frozen=True)
class ExperimentPlan:
    total_shots: int
    n_batches: int
    calib_shots_per_batch: int
    phases: tuple[PhaseSpec, ...]

    def acquisition_phases(self) -> list[PhaseSpec]:
        return [p for p in self.phases if p.kind == "acquisition"]

    def calibration_phases(self) -> list[PhaseSpec]:
        return [p for p in self.phases if p.kind == "calibration"]


def make_plan(
    total_shots: int, n_batches: int = 20, calib_shots_per_batch: int = 500
) -> ExperimentPlan:
    """Split acquisition into interleaved batches bracketed by calibrations.

    The schedule is c_0 a_0 c_1 a_1 ... a_{B-1} c_B: one calibration phase
    before every batch plus one after the last, so every batch has a
    calibration on both sides.  Leftover shots (total mod batches) go to the
    earliest batches.  Shot indices are global across all phases, in order.
    """
    if total_shots < 1:
        raise EstimationError("plan needs at least one acquisition shot")
    if n_batches < 1 or n_batches > total_shots:
        raise EstimationError(
            f"batch count must be in [1, total_shots], got {n_batches} for {total_shots}"
        )
    if calib_shots_per_batch < 1:
        raise EstimationError("calibration phases need at least one shot")
    base, rem = divmod(total_shots, n_batches)
    phases = []
    clock = 0
    for b in range(n_batches):
        phases.append(PhaseSpec("calibration", b, clock, calib_shots_per_batch))
        clock += calib_shots_per_batch
        size = base + (1 if b < rem else 0)
        phases.append(PhaseSpec("acquisition", b, clock, size))
        clock += size
    phases.append(PhaseSpec("calibration", n_batches, clock, calib_shots_per_batch))
    return ExperimentPlan(total_shots, n_batches, calib_shots_per_batch, tuple(phases))


# --- parametric record models ---


@dataclass(frozen=True)
class CalibrationFrequencyModel:
    """Per-qubit flip/readout disagreement frequencies."""

    disagree: np.ndarray  # (n,) P(a_i != b_i)

    @classmethod
    def fit(cls, records: CalibrationRecords) -> "CalibrationFrequencyModel":
        return cls(records.adjusted_outcome().mean(axis=0))

    def resample(self, n_shots: int, gen: np.random.Generator) -> CalibrationRecords:
        n = self.disagree.size
        flips = np.zeros((n_shots, n), dtype=np.uint8)
        outcome = (gen.random((n_shots, n)) < self.disagree[None, :]).astype(np.uint8)
        return CalibrationRecords(
            np.arange(n_shots), np.zeros(n_shots, dtype=np.int32), flips, outcome
        )


@dataclass(frozen=True)
class ShadowFrequencyModel:
    """Per-qubit basis frequencies and conditional outcome frequencies.

    Estimators only ever consume the flip-adjusted outcome b xor a, so the
    model tracks that directly and resamples records with zero flip masks.
    """

    basis_probs: np.ndarray  # (n, 3)
    outcome_probs: np.ndarray  # (n, 3) P(adjusted outcome = 1 | basis)

    @classmethod
    def fit(cls, records: ShadowRecords) -> "ShadowFrequencyModel":
        n = records.n_qubits
        adj = records.adjusted_outcome()
        basis_probs = np.zeros((n, 3))
        outcome_probs = np.full((n, 3), 0.5)  # unseen basis: uninformative
        for q in range(n):
            for g in range(3):
                mask = records.basis[:, q] == g
                count = int(mask.sum())
                basis_probs[q, g] = count / len(records)
                if count:
                    outcome_probs[q, g] = adj[mask, q].mean()
        return cls(basis_probs, outcome_probs)

    def resample(self, n_shots: int, gen: np.random.Generator) -> ShadowRecords:
        n = self.basis_probs.shape[0]
        u = gen.random((n_shots, n))
        cdf = np.cumsum(self.basis_probs, axis=1)
        cdf[:, -1] = 1.0
        basis = (u[..., None] > cdf[None, :, :]).sum(axis=2).astype(np.int8)
        p1 = np.take_along_axis(
            self.outcome_probs[None, :, :].repeat(n_shots, axis=0),
            basis[..., None].astype(int), axis=2,
        )[..., 0]
        outcome = (gen.random((n_shots, n)) < p1).astype(np.uint8)
        flips = np.zeros((n_shots, n), dtype=np.uint8)
        return ShadowRecords(
            np.arange(n_shots), np.zeros(n_shots, dtype=np.int32), basis, flips, outcome
        )


def fit_frequency_model(records):
    if isinstance(records, ShadowRecords):
        return ShadowFrequencyModel.fit(records)
    if isinstance(records, CalibrationRecords):
        return CalibrationFrequencyModel.fit(records)
    raise EstimationError(f"no frequency model for {type(records).__name__}")


def _resample_nonparametric(records, gen: np.random.Generator):
    idx = gen.integers(0, len(records), size=len(records))
    return records.select(idx)


# --- bootstrap intervals ---


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    sigma: float
    low: float
    high: float
    level: float
    n_resamples: int


def bootstrap_sigma(
    estimator: Callable,
    records,
    f,
    n_resamples: int = 20,
    rng: RandomStream | None = None,
    parametric: bool = True,
) -> tuple[float, float]:
    """(point estimate, bootstrap standard deviation of the estimator)."""
    if n_resamples < 2:
        raise EstimationError("bootstrap needs at least 2 resamples")
    if rng is None:
        rng = RandomStream(202406).split("bootstrap")
    records = _normalize_records(records)
    point = float(estimator(records, f))
    model = fit_frequency_model(records) if parametric else None
    values = np.empty(n_resamples)
    for r in range(n_resamples):
        gen = rng.split(r).generator()
        synth = (
            model.resample(len(records), gen)
            if parametric
            else _resample_nonparametric(records, gen)
        )
        values[r] = estimator(synth, f)
    return point, float(np.std(values, ddof=1))


def bootstrap_ci(
    estimator: Callable,
    records,
    f,
    n_resamples: int = 20,
    level: float = 0.95,
    rng: RandomStream | None = None,
    parametric: bool = True,
) -> BootstrapResult:
    """Normal-approximation interval: point +- z * sigma_boot (symmetric)."""
    point, sigma = bootstrap_sigma(estimator, records, f, n_resamples, rng, parametric)
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return BootstrapResult(point, sigma, point - z * sigma, point + z * sigma,
                           level, n_resamples)


def _normalize_records(records):
    if isinstance(records, (ShadowRecords, CalibrationRecords)):
        return records
    try:
        return as_shadow_records(records)
    except Exception:
        return as_calibration_records(records)


# --- per-batch estimation with interleaved calibrations ---


@dataclass(frozen=True)
class BatchedEstimates:
    per_batch: dict[int, float]
    batch_shots: dict[int, int]
    pooled: float


def batched_estimates(
    estimator: Callable,
    records: ShadowRecords,
    calibrations: dict[int, "object"],
) -> BatchedEstimates:
    """Run an estimator per acquisition batch with that batch's calibration.

    Batch b uses the equal-weight mix of the bracketing calibration phases b
    and b+1, which centres the coefficients on the batch midpoint under
    linear drift.  The pooled value is the shot-weighted mean over batches.
    """
    records = as_shadow_records(records)
    per_batch: dict[int, float] = {}
    batch_shots: dict[int, int] = {}
    for b in records.batches():
        b = int(b)
        if b not in calibrations or (b + 1) not in calibrations:
            raise EstimationError(
                f"acquisition batch {b} lacks an adjacent calibration phase"
            )
        f_b = calibrations[b].mix(calibrations[b + 1])
        part = records.for_batch(b)
        per_batch[b] = float(estimator(part, f_b))
        batch_shots[b] = len(part)
    total = sum(batch_shots.values())
    pooled = sum(per_batch[b] * batch_shots[b] for b in per_batch) / total
    return BatchedEstimates(per_batch, batch_shots, pooled)
