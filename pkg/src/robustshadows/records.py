"""Shot records and their on-disk format.

Record files are line-delimited: one JSON header line followed by one record
per line.  The header names the schema version, register width and the seeds
used, so a file is self-describing; record lines are plain JSON objects with
bitstrings for masks and outcomes (index 0 of a bitstring is qubit 0).
Nothing time-dependent is ever written to a record file, so identical seeds
and configs reproduce identical bytes.

In memory, shots live in column-array containers (one row per shot) because
every estimator in this package is vectorized over shots.  The per-shot
dataclasses are views for ergonomic single-record access.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import BASIS_CHARS
from .errors import BackendError, EstimationError

CALIBRATION_SCHEMA = "calibration-records/1"
SHADOW_SCHEMA = "shadow-records/1"

_BASIS_INDEX = {c: i for i, c in enumerate(BASIS_CHARS)}


@dataclass(frozen=True)
class CalibrationShot:
    """One twirled readout-calibration shot: prepared |0..0>, flipped by
    ``flip_mask``, read out as ``outcome``."""

    shot_index: int
    batch_index: int
    flip_mask: np.ndarray
    outcome: np.ndarray


@dataclass(frozen=True)
class ShadowShot:
    """One randomized-measurement shot: per-qubit basis in {Z, X, Y} (stored
    as 0/1/2), the calibration-style flip mask, and the noisy outcome."""

    shot_index: int
    batch_index: int
    basis: np.ndarray
    flip_mask: np.ndarray
    outcome: np.ndarray


def _bits_str(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def _parse_bits(s: str, n: int, what: str) -> np.ndarray:
    if len(s) != n or set(s) - {"0", "1"}:
        raise BackendError(f"bad {what} bitstring {s!r} for width {n}")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


class _Records:
    """Common column-array behaviour of the two record containers."""

    def __init__(self, shot_index, batch_index, flip, outcome):
        self.shot_index = np.ascontiguousarray(shot_index, dtype=np.int64)
        self.batch_index = np.ascontiguousarray(batch_index, dtype=np.int32)
        self.flip = np.ascontiguousarray(flip, dtype=np.uint8)
        self.outcome = np.ascontiguousarray(outcome, dtype=np.uint8)
        t = len(self.shot_index)
        if self.flip.ndim != 2 or self.outcome.shape != self.flip.shape:
            raise BackendError("flip and outcome must be matching (T, n) arrays")
        if not (len(self.batch_index) == self.flip.shape[0] == t):
            raise BackendError("record columns disagree on shot count")

    @property
    def n_qubits(self) -> int:
        return self.flip.shape[1]

    def __len__(self) -> int:
        return self.flip.shape[0]

    def adjusted_outcome(self) -> np.ndarray:
        """Outcome with the twirl flips undone: b XOR a, shape (T, n)."""
        return self.flip ^ self.outcome

    def batches(self) -> np.ndarray:
        return np.unique(self.batch_index)


class CalibrationRecords(_Records):
    def __getitem__(self, t: int) -> CalibrationShot:
        return CalibrationShot(
            int(self.shot_index[t]), int(self.batch_index[t]),
            self.flip[t].copy(), self.outcome[t].copy(),
        )

    def __iter__(self) -> Iterator[CalibrationShot]:
        return (self[t] for t in range(len(self)))

    def select(self, mask: np.ndarray) -> "CalibrationRecords":
        return CalibrationRecords(
            self.shot_index[mask], self.batch_index[mask],
            self.flip[mask], self.outcome[mask],
        )

    def for_batch(self, batch: int) -> "CalibrationRecords":
        return self.select(self.batch_index == batch)

    @classmethod
    def from_shots(cls, shots: Iterable[CalibrationShot]) -> "CalibrationRecords":
        shots = list(shots)
        if not shots:
            raise EstimationError("empty calibration record set")
        return cls(
            [s.shot_index for s in shots], [s.batch_index for s in shots],
            np.stack([s.flip_mask for s in shots]), np.stack([s.outcome for s in shots]),
        )

    @classmethod
    def concat(cls, parts: Iterable["CalibrationRecords"]) -> "CalibrationRecords":
        parts = list(parts)
        return cls(
            np.concatenate([p.shot_index for p in parts]),
            np.concatenate([p.batch_index for p in parts]),
            np.concatenate([p.flip for p in parts]),
            np.concatenate([p.outcome for p in parts]),
        )


class ShadowRecords(_Records):
    def __init__(self, shot_index, batch_index, basis, flip, outcome):
        super().__init__(shot_index, batch_index, flip, outcome)
        self.basis = np.ascontiguousarray(basis, dtype=np.int8)
        if self.basis.shape != self.flip.shape:
            raise BackendError("basis must be a (T, n) array matching flip")

    def __getitem__(self, t: int) -> ShadowShot:
        return ShadowShot(
            int(self.shot_index[t]), int(self.batch_index[t]),
            self.basis[t].copy(), self.flip[t].copy(), self.outcome[t].copy(),
        )

    def __iter__(self) -> Iterator[ShadowShot]:
        return (self[t] for t in range(len(self)))

    def select(self, mask: np.ndarray) -> "ShadowRecords":
        return ShadowRecords(
            self.shot_index[mask], self.batch_index[mask],
            self.basis[mask], self.flip[mask], self.outcome[mask],
        )

    def for_batch(self, batch: int) -> "ShadowRecords":
        return self.select(self.batch_index == batch)

    def restrict(self, qubits: tuple[int, ...]) -> "ShadowRecords":
        """Project records onto a qubit subset (column gather, same shots)."""
        cols = list(qubits)
        return ShadowRecords(
            self.shot_index, self.batch_index,
            self.basis[:, cols], self.flip[:, cols], self.outcome[:, cols],
        )

    @classmethod
    def from_shots(cls, shots: Iterable[ShadowShot]) -> "ShadowRecords":
        shots = list(shots)
        if not shots:
            raise EstimationError("empty shadow record set")
        return cls(
            [s.shot_index for s in shots], [s.batch_index for s in shots],
            np.stack([s.basis for s in shots]),
            np.stack([s.flip_mask for s in shots]), np.stack([s.outcome for s in shots]),
        )

    @classmethod
    def concat(cls, parts: Iterable["ShadowRecords"]) -> "ShadowRecords":
        parts = list(parts)
        return cls(
            np.concatenate([p.shot_index for p in parts]),
            np.concatenate([p.batch_index for p in parts]),
            np.concatenate([p.basis for p in parts]),
            np.concatenate([p.flip for p in parts]),
            np.concatenate([p.outcome for p in parts]),
        )


def as_calibration_records(shots) -> CalibrationRecords:
    if isinstance(shots, CalibrationRecords):
        return shots
    return CalibrationRecords.from_shots(shots)


def as_shadow_records(shots) -> ShadowRecords:
    if isinstance(shots, ShadowRecords):
        return shots
    return ShadowRecords.from_shots(shots)


def write_records(path: str | Path, records, meta: dict | None = None) -> None:
    """Write a record container to a line-delimited file with a schema header."""
    is_shadow = isinstance(records, ShadowRecords)
    header = {
        "schema": SHADOW_SCHEMA if is_shadow else CALIBRATION_SCHEMA,
        "n_qubits": records.n_qubits,
        "n_records": len(records),
        "meta": meta or {},
    }
    lines = [json.dumps(header, sort_keys=True)]
    for t in range(len(records)):
        fields = [f'{{"t": {records.shot_index[t]}, "batch": {records.batch_index[t]}']
        if is_shadow:
            basis = "".join(BASIS_CHARS[k] for k in records.basis[t])
            fields.append(f'"basis": "{basis}"')
        fields.append(f'"flip": "{_bits_str(records.flip[t])}"')
        fields.append(f'"outcome": "{_bits_str(records.outcome[t])}"}}')
        lines.append(", ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def read_records(path: str | Path) -> tuple[CalibrationRecords | ShadowRecords, dict]:
    """Read a record file; returns (records, header)."""
    with open(path) as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as e:
            raise BackendError(f"{path}: bad record header: {e}") from None
        schema = header.get("schema")
        if schema not in (CALIBRATION_SCHEMA, SHADOW_SCHEMA):
            raise BackendError(f"{path}: unsupported record schema {schema!r}")
        n = int(header["n_qubits"])
        ts, batches, bases, flips, outs = [], [], [], [], []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            ts.append(rec["t"])
            batches.append(rec["batch"])
            flips.append(_parse_bits(rec["flip"], n, "flip"))
            outs.append(_parse_bits(rec["outcome"], n, "outcome"))
            if schema == SHADOW_SCHEMA:
                bases.append([_BASIS_INDEX[c] for c in rec["basis"]])
    if not ts:
        raise BackendError(f"{path}: no records")
    if schema == CALIBRATION_SCHEMA:
        return CalibrationRecords(ts, batches, np.stack(flips), np.stack(outs)), header
    return (
        ShadowRecords(ts, batches, np.array(bases), np.stack(flips), np.stack(outs)),
        header,
    )
