"""Classical readout-noise models.

A model assigns each qubit asymmetric misread rates ``p01`` (true 0 read as 1)
and ``p10`` (true 1 read as 0), optionally correlated pair flips, and
optionally a drift schedule that rescales every rate as a piecewise-linear
function of the global shot index.  Noise acts on classical outcome bits
only; it commutes with nothing and needs no quantum representation beyond the
stochastic matrix built by :func:`exact_channel_matrix`.

Pair flips model readout crosstalk: after the independent per-qubit flips,
each configured pair (i, j) flips both of its bits jointly with probability
``p_both``.  Pairs are applied in their listed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BackendError, ConfigError
from .rng import RandomStream

_PRESET_SEED = 715037  # arbitrary but frozen: preset models must never change

# name -> (low, high, mean) of per-qubit symmetric flip rates
PRESET_SPECS = {
    "pulse-1500us": (0.0015, 0.0027, 0.0022),
    "pulse-300us": (0.0093, 0.0195, 0.0128),
    "pulse-150us": (0.0080, 0.0570, 0.0206),
}
PRESET_N_QUBITS = 12


@dataclass(frozen=True)
class DriftSchedule:
    """Piecewise-linear multiplicative drift of all rates over shot index.

    ``knots`` maps shot indices to factors; lookups interpolate linearly and
    clamp to the end factors outside the knot range.
    """

    knots: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if len(self.knots) < 1:
            raise ConfigError("drift schedule needs at least one knot")
        shots = [s for s, _ in self.knots]
        if sorted(shots) != shots or len(set(shots)) != len(shots):
            raise ConfigError("drift knots must have strictly increasing shot indices")
        if any(f <= 0 for _, f in self.knots):
            raise ConfigError("drift factors must be positive")
        object.__setattr__(
            self, "knots", tuple((int(s), float(f)) for s, f in self.knots)
        )

    def factor(self, shot_index: int | np.ndarray) -> np.ndarray:
        xs = np.array([s for s, _ in self.knots], dtype=float)
        ys = np.array([f for _, f in self.knots], dtype=float)
        return np.interp(np.asarray(shot_index, dtype=float), xs, ys)

    def max_factor(self) -> float:
        return max(f for _, f in self.knots)


@dataclass(frozen=True)
class ReadoutNoiseModel:
    p01: np.ndarray
    p10: np.ndarray
    pairwise: tuple[tuple[int, int, float], ...] = ()
    drift: DriftSchedule | None = None

    def __post_init__(self) -> None:
        p01 = np.asarray(self.p01, dtype=float)
        p10 = np.asarray(self.p10, dtype=float)
        if p01.ndim != 1 or p01.shape != p10.shape:
            raise ConfigError("p01 and p10 must be equal-length 1-d arrays")
        n = p01.size
        pairs = []
        for i, j, q in self.pairwise:
            i, j, q = int(i), int(j), float(q)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ConfigError(f"invalid crosstalk pair ({i}, {j}) for width {n}")
            pairs.append((i, j, q))
        peak = self.drift.max_factor() if self.drift is not None else 1.0
        # Every drift-scaled rate must stay a probability, and the union bound
        # over all flip events touching a qubit must stay <= 1 per shot.
        for name, rates in (("p01", p01), ("p10", p10)):
            if np.any(rates < 0) or np.any(rates * peak > 1):
                raise ConfigError(f"{name} rates must stay within [0, 1] under drift")
        if any(q < 0 or q * peak > 1 for _, _, q in pairs):
            raise ConfigError("pairwise rates must stay within [0, 1] under drift")
        for k in range(n):
            total = max(p01[k], p10[k]) + sum(q for i, j, q in pairs if k in (i, j))
            if total * peak > 1:
                raise ConfigError(
                    f"total flip probability on qubit {k} exceeds 1 under drift"
                )
        object.__setattr__(self, "p01", _frozen(p01))
        object.__setattr__(self, "p10", _frozen(p10))
        object.__setattr__(self, "pairwise", tuple(pairs))

    @property
    def n_qubits(self) -> int:
        return self.p01.size

    @classmethod
    def noiseless(cls, n_qubits: int) -> "ReadoutNoiseModel":
        return cls(np.zeros(n_qubits), np.zeros(n_qubits))

    @classmethod
    def symmetric(
        cls,
        rates: np.ndarray | list[float] | float,
        n_qubits: int | None = None,
        **kwargs,
    ) -> "ReadoutNoiseModel":
        """p01 = p10 = rates (scalar rates are broadcast over ``n_qubits``)."""
        r = np.asarray(rates, dtype=float)
        if r.ndim == 0:
            if n_qubits is None:
                raise ConfigError("scalar rate needs an explicit n_qubits")
            r = np.full(n_qubits, float(r))
        return cls(r, r.copy(), **kwargs)

    def restrict(self, n_qubits: int) -> "ReadoutNoiseModel":
        """Model for the first ``n_qubits`` qubits (pairs fully inside survive)."""
        if n_qubits > self.n_qubits:
            raise ConfigError(
                f"cannot restrict width-{self.n_qubits} model to {n_qubits} qubits"
            )
        pairs = tuple((i, j, q) for i, j, q in self.pairwise if i < n_qubits and j < n_qubits)
        return ReadoutNoiseModel(
            self.p01[:n_qubits], self.p10[:n_qubits], pairs, self.drift
        )

    def drift_factor(self, shot_index: int | np.ndarray) -> np.ndarray:
        if self.drift is None:
            return np.ones_like(np.asarray(shot_index, dtype=float))
        return self.drift.factor(shot_index)

    def to_dict(self) -> dict:
        out: dict = {"p01": self.p01.tolist(), "p10": self.p10.tolist()}
        if self.pairwise:
            out["pairwise"] = [[i, j, q] for i, j, q in self.pairwise]
        if self.drift is not None:
            out["drift"] = [[s, f] for s, f in self.drift.knots]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutNoiseModel":
        try:
            drift = DriftSchedule(tuple((s, f) for s, f in d["drift"])) if "drift" in d else None
            pairs = tuple((i, j, q) for i, j, q in d.get("pairwise", []))
            return cls(np.asarray(d["p01"], float), np.asarray(d["p10"], float), pairs, drift)
        except KeyError as e:
            raise ConfigError(f"noise model dict missing field {e}") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def apply_readout_noise_batch(
    bits: np.ndarray,
    model: ReadoutNoiseModel | None,
    shot_indices: np.ndarray,
    gen: np.random.Generator,
) -> np.ndarray:
    """Push (S, n) true bits through the noisy readout, one row per shot.

    Draw order is fixed (per-qubit flips first, then pairs in listed order),
    so results are reproducible for a given generator state.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if model is None:
        return bits.copy()
    if bits.ndim != 2 or bits.shape[1] != model.n_qubits:
        raise BackendError(
            f"expected (S, {model.n_qubits}) bit array, got {bits.shape}"
        )
    fac = model.drift_factor(np.asarray(shot_indices))[:, None]
    p_eff = np.where(bits == 0, model.p01[None, :], model.p10[None, :]) * fac
    out = bits ^ (gen.random(bits.shape) < p_eff).astype(np.uint8)
    for i, j, q in model.pairwise:
        joint = (gen.random(bits.shape[0]) < q * fac[:, 0]).astype(np.uint8)
        out[:, i] ^= joint
        out[:, j] ^= joint
    return out


def apply_readout_noise(
    bits: np.ndarray,
    model: ReadoutNoiseModel | None,
    shot_index: int,
    gen: np.random.Generator,
) -> np.ndarray:
    """Single-shot convenience wrapper around the batch form."""
    return apply_readout_noise_batch(
        np.asarray(bits, dtype=np.uint8)[None, :], model, np.array([shot_index]), gen
    )[0]


def exact_channel_matrix(
    model: ReadoutNoiseModel | None, n_qubits: int, drift_factor: float = 1.0
) -> np.ndarray:
    """Row-stochastic matrix P[true index, read index] of the readout channel.

    Exact by construction; used by the channel oracle and the enumeration
    tests.  Memory is 4**n, so widths are capped well below the simulator cap.
    """
    if n_qubits > 10:
        raise BackendError("exact channel matrix limited to 10 qubits")
    dim = 2**n_qubits
    if model is None:
        return np.eye(dim)
    if model.n_qubits != n_qubits:
        raise BackendError(
            f"model width {model.n_qubits} does not match requested width {n_qubits}"
        )
    mat = np.ones((1, 1))
    for k in range(n_qubits):
        a = model.p01[k] * drift_factor
        b = model.p10[k] * drift_factor
        mat = np.kron(mat, np.array([[1 - a, a], [b, 1 - b]]))
    for i, j, q in model.pairwise:
        qd = q * drift_factor
        mask = (1 << (n_qubits - 1 - i)) | (1 << (n_qubits - 1 - j))
        pair = np.zeros((dim, dim))
        idx = np.arange(dim)
        pair[idx, idx] = 1 - qd
        pair[idx, idx ^ mask] += qd
        mat = mat @ pair
    return mat


def make_preset(name: str) -> ReadoutNoiseModel:
    """Frozen 12-qubit symmetric model for a named acquisition-pulse length.

    Per-qubit rates are drawn once from a fixed stream, uniformly over the
    published range for that pulse; the draw is then shrunk around the
    published mean (never widened) so the sample mean is exact while every
    rate stays inside the range.
    """
    if name not in PRESET_SPECS:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESET_SPECS))}"
        )
    lo, hi, mean = PRESET_SPECS[name]
    gen = RandomStream(_PRESET_SEED).split("preset", name).generator()
    r = lo + (hi - lo) * gen.random(PRESET_N_QUBITS)
    m = r.mean()
    scale = 1.0
    for x in r:
        if x > m:
            scale = min(scale, (hi - mean) / (x - m))
        elif x < m:
            scale = min(scale, (mean - lo) / (m - x))
    rates = mean + scale * (r - m)
    return ReadoutNoiseModel.symmetric(rates)
