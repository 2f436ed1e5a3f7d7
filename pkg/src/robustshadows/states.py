"""Preparation circuits for the three bundled test cases.

Three states exercise the protocol at increasing depth: a local-Haar product
state (single-qubit fidelity targets), one cost-plus-mixer layer of a
weighted MaxCut circuit (entangled pair marginals), and a trained brickwork
circuit whose two-local Pauli correlators carry the signs of a 27-variable
binary optimization problem.  Graph weights ship as editable data files;
the bundled ones are placeholder great-circle distances between the listed
cities, normalized so the largest weight is 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from importlib import resources

from .core import (
    MAX_QUBITS,
    Gate,
    PAULI,
    ProductState,
    StateVector,
    apply_gate,
    haar_random_single_qubit,
    index_to_bits,
)
from .errors import BackendError, ConfigError, EstimationError
from .rng import RandomStream


def _bundled(name: str) -> dict:
    text = resources.files("robustshadows").joinpath("data", name).read_text()
    return json.loads(text)


# --- weighted graphs ---


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge weights, rescaled to max 1."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        vertices = tuple(str(v) for v in self.vertices)
        if len(set(vertices)) != len(vertices):
            raise ConfigError("graph vertex labels must be distinct")
        n = len(vertices)
        seen = set()
        cleaned = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ConfigError(f"graph has a self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"edge ({i}, {j}) references a missing vertex")
            if w <= 0:
                raise ConfigError(f"edge ({i}, {j}) has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ConfigError(f"duplicate edge {key}")
            seen.add(key)
            cleaned.append((key[0], key[1], w))
        if not cleaned:
            raise ConfigError("graph has no edges")
        wmax = max(w for _, _, w in cleaned)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(
            self, "edges", tuple((i, j, w / wmax) for i, j, w in cleaned)
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        try:
            return cls(tuple(data["vertices"]), tuple(map(tuple, data["edges"])))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed graph definition: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "WeightedGraph":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def index(self, label: str) -> int:
        try:
            return self.vertices.index(label)
        except ValueError:
            raise ConfigError(f"unknown vertex label {label!r}") from None


def austria_graph() -> WeightedGraph:
    """The bundled nine-city example graph."""
    return WeightedGraph.from_dict(_bundled("austria_graph.json"))


def maxcut_value(graph: WeightedGraph, assignment: dict[str, int]) -> float:
    """Cut weight sum(w * (1 - x_u x_v) / 2) for x in {-1, +1}."""
    total = 0.0
    for i, j, w in graph.edges:
        xu = assignment[graph.vertices[i]]
        xv = assignment[graph.vertices[j]]
        total += w * (1.0 - xu * xv) / 2.0
    return total


# --- local-Haar product states ---


def haar_product_state(
    n_qubits: int, seed: int | RandomStream
) -> tuple[ProductState, tuple[Gate, ...]]:
    """Independent Haar single-qubit unitaries applied to |0...0>.

    Returns the product state together with the per-qubit gates; the gate
    columns V|0> double as fidelity targets.  Convert with
    ``state.to_statevector()`` when a dense vector is needed.
    """
    stream = seed if isinstance(seed, RandomStream) else RandomStream(int(seed))
    gen = stream.split("haar").generator()
    gates = tuple(haar_random_single_qubit(gen, q) for q in range(n_qubits))
    factors = tuple(g.matrix[:, 0] for g in gates)
    return ProductState(factors), gates


# --- one QAOA layer ---


def qaoa_layer_state(graph: WeightedGraph, gamma: float, beta: float) -> StateVector:
    """One weighted cost layer and one mixer layer on the uniform start.

    |psi> = prod_l exp(-i beta X_l) . prod_(i,j) exp(-i gamma w_ij Z_i Z_j)
            . H^n |0...0>.
    The cost layer is diagonal, so it is applied as a single phase vector.
    """
    n = graph.n_vertices
    if n > MAX_QUBITS:
        raise BackendError(f"graph with {n} vertices exceeds {MAX_QUBITS} qubits")
    dim = 2**n
    signs = 1.0 - 2.0 * index_to_bits(np.arange(dim), n)
    angle = np.zeros(dim)
    for i, j, w in graph.edges:
        angle += gamma * w * signs[:, i] * signs[:, j]
    state = StateVector(n, np.exp(-1j * angle) / np.sqrt(dim))
    c, s = np.cos(beta), np.sin(beta)
    mixer = np.array([[c, -1j * s], [-1j * s, c]])
    for q in range(n):
        state = apply_gate(state, Gate.single(mixer, q))
    return state


# --- Pauli-correlation encoding ---


@dataclass(frozen=True)
class PceVariable:
    label: str
    qubits: tuple[int, int]
    axis: str

    def __post_init__(self) -> None:
        i, j = (int(q) for q in self.qubits)
        if i == j:
            raise ConfigError(f"variable {self.label!r} repeats qubit {i}")
        if self.axis not in ("X", "Y", "Z"):
            raise ConfigError(f"variable {self.label!r} has axis {self.axis!r}")
        object.__setattr__(self, "qubits", (min(i, j), max(i, j)))

    def pauli_string(self, n_qubits: int) -> str:
        chars = ["I"] * n_qubits
        chars[self.qubits[0]] = self.axis
        chars[self.qubits[1]] = self.axis
        return "".join(chars)


@dataclass(frozen=True)
class PceProblem:
    """A weighted MaxCut instance encoded in two-local Pauli correlators.

    Each problem variable owns one (qubit pair, axis) slot; its value is
    read off as the sign of <A_i A_j> in the trained state.
    """

    n_qubits: int
    alpha: float
    layers: int
    variables: tuple[PceVariable, ...]
    graph: WeightedGraph
    k: int = 2

    def __post_init__(self) -> None:
        n = int(self.n_qubits)
        if not 2 <= n <= MAX_QUBITS:
            raise ConfigError(f"unsupported qubit count {n}")
        if self.k != 2:
            raise ConfigError("only two-local variable slots are supported")
        slots = set()
        for v in self.variables:
            if max(v.qubits) >= n:
                raise ConfigError(f"variable {v.label!r} uses qubit outside register")
            slot = (v.qubits, v.axis)
            if slot in slots:
                raise ConfigError(f"slot {slot} assigned twice")
            slots.add(slot)
        capacity = 3 * n * (n - 1) // 2
        if len(self.variables) > capacity:
            raise ConfigError(
                f"{len(self.variables)} variables exceed the {capacity} available slots"
            )
        if sorted(v.label for v in self.variables) != sorted(self.graph.vertices):
            raise ConfigError("variable labels must match graph vertices exactly")

    @property
    def n_params(self) -> int:
        return self.layers * self.n_qubits

    @classmethod
    def from_dict(cls, data: dict) -> "PceProblem":
        try:
            variables = tuple(
                PceVariable(str(v["label"]), tuple(v["qubits"]), str(v["axis"]))
                for v in data["variables"]
            )
            return cls(
                int(data["n_qubits"]),
                float(data["alpha"]),
                int(data["layers"]),
                variables,
                WeightedGraph.from_dict(data["graph"]),
                int(data.get("k", 2)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed problem definition: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "PceProblem":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def eu_pce_problem() -> PceProblem:
    """The bundled 27-variable, five-qubit example problem."""
    return PceProblem.from_dict(_bundled("eu_pce_problem.json"))


_AXIS_CYCLE = "XYZ"
_ENTANGLER_ANGLE = np.pi / 4


def _layer_pairs(layer: int, n: int) -> tuple[tuple[int, int], ...]:
    start = 0 if layer % 2 == 0 else 1
    return tuple((q, q + 1) for q in range(start, n - 1, 2))


def pce_state(theta: np.ndarray, problem: PceProblem) -> StateVector:
    """Brickwork circuit: per-layer single-qubit rotations, then entanglers.

    Layer l rotates every qubit by exp(-i theta[l, q] A / 2) with A cycling
    X, Y, Z over layers, then applies exp(-i pi/4 Z Z) on the layer's
    alternating nearest-neighbour pairs.
    """
    theta = np.asarray(theta, dtype=float)
    n, L = problem.n_qubits, problem.layers
    if theta.shape != (L * n,):
        raise ConfigError(f"expected {L * n} parameters, got shape {theta.shape}")
    angles = theta.reshape(L, n)
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    zz = np.exp(-1j * _ENTANGLER_ANGLE * np.array([[1.0, -1.0], [-1.0, 1.0]]))
    for layer in range(L):
        axis = PAULI[_AXIS_CYCLE[layer % 3]]
        for q in range(n):
            half = angles[layer, q] / 2.0
            rot = np.cos(half) * np.eye(2) - 1j * np.sin(half) * axis
            psi = np.moveaxis(np.tensordot(rot, psi, axes=([1], [q])), 0, q)
        for i, j in _layer_pairs(layer, n):
            shape = [2 if k in (i, j) else 1 for k in range(n)]
            psi = psi * zz.reshape(shape)
    return StateVector(n, psi.reshape(-1))


@lru_cache(maxsize=256)
def _pauli_action(n: int, i: int, j: int, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """(permutation, phase) arrays with A_i A_j |b> = phase[b] |perm[b]>."""
    dim = 2**n
    idx = np.arange(dim)
    bits = index_to_bits(idx, n)
    perm = idx.copy()
    phase = np.ones(dim, dtype=complex)
    for q in (i, j):
        b = bits[:, q]
        if axis == "Z":
            phase = phase * (1.0 - 2.0 * b)
        else:
            perm = perm ^ (1 << (n - 1 - q))
            if axis == "Y":
                phase = phase * 1j * (1.0 - 2.0 * b)
    perm.flags.writeable = False
    phase.flags.writeable = False
    return perm, phase


def pce_correlators(state: StateVector, problem: PceProblem) -> dict[str, float]:
    """Exact <A_i A_j> for every mapped variable."""
    amps = state.amplitudes
    out = {}
    for v in problem.variables:
        perm, phase = _pauli_action(problem.n_qubits, *v.qubits, v.axis)
        out[v.label] = float(np.real(np.sum(amps[perm].conj() * phase * amps)))
    return out


def pce_soft_value(correlators: dict[str, float], problem: PceProblem) -> float:
    """Relaxed cut value with z = tanh(alpha * <P>) in place of signs."""
    z = {v.label: np.tanh(problem.alpha * correlators[v.label]) for v in problem.variables}
    graph = problem.graph
    total = 0.0
    for i, j, w in graph.edges:
        total += w * (1.0 - z[graph.vertices[i]] * z[graph.vertices[j]]) / 2.0
    return total


def pce_soft_objective(theta: np.ndarray, problem: PceProblem) -> float:
    return pce_soft_value(pce_correlators(pce_state(theta, problem), problem), problem)


def pce_decode(correlators: dict[str, float], problem: PceProblem | None = None) -> dict[str, int]:
    """Read variables off as correlator signs; an exact zero counts as +1."""
    if problem is not None:
        missing = [v.label for v in problem.variables if v.label not in correlators]
        if missing:
            raise EstimationError(f"correlators missing for {missing}")
    return {label: (1 if value >= 0 else -1) for label, value in correlators.items()}


class TrainResult(NamedTuple):
    theta: np.ndarray
    trace: np.ndarray  # objective before step 1, after each step


def train_pce(
    problem: PceProblem,
    seed: int | RandomStream,
    n_steps: int = 500,
    learning_rate: float = 0.02,
) -> TrainResult:
    """Maximize the soft cut value with Adam and finite-difference gradients.

    Central differences with step 1e-4 on the exact simulator; Adam moments
    use the usual (0.9, 0.999) decay and 1e-8 regularizer.  The trace has
    ``n_steps + 1`` entries.
    """
    stream = seed if isinstance(seed, RandomStream) else RandomStream(int(seed))
    gen = stream.split("pce-init").generator()
    theta = gen.uniform(-np.pi, np.pi, size=problem.n_params)
    h = 1e-4
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace = np.empty(n_steps + 1)
    trace[0] = pce_soft_objective(theta, problem)
    for step in range(1, n_steps + 1):
        grad = np.empty_like(theta)
        for k in range(theta.size):
            bump = np.zeros_like(theta)
            bump[k] = h
            grad[k] = (
                pce_soft_objective(theta + bump, problem)
                - pce_soft_objective(theta - bump, problem)
            ) / (2.0 * h)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad**2
        m_hat = m / (1.0 - beta1**step)
        v_hat = v / (1.0 - beta2**step)
        theta = theta + learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        trace[step] = pce_soft_objective(theta, problem)
    return TrainResult(theta, trace)
