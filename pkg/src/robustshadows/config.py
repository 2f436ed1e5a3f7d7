"""Experiment configuration: a small validated YAML schema.

A config file describes one or more experiments, each with a noise source,
a prepared state, an interleaved measurement plan, and the quantities to
estimate.  Validation errors always name the offending field path, e.g.
``experiments[1].state.kind``.

Schema (version ``experiment-config/1``)::

    schema: experiment-config/1       # optional, checked when present
    seed: 20240601                    # master seed, u64
    out_dir: out                      # created on demand
    experiments:
      - name: haar-150us              # directory name, [a-z0-9-]
        noise: {preset: pulse-150us}  # or {file: model.json} or none
        state: {kind: haar-product, n_qubits: 12, seed: 7}
        plan: {total_shots: 3000, n_batches: 5, calib_shots_per_batch: 100}
        calibration_shots: 2000       # for the standalone calibrate step
        calibration_pairs: adjacent   # or all
        estimands:
          - {kind: fidelity, qubits: each}
          - {kind: correlator, paulis: ZZ, pairs: adjacent}
          - {kind: purity, subsets: singles, estimator: same-basis}
          - {kind: purity, subsets: "pairs:adjacent", estimator: both}

State kinds: ``haar-product`` (n_qubits, seed), ``zero`` (n_qubits),
``qaoa`` (graph file or bundled default, gamma, beta), ``pce`` (problem
file or bundled default, then either theta_file or train_seed with an
optional train_steps override).  Estimand kinds: ``fidelity`` (product
states only; the target is the prepared single-qubit state),
``correlator``, ``purity``, ``pce-correlators`` (pce states only).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .noise import PRESET_SPECS, ReadoutNoiseModel, make_preset

CONFIG_SCHEMA = "experiment-config/1"

_STATE_KINDS = ("haar-product", "zero", "qaoa", "pce")
_ESTIMAND_KINDS = ("fidelity", "correlator", "purity", "pce-correlators")
_PURITY_ESTIMATORS = ("same-basis", "naive", "both")


def _require(mapping: dict, key: str, path: str):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path} must be a mapping")
    if key not in mapping:
        raise ConfigError(f"missing required field {path}.{key}")
    return mapping[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be >= {minimum}, got {value}")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    return float(value)


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


@dataclass(frozen=True)
class NoiseSpec:
    """Either a named preset, an explicit model file, or no noise."""

    preset: str | None = None
    file: str | None = None

    def resolve(self, n_qubits: int, base_dir: Path) -> ReadoutNoiseModel:
        if self.preset is not None:
            model = make_preset(self.preset)
            if n_qubits > model.n_qubits:
                raise ConfigError(
                    f"preset {self.preset} covers {model.n_qubits} qubits, "
                    f"state needs {n_qubits}"
                )
            return model.restrict(n_qubits)
        if self.file is not None:
            path = Path(self.file)
            if not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"noise model file not found: {path}")
            with open(path) as fh:
                model = ReadoutNoiseModel.from_dict(json.load(fh))
            if model.n_qubits != n_qubits:
                raise ConfigError(
                    f"noise model is {model.n_qubits}-qubit, state needs {n_qubits}"
                )
            return model
        return ReadoutNoiseModel.noiseless(n_qubits)

    @property
    def label(self) -> str:
        if self.preset is not None:
            return self.preset
        if self.file is not None:
            return Path(self.file).stem
        return "noiseless"


def _parse_noise(raw, path: str) -> NoiseSpec:
    if raw is None or raw == "none":
        return NoiseSpec()
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must be a mapping, 'none', or omitted")
    keys = set(raw)
    if keys == {"preset"}:
        name = _as_str(raw["preset"], f"{path}.preset")
        if name not in PRESET_SPECS:
            known = ", ".join(sorted(PRESET_SPECS))
            raise ConfigError(f"{path}.preset unknown preset {name!r} (known: {known})")
        return NoiseSpec(preset=name)
    if keys == {"file"}:
        return NoiseSpec(file=_as_str(raw["file"], f"{path}.file"))
    raise ConfigError(f"{path} must contain exactly one of 'preset' or 'file'")


@dataclass(frozen=True)
class StateSpec:
    kind: str
    n_qubits: int | None = None
    seed: int | None = None
    graph: str | None = None
    gamma: float | None = None
    beta: float | None = None
    problem: str | None = None
    theta_file: str | None = None
    train_seed: int | None = None
    train_steps: int = 500


def _parse_state(raw, path: str) -> StateSpec:
    kind = _as_str(_require(raw, "kind", path), f"{path}.kind")
    if kind not in _STATE_KINDS:
        raise ConfigError(f"{path}.kind must be one of {_STATE_KINDS}, got {kind!r}")
    if kind == "haar-product":
        return StateSpec(
            kind,
            n_qubits=_as_int(_require(raw, "n_qubits", path), f"{path}.n_qubits", 1),
            seed=_as_int(_require(raw, "seed", path), f"{path}.seed", 0),
        )
    if kind == "zero":
        return StateSpec(
            kind,
            n_qubits=_as_int(_require(raw, "n_qubits", path), f"{path}.n_qubits", 1),
        )
    if kind == "qaoa":
        return StateSpec(
            kind,
            graph=raw.get("graph"),
            gamma=_as_float(_require(raw, "gamma", path), f"{path}.gamma"),
            beta=_as_float(_require(raw, "beta", path), f"{path}.beta"),
        )
    theta_file = raw.get("theta_file")
    train_seed = raw.get("train_seed")
    if (theta_file is None) == (train_seed is None):
        raise ConfigError(f"{path} needs exactly one of theta_file or train_seed")
    return StateSpec(
        kind,
        problem=raw.get("problem"),
        theta_file=theta_file,
        train_seed=None if train_seed is None else _as_int(train_seed, f"{path}.train_seed", 0),
        train_steps=_as_int(raw.get("train_steps", 500), f"{path}.train_steps", 0),
    )


@dataclass(frozen=True)
class PlanSpec:
    total_shots: int
    n_batches: int = 20
    calib_shots_per_batch: int = 500


def _parse_plan(raw, path: str) -> PlanSpec:
    total = _as_int(_require(raw, "total_shots", path), f"{path}.total_shots", 1)
    n_batches = _as_int(raw.get("n_batches", 20), f"{path}.n_batches", 1)
    calib = _as_int(
        raw.get("calib_shots_per_batch", 500), f"{path}.calib_shots_per_batch", 1
    )
    if n_batches > total:
        raise ConfigError(f"{path}.n_batches exceeds {path}.total_shots")
    return PlanSpec(total, n_batches, calib)


@dataclass(frozen=True)
class EstimandSpec:
    kind: str
    qubits: str | tuple[int, ...] = "each"
    paulis: str | None = None
    pairs: str | tuple[tuple[int, int], ...] = "adjacent"
    subsets: str | tuple[tuple[int, ...], ...] = "pairs:adjacent"
    estimator: str = "same-basis"


def _parse_pairs(raw, path: str):
    if isinstance(raw, str):
        if raw not in ("adjacent", "all"):
            raise ConfigError(f"{path} must be 'adjacent', 'all', or a pair list")
        return raw
    if not isinstance(raw, list):
        raise ConfigError(f"{path} must be 'adjacent', 'all', or a pair list")
    pairs = []
    for k, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 2:
            raise ConfigError(f"{path}[{k}] must be a two-element list")
        pairs.append((_as_int(item[0], f"{path}[{k}][0]", 0), _as_int(item[1], f"{path}[{k}][1]", 0)))
    return tuple(pairs)


def _parse_estimand(raw, path: str) -> EstimandSpec:
    kind = _as_str(_require(raw, "kind", path), f"{path}.kind")
    if kind not in _ESTIMAND_KINDS:
        raise ConfigError(f"{path}.kind must be one of {_ESTIMAND_KINDS}, got {kind!r}")
    if kind == "fidelity":
        qubits = raw.get("qubits", "each")
        if isinstance(qubits, list):
            qubits = tuple(_as_int(q, f"{path}.qubits[{k}]", 0) for k, q in enumerate(qubits))
        elif qubits != "each":
            raise ConfigError(f"{path}.qubits must be 'each' or a list of qubits")
        return EstimandSpec(kind, qubits=qubits)
    if kind == "correlator":
        paulis = _as_str(_require(raw, "paulis", path), f"{path}.paulis")
        if len(paulis) != 2 or any(c not in "XYZ" for c in paulis):
            raise ConfigError(f"{path}.paulis must be two of XYZ, got {paulis!r}")
        return EstimandSpec(kind, paulis=paulis, pairs=_parse_pairs(raw.get("pairs", "adjacent"), f"{path}.pairs"))
    if kind == "purity":
        estimator = raw.get("estimator", "same-basis")
        if estimator not in _PURITY_ESTIMATORS:
            raise ConfigError(
                f"{path}.estimator must be one of {_PURITY_ESTIMATORS}, got {estimator!r}"
            )
        subsets = raw.get("subsets", "pairs:adjacent")
        if isinstance(subsets, str):
            if subsets not in ("singles", "pairs:adjacent", "pairs:all"):
                raise ConfigError(
                    f"{path}.subsets must be 'singles', 'pairs:adjacent', 'pairs:all', "
                    "or a list of qubit lists"
                )
        elif isinstance(subsets, list):
            parsed = []
            for k, sub in enumerate(subsets):
                if not isinstance(sub, list) or not sub:
                    raise ConfigError(f"{path}.subsets[{k}] must be a non-empty list")
                parsed.append(tuple(_as_int(q, f"{path}.subsets[{k}][{i}]", 0) for i, q in enumerate(sub)))
            subsets = tuple(parsed)
        else:
            raise ConfigError(f"{path}.subsets has unsupported type")
        return EstimandSpec(kind, subsets=subsets, estimator=estimator)
    return EstimandSpec(kind)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    noise: NoiseSpec
    state: StateSpec
    plan: PlanSpec
    calibration_shots: int = 31200
    calibration_pairs: str = "adjacent"
    estimands: tuple[EstimandSpec, ...] = ()


def _parse_experiment(raw, path: str) -> ExperimentSpec:
    name = _as_str(_require(raw, "name", path), f"{path}.name")
    if not name or any(c not in "abcdefghijklmnopqrstuvwxyz0123456789-_" for c in name):
        raise ConfigError(f"{path}.name must use lowercase letters, digits, - or _")
    estim_raw = raw.get("estimands", [])
    if not isinstance(estim_raw, list):
        raise ConfigError(f"{path}.estimands must be a list")
    pairs_mode = raw.get("calibration_pairs", "adjacent")
    if pairs_mode not in ("adjacent", "all"):
        raise ConfigError(f"{path}.calibration_pairs must be 'adjacent' or 'all'")
    return ExperimentSpec(
        name=name,
        noise=_parse_noise(raw.get("noise"), f"{path}.noise"),
        state=_parse_state(_require(raw, "state", path), f"{path}.state"),
        plan=_parse_plan(_require(raw, "plan", path), f"{path}.plan"),
        calibration_shots=_as_int(
            raw.get("calibration_shots", 31200), f"{path}.calibration_shots", 1
        ),
        calibration_pairs=pairs_mode,
        estimands=tuple(
            _parse_estimand(e, f"{path}.estimands[{k}]") for k, e in enumerate(estim_raw)
        ),
    )


@dataclass(frozen=True)
class Config:
    seed: int
    out_dir: str
    experiments: tuple[ExperimentSpec, ...]
    base_dir: Path = field(default_factory=Path)

    def experiment(self, name: str) -> ExperimentSpec:
        for exp in self.experiments:
            if exp.name == name:
                return exp
        raise ConfigError(f"no experiment named {name!r} in config")


def parse_config(data: dict, base_dir: Path | None = None) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    schema = data.get("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"unsupported config schema {schema!r}, expected {CONFIG_SCHEMA!r}")
    seed = _as_int(data.get("seed", 20240601), "seed", 0)
    out_dir = _as_str(data.get("out_dir", "out"), "out_dir")
    raw_exps = _require(data, "experiments", "config")
    if not isinstance(raw_exps, list) or not raw_exps:
        raise ConfigError("experiments must be a non-empty list")
    experiments = tuple(
        _parse_experiment(e, f"experiments[{k}]") for k, e in enumerate(raw_exps)
    )
    names = [e.name for e in experiments]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    return Config(seed, out_dir, experiments, base_dir or Path.cwd())


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    return parse_config(data, base_dir=path.parent.resolve())
