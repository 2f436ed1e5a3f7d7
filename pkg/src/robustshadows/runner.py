"""Pipeline steps behind the command line.

Each experiment owns one directory under the config's ``out_dir``:

    <out_dir>/<experiment>/
        run.json                      metadata (seeds, noise model, state)
        calibration_standalone.jsonl  records from `calibrate`
        calibration_report.json       per-qubit rates and crosstalk screen
        plan.json                     interleaved phase layout
        calibration.jsonl             all interleaved calibration phases
        shadow.jsonl                  randomized-measurement records
        estimates.csv / estimates.txt per-estimand results
    <out_dir>/figures/panel_*.csv     bundles for the plotting component

Nothing written here contains a timestamp, so a rerun with the same config
and seed reproduces every file byte for byte.

CSV schemas (first line is always ``# schema: <name>``):

estimates/1
    experiment, preset, kind, label, qubits, estimator, exact, robust,
    robust_stderr, robust_ci_low, robust_ci_high, nonrobust,
    nonrobust_stderr, nonrobust_ci_low, nonrobust_ci_high, delta_r,
    delta_nr, delta_diff, theory_bias
    (qubit tuples are dash-joined, e.g. "0-1"; empty cells are unknown)

panel-a/1   preset, qubit, p_flip_true, p_flip, ci_low, ci_high
panel-b/1   preset, pair, estimator, exact, robust, robust_ci_low,
            robust_ci_high, nonrobust, nonrobust_ci_low, nonrobust_ci_high
panel-c/1   preset, label, pauli, qubits, exact, robust, robust_ci_low,
            robust_ci_high, nonrobust, nonrobust_ci_low, nonrobust_ci_high,
            sign_exact, sign_robust
panel-dq/1  panel, quantity, preset, method, label, delta
            (method is NR or R; one file per panel d, e, f, g)

Panel membership: panel a takes, for each preset, the calibration report of
the widest register using it; panels d to g collect absolute errors from
product benchmark states (d fidelities, e two-qubit correlators, f
single-qubit purities, g two-qubit purities); panels b and c come from the
entangled test states.  Estimate CIs are normal approximations from 20
parametric bootstrap resamples of the shadow records; the robust point
estimates apply each batch's bracketing calibration mix, while the
bootstrap re-evaluates at the pooled mix (calibration-shot noise is not
propagated).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .calibration import (
    CalibrationEstimate,
    crosstalk_statistic,
    default_pairs,
    estimate_f,
    run_calibration,
)
from .config import Config, ExperimentSpec, NoiseSpec, StateSpec
from .core import ProductState, StateVector, exact_expectation, purity, reduced_density
from .device import SimulatedDevice
from .errors import ConfigError, EstimationError
from .noise import ReadoutNoiseModel
from .oracle import bias_fidelity_1q, bias_pauli_2q, bias_purity_1q, bias_purity_2q
from .records import CalibrationRecords, ShadowRecords, read_records, write_records
from .rng import RandomStream
from .shadows import (
    LocalObservable,
    estimate_observable,
    estimate_purity_naive,
    estimate_purity_same_basis,
    run_shadow_acquisition,
)
from .states import (
    PceProblem,
    WeightedGraph,
    austria_graph,
    eu_pce_problem,
    haar_product_state,
    pce_correlators,
    pce_decode,
    pce_state,
    qaoa_layer_state,
    train_pce,
)
from .stats import (
    CalibrationFrequencyModel,
    ShadowFrequencyModel,
    _resample_nonparametric,
    batched_estimates,
    make_plan,
)

Z95 = NormalDist().inv_cdf(0.975)
N_RESAMPLES = 20

ESTIMATES_SCHEMA = "estimates/1"
PANEL_A_SCHEMA = "panel-a/1"
PANEL_B_SCHEMA = "panel-b/1"
PANEL_C_SCHEMA = "panel-c/1"
PANEL_DQ_SCHEMA = "panel-dq/1"

ESTIMATES_COLUMNS = [
    "experiment", "preset", "kind", "label", "qubits", "estimator", "exact",
    "robust", "robust_stderr", "robust_ci_low", "robust_ci_high",
    "nonrobust", "nonrobust_stderr", "nonrobust_ci_low", "nonrobust_ci_high",
    "delta_r", "delta_nr", "delta_diff", "theory_bias",
]


# --- small IO helpers ---


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _write_csv(path: Path, schema: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _update_run_meta(exp_dir: Path, section: dict) -> None:
    meta_path = exp_dir / "run.json"
    meta = {"schema": "run-meta/1"}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    meta.update(section)
    _write_json(meta_path, meta)


def _qubits_str(qubits) -> str:
    return "-".join(str(q) for q in qubits)


# --- state preparation ---


@dataclass
class PreparedState:
    spec: StateSpec
    prep: ProductState | StateVector
    dense: StateVector
    targets: tuple[np.ndarray, ...] | None = None
    graph: WeightedGraph | None = None
    problem: PceProblem | None = None
    theta: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.prep.n_qubits


def _resolve_path(name: str | None, base_dir: Path) -> Path | None:
    if name is None:
        return None
    path = Path(name)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"referenced file not found: {path}")
    return path


def state_width(spec: StateSpec, base_dir: Path) -> int:
    """Register width without preparing the state (pce training is slow)."""
    if spec.kind in ("haar-product", "zero"):
        return int(spec.n_qubits)
    if spec.kind == "qaoa":
        graph_path = _resolve_path(spec.graph, base_dir)
        graph = austria_graph() if graph_path is None else WeightedGraph.from_file(graph_path)
        return graph.n_vertices
    problem_path = _resolve_path(spec.problem, base_dir)
    problem = eu_pce_problem() if problem_path is None else PceProblem.from_file(problem_path)
    return problem.n_qubits


def prepare_state(
    spec: StateSpec, base_dir: Path, theta_override: np.ndarray | None = None
) -> PreparedState:
    """Build the configured state; deterministic given the spec.

    ``theta_override`` short-circuits pce training when the trained vector
    is already on disk (the acquire step records it in run.json).
    """
    if spec.kind == "haar-product":
        prep, gates = haar_product_state(spec.n_qubits, spec.seed)
        return PreparedState(
            spec, prep, prep.to_statevector(), targets=prep.factors,
            meta={"kind": spec.kind, "n_qubits": spec.n_qubits, "state_seed": spec.seed},
        )
    if spec.kind == "zero":
        prep = ProductState(tuple(np.array([1.0, 0.0j]) for _ in range(spec.n_qubits)))
        return PreparedState(
            spec, prep, prep.to_statevector(), targets=prep.factors,
            meta={"kind": spec.kind, "n_qubits": spec.n_qubits},
        )
    if spec.kind == "qaoa":
        graph_path = _resolve_path(spec.graph, base_dir)
        graph = austria_graph() if graph_path is None else WeightedGraph.from_file(graph_path)
        dense = qaoa_layer_state(graph, spec.gamma, spec.beta)
        meta = {
            "kind": spec.kind, "n_qubits": graph.n_vertices,
            "graph": "bundled" if graph_path is None else str(graph_path),
            "gamma": spec.gamma, "beta": spec.beta,
        }
        meta["graph_vertices"] = list(graph.vertices)
        return PreparedState(spec, dense, dense, graph=graph, meta=meta)
    problem_path = _resolve_path(spec.problem, base_dir)
    problem = eu_pce_problem() if problem_path is None else PceProblem.from_file(problem_path)
    if theta_override is not None:
        theta = np.asarray(theta_override, dtype=float)
    elif spec.theta_file is not None:
        with open(_resolve_path(spec.theta_file, base_dir)) as fh:
            theta = np.asarray(json.load(fh), dtype=float)
    else:
        theta = train_pce(problem, spec.train_seed, n_steps=spec.train_steps).theta
    dense = pce_state(theta, problem)
    meta = {
        "kind": spec.kind, "n_qubits": problem.n_qubits,
        "problem": "bundled" if problem_path is None else str(problem_path),
        "theta": [float(t) for t in theta],
    }
    return PreparedState(spec, dense, dense, problem=problem, theta=theta, meta=meta)


# --- estimand expansion ---


@dataclass
class Estimand:
    kind: str          # fidelity | correlator | purity | pce-correlator
    label: str
    qubits: tuple[int, ...]
    estimator: str     # linear | same-basis | naive
    exact: float
    theory_bias: float
    observable: LocalObservable | None = None  # linear estimands only


def _adjacent(n: int) -> list[tuple[int, int]]:
    return [(q, q + 1) for q in range(n - 1)]


def _all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _true_f(noise: ReadoutNoiseModel, mean_drift: float) -> np.ndarray:
    rates = noise.p01 + noise.p10
    return (1.0 - rates * mean_drift) / 3.0


def expand_estimands(
    exp: ExperimentSpec,
    prepared: PreparedState,
    noise: ReadoutNoiseModel,
    mean_drift: float,
) -> list[Estimand]:
    """Concrete estimands with exact values and closed-form noise biases."""
    n = prepared.n_qubits
    dense = prepared.dense
    f_true = _true_f(noise, mean_drift)
    out: list[Estimand] = []
    for k, spec in enumerate(exp.estimands):
        where = f"experiments[].estimands[{k}]"
        if spec.kind == "fidelity":
            if prepared.targets is None:
                raise ConfigError(f"{where}: fidelity needs a product state")
            qubits = range(n) if spec.qubits == "each" else spec.qubits
            for q in qubits:
                if not 0 <= q < n:
                    raise ConfigError(f"{where}: qubit {q} outside register")
                target = prepared.targets[q]
                rho_q = reduced_density(dense, (q,)).matrix
                overlap = float(np.real(target.conj() @ rho_q @ target))
                out.append(Estimand(
                    "fidelity", f"q{q}", (q,), "linear", overlap,
                    bias_fidelity_1q(float(f_true[q]), overlap),
                    LocalObservable.projector(target, q),
                ))
        elif spec.kind == "correlator":
            pairs = (
                _adjacent(n) if spec.pairs == "adjacent"
                else _all_pairs(n) if spec.pairs == "all"
                else spec.pairs
            )
            for i, j in pairs:
                if not (0 <= i < n and 0 <= j < n) or i == j:
                    raise ConfigError(f"{where}: invalid pair ({i}, {j})")
                chars = ["I"] * n
                chars[i], chars[j] = spec.paulis[0], spec.paulis[1]
                exact = exact_expectation(dense, "".join(chars))
                out.append(Estimand(
                    "correlator", f"{spec.paulis}@{i}-{j}", (i, j), "linear", exact,
                    bias_pauli_2q(float(f_true[i]), float(f_true[j]), exact),
                    LocalObservable.pauli(spec.paulis, (i, j)),
                ))
        elif spec.kind == "purity":
            if spec.subsets == "singles":
                subsets = [(q,) for q in range(n)]
            elif spec.subsets == "pairs:adjacent":
                subsets = _adjacent(n)
            elif spec.subsets == "pairs:all":
                subsets = _all_pairs(n)
            else:
                subsets = list(spec.subsets)
            estimators = ["same-basis", "naive"] if spec.estimator == "both" else [spec.estimator]
            for subset in subsets:
                subset = tuple(subset)
                if any(not 0 <= q < n for q in subset) or len(set(subset)) != len(subset):
                    raise ConfigError(f"{where}: invalid subset {subset}")
                exact = purity(reduced_density(dense, subset))
                if len(subset) == 1:
                    bias = bias_purity_1q(float(f_true[subset[0]]), exact)
                elif len(subset) == 2:
                    i, j = subset
                    p_i = purity(reduced_density(dense, (i,)))
                    p_j = purity(reduced_density(dense, (j,)))
                    bias = bias_purity_2q(float(f_true[i]), float(f_true[j]), exact, p_i, p_j)
                else:
                    bias = float("nan")
                for estim in estimators:
                    out.append(Estimand(
                        "purity", _qubits_str(subset), subset, estim, exact, bias,
                    ))
        else:  # pce-correlators
            if prepared.problem is None:
                raise ConfigError(f"{where}: pce-correlators needs a pce state")
            exact_all = pce_correlators(dense, prepared.problem)
            for v in prepared.problem.variables:
                i, j = v.qubits
                exact = exact_all[v.label]
                out.append(Estimand(
                    "pce-correlator", v.label, v.qubits, "linear", exact,
                    bias_pauli_2q(float(f_true[i]), float(f_true[j]), exact),
                    LocalObservable.pauli(v.axis * 2, v.qubits),
                ))
    labels = [(e.kind, e.label, e.estimator) for e in out]
    if len(set(labels)) != len(labels):
        raise ConfigError("estimands expand to duplicate rows; merge the specs")
    return out


# --- evaluation ---


def _pool_calibrations(phases: dict[int, CalibrationEstimate]) -> CalibrationEstimate:
    """Equal-weight mean over all calibration phases."""
    ests = [phases[k] for k in sorted(phases)]
    f_local = np.mean([e.f_local for e in ests], axis=0)
    keys = set(ests[0].f_pair)
    for e in ests[1:]:
        keys &= set(e.f_pair)
    f_pair = {k: float(np.mean([e.f_pair[k] for e in ests])) for k in keys}
    return CalibrationEstimate(f_local, f_pair, sum(e.n_shots for e in ests), None)


def _evaluate_estimand(
    est: Estimand,
    records: ShadowRecords,
    f: CalibrationEstimate,
    pair_rng: RandomStream,
) -> float:
    if est.observable is not None:
        return estimate_observable(records, f, est.observable).value
    fn = estimate_purity_same_basis if est.estimator == "same-basis" else estimate_purity_naive
    return fn(records, None, f, est.qubits, n_resamples=0, rng=pair_rng).value


def _evaluate_batched(
    est: Estimand,
    records: ShadowRecords,
    calibrations: dict[int, CalibrationEstimate],
    pooled: CalibrationEstimate,
    pair_rng: RandomStream,
) -> float:
    """Robust point value: per-batch bracketing mix for linear estimands,
    pooled coefficients for pair-kernel estimands."""
    if est.observable is None:
        return _evaluate_estimand(est, records, pooled, pair_rng)

    def estimator(recs, f):
        return estimate_observable(recs, f, est.observable).value

    return batched_estimates(estimator, records, calibrations).pooled


# --- commands ---


def _experiment_stream(config: Config, exp: ExperimentSpec) -> RandomStream:
    return RandomStream(config.seed).split("experiment", exp.name)


def _select_experiments(config: Config, preset_override: str | None) -> list[ExperimentSpec]:
    if preset_override is None:
        return list(config.experiments)
    out = []
    for exp in config.experiments:
        noise = NoiseSpec(preset=preset_override)
        out.append(ExperimentSpec(
            exp.name, noise, exp.state, exp.plan,
            exp.calibration_shots, exp.calibration_pairs, exp.estimands,
        ))
    return out


def cmd_calibrate(config: Config, preset_override: str | None = None) -> list[Path]:
    """Standalone noise characterization for every experiment."""
    written = []
    for exp in _select_experiments(config, preset_override):
        n = state_width(exp.state, config.base_dir)
        noise = exp.noise.resolve(n, config.base_dir)
        device = SimulatedDevice(n, noise)
        stream = _experiment_stream(config, exp)
        shots = run_calibration(
            n, exp.calibration_shots, device, stream.split("standalone-calibration")
        )
        exp_dir = Path(config.out_dir) / exp.name
        exp_dir.mkdir(parents=True, exist_ok=True)
        write_records(
            exp_dir / "calibration_standalone.jsonl", shots,
            meta={"experiment": exp.name, "seed": config.seed, "preset": exp.noise.label},
        )
        pairs = exp.calibration_pairs if exp.calibration_pairs == "all" else None
        est = estimate_f(shots, pairs)
        report = _calibration_report(exp, shots, est, noise, stream)
        _write_json(exp_dir / "calibration_report.json", report)
        _update_run_meta(exp_dir, {
            "experiment": exp.name, "seed": config.seed, "preset": exp.noise.label,
            "n_qubits": n, "noise_model": noise.to_dict(),
            "calibration_shots": exp.calibration_shots,
        })
        written.append(exp_dir / "calibration_report.json")
    return written


def _calibration_report(
    exp: ExperimentSpec,
    shots: CalibrationRecords,
    est: CalibrationEstimate,
    noise: ReadoutNoiseModel,
    stream: RandomStream,
) -> dict:
    n = shots.n_qubits
    pairs = sorted(est.f_pair)
    mean_drift = float(np.mean(noise.drift_factor(np.arange(len(shots)))))
    p_true = (noise.p01 + noise.p10) / 2.0 * mean_drift

    model = CalibrationFrequencyModel.fit(shots)
    f_boot = np.empty((N_RESAMPLES, n))
    stat_boot = np.empty((N_RESAMPLES, len(pairs)))
    for r in range(N_RESAMPLES):
        synth_p = model.resample(len(shots), stream.split("calib-boot", r).generator())
        est_p = estimate_f(synth_p, [])
        f_boot[r] = est_p.f_local
        # Pair statistics need the joint distribution, so resample rows.
        synth_n = _resample_nonparametric(shots, stream.split("calib-boot-np", r).generator())
        est_n = estimate_f(synth_n, pairs)
        stat_boot[r] = [crosstalk_statistic(est_n, i, j) for i, j in pairs]
    p_flip = est.p_flip
    p_sigma = 1.5 * f_boot.std(axis=0, ddof=1)
    per_qubit = [
        {
            "qubit": q,
            "f": float(est.f_local[q]),
            "p_flip": float(p_flip[q]),
            "p_flip_sigma": float(p_sigma[q]),
            "ci_low": float(p_flip[q] - Z95 * p_sigma[q]),
            "ci_high": float(p_flip[q] + Z95 * p_sigma[q]),
            "p_flip_true": float(p_true[q]),
        }
        for q in range(n)
    ]
    stat_sigma = stat_boot.std(axis=0, ddof=1)
    pair_rows = []
    for k, (i, j) in enumerate(pairs):
        stat = crosstalk_statistic(est, i, j)
        sigma = float(stat_sigma[k])
        pair_rows.append({
            "i": i, "j": j, "stat": stat, "sigma": sigma,
            "z": stat / sigma if sigma > 0 else float("nan"),
        })
    return {
        "schema": "calibration-report/1",
        "preset": exp.noise.label,
        "n_shots": len(shots),
        "n_qubits": n,
        "per_qubit": per_qubit,
        "pairs": pair_rows,
    }


def cmd_acquire(config: Config, preset_override: str | None = None) -> list[Path]:
    """Run the interleaved calibration/acquisition plan for every experiment."""
    written = []
    for exp in _select_experiments(config, preset_override):
        prepared = prepare_state(exp.state, config.base_dir)
        n = prepared.n_qubits
        noise = exp.noise.resolve(n, config.base_dir)
        device = SimulatedDevice(n, noise)
        stream = _experiment_stream(config, exp)
        plan = make_plan(exp.plan.total_shots, exp.plan.n_batches, exp.plan.calib_shots_per_batch)
        calib_parts, shadow_parts = [], []
        for phase in plan.phases:
            if phase.kind == "calibration":
                calib_parts.append(run_calibration(
                    n, phase.n_shots, device,
                    stream.split("calibration-phase", phase.batch_index),
                    batch_index=phase.batch_index, shot_offset=phase.start_shot,
                ))
            else:
                shadow_parts.append(run_shadow_acquisition(
                    prepared.prep, phase.n_shots, device,
                    stream.split("acquisition-batch", phase.batch_index),
                    batch_index=phase.batch_index, shot_offset=phase.start_shot,
                ))
        exp_dir = Path(config.out_dir) / exp.name
        exp_dir.mkdir(parents=True, exist_ok=True)
        meta = {"experiment": exp.name, "seed": config.seed, "preset": exp.noise.label}
        write_records(exp_dir / "calibration.jsonl", CalibrationRecords.concat(calib_parts), meta)
        write_records(exp_dir / "shadow.jsonl", ShadowRecords.concat(shadow_parts), meta)
        _write_json(exp_dir / "plan.json", {
            "schema": "experiment-plan/1",
            "total_shots": plan.total_shots,
            "n_batches": plan.n_batches,
            "calib_shots_per_batch": plan.calib_shots_per_batch,
            "phases": [
                {"kind": p.kind, "batch_index": p.batch_index,
                 "start_shot": p.start_shot, "n_shots": p.n_shots}
                for p in plan.phases
            ],
        })
        _update_run_meta(exp_dir, {
            "experiment": exp.name, "seed": config.seed, "preset": exp.noise.label,
            "n_qubits": n, "noise_model": noise.to_dict(), "state": prepared.meta,
            "plan": {"total_shots": plan.total_shots, "n_batches": plan.n_batches,
                     "calib_shots_per_batch": plan.calib_shots_per_batch},
        })
        written.append(exp_dir / "shadow.jsonl")
    return written


def cmd_estimate(
    config: Config, preset_override: str | None = None, non_robust: bool = False
) -> list[Path]:
    """Estimate every configured quantity from the recorded data."""
    written = []
    for exp in _select_experiments(config, preset_override):
        exp_dir = Path(config.out_dir) / exp.name
        shadow_path = exp_dir / "shadow.jsonl"
        calib_path = exp_dir / "calibration.jsonl"
        if not shadow_path.exists() or not calib_path.exists():
            raise EstimationError(
                f"experiment {exp.name!r} has no acquired records under {exp_dir}; "
                "run acquire first"
            )
        shadow, _ = read_records(shadow_path)
        calib, _ = read_records(calib_path)
        theta = None
        meta_path = exp_dir / "run.json"
        if exp.state.kind == "pce" and meta_path.exists():
            stored = json.loads(meta_path.read_text()).get("state", {})
            if "theta" in stored:
                theta = np.asarray(stored["theta"], dtype=float)
        prepared = prepare_state(exp.state, config.base_dir, theta_override=theta)
        n = prepared.n_qubits
        noise = exp.noise.resolve(n, config.base_dir)
        mean_drift = float(np.mean(noise.drift_factor(shadow.shot_index)))
        estimands = expand_estimands(exp, prepared, noise, mean_drift)

        calibrations = {
            int(b): estimate_f(calib.for_batch(int(b)), [])
            for b in calib.batches()
        }
        pooled = _pool_calibrations(calibrations)
        noiseless = CalibrationEstimate.noiseless(n)
        if non_robust:
            calibrations = {b: noiseless for b in calibrations}
            pooled = noiseless
        stream = _experiment_stream(config, exp)

        rows = []
        points_r = np.empty(len(estimands))
        points_nr = np.empty(len(estimands))
        for k, est in enumerate(estimands):
            pair_rng = stream.split("pairs", k)
            points_r[k] = _evaluate_batched(est, shadow, calibrations, pooled, pair_rng)
            points_nr[k] = _evaluate_estimand(est, shadow, noiseless, pair_rng)

        model = ShadowFrequencyModel.fit(shadow)
        boot_r = np.empty((N_RESAMPLES, len(estimands)))
        boot_nr = np.empty((N_RESAMPLES, len(estimands)))
        for r in range(N_RESAMPLES):
            synth = model.resample(len(shadow), stream.split("bootstrap", r).generator())
            for k, est in enumerate(estimands):
                pair_rng = stream.split("pairs-boot", r, k)
                boot_r[r, k] = _evaluate_estimand(est, synth, pooled, pair_rng)
                boot_nr[r, k] = _evaluate_estimand(est, synth, noiseless, pair_rng)
        sigma_r = boot_r.std(axis=0, ddof=1)
        sigma_nr = boot_nr.std(axis=0, ddof=1)

        for k, est in enumerate(estimands):
            delta_r = abs(points_r[k] - est.exact)
            delta_nr = abs(points_nr[k] - est.exact)
            rows.append([
                exp.name, exp.noise.label, est.kind, est.label,
                _qubits_str(est.qubits), est.estimator, est.exact,
                float(points_r[k]), float(sigma_r[k]),
                float(points_r[k] - Z95 * sigma_r[k]), float(points_r[k] + Z95 * sigma_r[k]),
                float(points_nr[k]), float(sigma_nr[k]),
                float(points_nr[k] - Z95 * sigma_nr[k]), float(points_nr[k] + Z95 * sigma_nr[k]),
                float(delta_r), float(delta_nr), float(delta_nr - delta_r),
                est.theory_bias,
            ])
        _write_csv(exp_dir / "estimates.csv", ESTIMATES_SCHEMA, ESTIMATES_COLUMNS, rows)
        (exp_dir / "estimates.txt").write_text(_format_table(exp, estimands, rows, prepared))
        written.append(exp_dir / "estimates.csv")
    return written


def _format_table(exp, estimands, rows, prepared) -> str:
    header = f"{'kind':<15} {'label':<14} {'estimator':<10} " \
             f"{'exact':>9} {'robust':>18} {'non-robust':>18} {'d_R':>8} {'d_NR':>8} {'bias_th':>8}"
    lines = [f"experiment: {exp.name}   noise: {exp.noise.label}", header, "-" * len(header)]
    for est, row in zip(estimands, rows):
        robust = f"{row[7]:+.4f} ({row[8]:.4f})"
        nonrob = f"{row[11]:+.4f} ({row[12]:.4f})"
        bias = "" if math.isnan(row[18]) else f"{row[18]:8.4f}"
        lines.append(
            f"{est.kind:<15} {est.label:<14} {est.estimator:<10} "
            f"{row[6]:>9.4f} {robust:>18} {nonrob:>18} {row[15]:8.4f} {row[16]:8.4f} {bias:>8}"
        )
    if prepared.problem is not None:
        exact = pce_correlators(prepared.dense, prepared.problem)
        robust_by_label = {e.label: rows[k][7] for k, e in enumerate(estimands)
                           if e.kind == "pce-correlator"}
        if robust_by_label:
            dec_exact = pce_decode(exact, prepared.problem)
            dec_robust = pce_decode(robust_by_label)
            agree = sum(dec_exact[v] == dec_robust.get(v) for v in dec_exact)
            lines.append("")
            lines.append(
                f"decoded signs: {agree}/{len(dec_exact)} match the exact-state decoding"
            )
    lines.append("")
    lines.append("values are point estimates (bootstrap standard error in parentheses)")
    return "\n".join(lines) + "\n"


def cmd_report_figures(config: Config, preset_override: str | None = None) -> list[Path]:
    """Bundle per-panel CSVs from the estimate outputs."""
    experiments = _select_experiments(config, preset_override)
    out_root = Path(config.out_dir)
    fig_dir = out_root / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)

    # Panel a: one calibration report per preset, widest register wins.
    chosen: dict[str, tuple[int, dict]] = {}
    for exp in experiments:
        report_path = out_root / exp.name / "calibration_report.json"
        if not report_path.exists():
            continue
        report = json.loads(report_path.read_text())
        key = report["preset"]
        if key not in chosen or report["n_qubits"] > chosen[key][0]:
            chosen[key] = (report["n_qubits"], report)
    rows_a = []
    for preset in sorted(chosen):
        report = chosen[preset][1]
        for q in report["per_qubit"]:
            rows_a.append([
                preset, q["qubit"], q["p_flip_true"], q["p_flip"],
                q["ci_low"], q["ci_high"],
            ])
    if not rows_a:
        raise EstimationError("no calibration reports found; run calibrate first")
    _write_csv(fig_dir / "panel_a.csv", PANEL_A_SCHEMA,
               ["preset", "qubit", "p_flip_true", "p_flip", "ci_low", "ci_high"], rows_a)
    written = [fig_dir / "panel_a.csv"]

    def estimate_rows(exp):
        path = out_root / exp.name / "estimates.csv"
        if not path.exists():
            raise EstimationError(f"missing estimates for {exp.name!r}; run estimate first")
        with open(path) as fh:
            first = fh.readline().strip()
            if first != f"# schema: {ESTIMATES_SCHEMA}":
                raise EstimationError(f"{path} has unexpected schema line {first!r}")
            return list(csv.DictReader(fh))

    # Panels b and c: entangled test states.
    rows_b, rows_c = [], []
    for exp in experiments:
        if exp.state.kind not in ("qaoa", "pce"):
            continue
        for row in estimate_rows(exp):
            if exp.state.kind == "qaoa" and row["kind"] == "purity":
                rows_b.append([
                    row["preset"], row["qubits"], row["estimator"], row["exact"],
                    row["robust"], row["robust_ci_low"], row["robust_ci_high"],
                    row["nonrobust"], row["nonrobust_ci_low"], row["nonrobust_ci_high"],
                ])
            elif exp.state.kind == "pce" and row["kind"] == "pce-correlator":
                exact = float(row["exact"])
                robust = float(row["robust"])
                rows_c.append([
                    row["preset"], row["label"], "", row["qubits"], row["exact"],
                    row["robust"], row["robust_ci_low"], row["robust_ci_high"],
                    row["nonrobust"], row["nonrobust_ci_low"], row["nonrobust_ci_high"],
                    1 if exact >= 0 else -1, 1 if robust >= 0 else -1,
                ])
    if rows_b:
        _write_csv(fig_dir / "panel_b.csv", PANEL_B_SCHEMA,
                   ["preset", "pair", "estimator", "exact", "robust", "robust_ci_low",
                    "robust_ci_high", "nonrobust", "nonrobust_ci_low", "nonrobust_ci_high"],
                   rows_b)
        written.append(fig_dir / "panel_b.csv")
    if rows_c:
        _write_csv(fig_dir / "panel_c.csv", PANEL_C_SCHEMA,
                   ["preset", "label", "pauli", "qubits", "exact", "robust",
                    "robust_ci_low", "robust_ci_high", "nonrobust", "nonrobust_ci_low",
                    "nonrobust_ci_high", "sign_exact", "sign_robust"],
                   rows_c)
        written.append(fig_dir / "panel_c.csv")

    # Panels d-g: absolute-error distributions on product benchmark states.
    def dq_panel(row):
        if row["kind"] == "fidelity":
            return "d", "fidelity"
        if row["kind"] == "correlator":
            return "e", "correlator"
        if row["kind"] == "purity" and "-" not in row["qubits"]:
            return "f", "purity-1q"
        if row["kind"] == "purity":
            return "g", "purity-2q"
        return None, None

    panels: dict[str, list] = {"d": [], "e": [], "f": [], "g": []}
    for exp in experiments:
        if exp.state.kind not in ("haar-product", "zero"):
            continue
        for row in estimate_rows(exp):
            panel, quantity = dq_panel(row)
            if panel is None:
                continue
            label = row["label"] if row["kind"] != "purity" \
                else f"{row['qubits']}:{row['estimator']}"
            panels[panel].append([panel, quantity, row["preset"], "NR", label, row["delta_nr"]])
            panels[panel].append([panel, quantity, row["preset"], "R", label, row["delta_r"]])
    for panel, rows in panels.items():
        if not rows:
            continue
        _write_csv(fig_dir / f"panel_{panel}.csv", PANEL_DQ_SCHEMA,
                   ["panel", "quantity", "preset", "method", "label", "delta"], rows)
        written.append(fig_dir / f"panel_{panel}.csv")
    return written


def cmd_run_all(
    config: Config, preset_override: str | None = None, non_robust: bool = False
) -> list[Path]:
    cmd_calibrate(config, preset_override)
    cmd_acquire(config, preset_override)
    cmd_estimate(config, preset_override, non_robust)
    return cmd_report_figures(config, preset_override)
