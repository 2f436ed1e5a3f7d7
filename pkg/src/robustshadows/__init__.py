"""Robust classical shadows with calibrated readout.

Randomized single-qubit-basis measurements with a bit-flip-twirled
calibration stage: the measured data determine both the shadow snapshots
and the noise coefficients needed to invert the readout channel, so
fidelities, Pauli correlators, and subsystem purities come out bias-free
under arbitrary classical readout noise.  A built-in simulator with
preset noise models and a brute-force channel oracle back the test suite.
"""

from .calibration import (
    CalibrationEstimate,
    NonInvertibleCalibrationWarning,
    crosstalk_statistic,
    default_pairs,
    estimate_f,
    run_calibration,
)
from .core import (
    DensityMatrix,
    Gate,
    ProductState,
    StateVector,
    apply_gate,
    exact_expectation,
    purity,
    reduced_density,
    state_overlap,
)
from .device import SimulatedDevice
from .errors import (
    BackendError,
    ConfigError,
    EstimationError,
    NonInvertibleCalibrationError,
    RobustShadowsError,
)
from .noise import DriftSchedule, ReadoutNoiseModel, make_preset
from .records import (
    CalibrationRecords,
    CalibrationShot,
    ShadowRecords,
    ShadowShot,
    read_records,
    write_records,
)
from .rng import RandomStream
from .shadows import (
    Estimate,
    LocalObservable,
    LocalSnapshot,
    PurityEstimate,
    estimate_fidelity_1q,
    estimate_observable,
    estimate_pauli_correlator,
    estimate_purity_naive,
    estimate_purity_same_basis,
    run_shadow_acquisition,
    snapshot,
)
from .states import (
    PceProblem,
    WeightedGraph,
    austria_graph,
    eu_pce_problem,
    haar_product_state,
    pce_correlators,
    pce_decode,
    pce_soft_objective,
    pce_state,
    qaoa_layer_state,
    train_pce,
)
from .stats import (
    BootstrapResult,
    ExperimentPlan,
    batched_estimates,
    bootstrap_ci,
    bootstrap_sigma,
    make_plan,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BootstrapResult",
    "CalibrationEstimate",
    "CalibrationRecords",
    "CalibrationShot",
    "ConfigError",
    "DensityMatrix",
    "DriftSchedule",
    "Estimate",
    "EstimationError",
    "ExperimentPlan",
    "Gate",
    "LocalObservable",
    "LocalSnapshot",
    "NonInvertibleCalibrationError",
    "NonInvertibleCalibrationWarning",
    "PceProblem",
    "ProductState",
    "PurityEstimate",
    "ReadoutNoiseModel",
    "RandomStream",
    "RobustShadowsError",
    "ShadowRecords",
    "ShadowShot",
    "SimulatedDevice",
    "StateVector",
    "WeightedGraph",
    "apply_gate",
    "austria_graph",
    "batched_estimates",
    "bootstrap_ci",
    "bootstrap_sigma",
    "crosstalk_statistic",
    "default_pairs",
    "estimate_f",
    "estimate_fidelity_1q",
    "estimate_observable",
    "estimate_pauli_correlator",
    "estimate_purity_naive",
    "estimate_purity_same_basis",
    "eu_pce_problem",
    "exact_expectation",
    "haar_product_state",
    "make_plan",
    "make_preset",
    "pce_correlators",
    "pce_decode",
    "pce_soft_objective",
    "pce_state",
    "purity",
    "qaoa_layer_state",
    "read_records",
    "reduced_density",
    "run_calibration",
    "run_shadow_acquisition",
    "snapshot",
    "state_overlap",
    "train_pce",
    "write_records",
]
