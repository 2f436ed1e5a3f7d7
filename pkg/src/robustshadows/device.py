"""Simulated measurement backend.

The device owns the classical readout stage: it takes the bits an ideal
z-basis readout would produce and pushes them through the configured noise
model.  Acquisition code handles the quantum part (basis rotations and
sampling) and hands true bits to the device, which mirrors how the flip
layer of the calibration twirl commutes out of the quantum circuit.
"""

from __future__ import annotations

import numpy as np

from .core import StateVector, sample_z_basis_batch
from .errors import BackendError
from .noise import ReadoutNoiseModel, apply_readout_noise_batch


class SimulatedDevice:
    """n-qubit readout backend with optional classical noise."""

    def __init__(self, n_qubits: int, noise: ReadoutNoiseModel | None = None):
        if noise is not None and noise.n_qubits != n_qubits:
            raise BackendError(
                f"noise model width {noise.n_qubits} != device width {n_qubits}"
            )
        self.n_qubits = n_qubits
        self.noise = noise

    def measure_bits(
        self, true_bits: np.ndarray, shot_indices: np.ndarray, gen: np.random.Generator
    ) -> np.ndarray:
        """Noisy readout of (S, n) true bit rows at the given shot indices."""
        true_bits = np.asarray(true_bits, dtype=np.uint8)
        if true_bits.ndim != 2 or true_bits.shape[1] != self.n_qubits:
            raise BackendError(f"expected (S, {self.n_qubits}) bits, got {true_bits.shape}")
        return apply_readout_noise_batch(true_bits, self.noise, shot_indices, gen)

    def measure_state(
        self, state: StateVector, n_shots: int, shot_indices: np.ndarray,
        gen_sample: np.random.Generator, gen_noise: np.random.Generator,
    ) -> np.ndarray:
        """Repeated noisy z-basis readout of one fixed state."""
        if state.n_qubits != self.n_qubits:
            raise BackendError("state width does not match device width")
        ideal = sample_z_basis_batch(state, n_shots, gen_sample)
        return self.measure_bits(ideal, shot_indices, gen_noise)
