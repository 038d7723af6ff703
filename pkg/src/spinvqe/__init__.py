"""Statevector and density-matrix VQE toolkit for open Heisenberg chains."""

__version__ = "0.1.0"

from .ansatz import AnsatzSpec, build_ansatz, build_exchange, build_expressive, build_hea, neel_state
from .measure import EnergyEstimate, ShotRecord, estimate_energy, sample_shots
from .model import HeisenbergChain, build_hamiltonian, exact_diagonalize, magnetization_sector
from .noise import DensityMatrix, NoiseModel, calibrate_from_table, evolve_noisy, noisy_expectation
from .pauli import Observable, PauliString, exact_expectation, parse_observable
from .runner import Execution, ExperimentConfig, GridSpec, OptimizerSpec, SweepResult, run_sweep
from .statevec import Circuit, Gate, StateVector, init_basis_state, run_circuit

__all__ = [
    "__version__",
    "AnsatzSpec", "build_ansatz", "build_exchange", "build_expressive", "build_hea", "neel_state",
    "EnergyEstimate", "ShotRecord", "estimate_energy", "sample_shots",
    "HeisenbergChain", "build_hamiltonian", "exact_diagonalize", "magnetization_sector",
    "DensityMatrix", "NoiseModel", "calibrate_from_table", "evolve_noisy", "noisy_expectation",
    "Observable", "PauliString", "exact_expectation", "parse_observable",
    "Execution", "ExperimentConfig", "GridSpec", "OptimizerSpec", "SweepResult", "run_sweep",
    "Circuit", "Gate", "StateVector", "init_basis_state", "run_circuit",
]
