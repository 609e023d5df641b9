"""Symmetry-restricted emulation of quantum phase estimation for electronic Hamiltonians."""
from .determinants import DeterminantSpace, dimension, rank, unrank
from .hamiltonian import ClassifiedHamiltonian, IntegralSet, expand_and_classify, parse_fcidump
from .qpe import Ansatz, PhaseDistribution, QpeConfig, load_ansatz, memory_estimate, run_layered, run_overlap, run_qpe
from .readout import find_peaks, phase_to_energy, resolve_alias, weighted_average
from .trotter import StateVector, TrotterConfig, TrotterStep, apply_trotter_step

__version__ = "0.1.0"

__all__ = [
    "Ansatz",
    "ClassifiedHamiltonian",
    "DeterminantSpace",
    "IntegralSet",
    "PhaseDistribution",
    "QpeConfig",
    "StateVector",
    "TrotterConfig",
    "TrotterStep",
    "apply_trotter_step",
    "dimension",
    "expand_and_classify",
    "find_peaks",
    "load_ansatz",
    "memory_estimate",
    "parse_fcidump",
    "phase_to_energy",
    "rank",
    "resolve_alias",
    "run_layered",
    "run_overlap",
    "run_qpe",
    "unrank",
    "weighted_average",
]
