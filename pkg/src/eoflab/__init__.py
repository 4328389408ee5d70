"""Entanglement of formation, subalgebra entropies and accessible information
for small finite-dimensional quantum states.

All entropies are in bits. Factor indices in the Python API are 0-based;
the command line uses 1-based indices.
"""
from .core import (
    FactorLayout,
    SchmidtDecomposition,
    bell_state,
    density,
    entanglement_entropy,
    ket,
    partial_trace,
    purify,
    restrict,
    schmidt,
    tensor,
    von_neumann_entropy,
    werner,
)
from .decompositions import PureDecomposition, from_mixing, rank2_family, validate
from .errors import EoflabError
from .information import Ensemble, Povm, SubalgebraMap, accessible_information
from .optimality import GammaSampling, PairCertificate, check_pair, exact_rank2_eof
from .oracle import grid_eof, two_qubit_eof, two_qubit_optimal_decomposition
from .solver import EofResult, SolverConfig, average_entanglement, entropy_of_subalgebra, eof

__version__ = "0.1.0"

__all__ = [
    "EoflabError",
    "Ensemble",
    "EofResult",
    "FactorLayout",
    "GammaSampling",
    "PairCertificate",
    "Povm",
    "PureDecomposition",
    "SchmidtDecomposition",
    "SolverConfig",
    "SubalgebraMap",
    "accessible_information",
    "average_entanglement",
    "bell_state",
    "check_pair",
    "density",
    "entanglement_entropy",
    "entropy_of_subalgebra",
    "eof",
    "exact_rank2_eof",
    "from_mixing",
    "grid_eof",
    "ket",
    "partial_trace",
    "purify",
    "rank2_family",
    "restrict",
    "schmidt",
    "tensor",
    "two_qubit_eof",
    "two_qubit_optimal_decomposition",
    "validate",
    "von_neumann_entropy",
    "werner",
]
