"""Running LOCAL algorithms on networks."""

from .consensus import (
    BoundedOracle, ConsensusAlgorithm, OracleInconsistency, SimulationOracle, TableOracle,
    alg_consensus, bounded_oracle,
)
from .engine import (
    BudgetExceeded, FunctionAlgorithm, LocalAlgorithm, NodeOutput, SimulationTrace,
    locality_profile, profile_csv, run,
)
from .structural import StructuralAlgorithm, alg_structural

__all__ = [
    "BoundedOracle", "BudgetExceeded", "ConsensusAlgorithm", "FunctionAlgorithm", "LocalAlgorithm",
    "NodeOutput", "OracleInconsistency", "SimulationOracle", "SimulationTrace", "StructuralAlgorithm",
    "TableOracle", "alg_consensus", "alg_structural", "bounded_oracle", "locality_profile",
    "profile_csv", "run",
]
