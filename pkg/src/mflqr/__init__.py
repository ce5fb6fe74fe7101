"""Optimal distributed control of leader-follower networks via two small Riccati equations."""
from .errors import (ConfigError, DimensionMismatch, Diverged, LeaderlessMode, NotConverged,
                     NotPSD, SingularGain, SingularInnerMatrix, TooLarge)
from .gains import (ConsensusForm, GainSchedule, compute_gains, consensus_coefficients,
                    follower_action, leader_action)
from .model import (AugmentedSystem, CostModel, Dims, Distribution, NoiseModel, SystemModel,
                    build_augmented, check_detectable, check_stabilizable, matrix_sqrt_psd,
                    validate)
from .riccati import RiccatiSolution, backward_step, solve, solve_are, solve_finite, solve_infinite
from .oracle import (CentralizedProblem, assemble_meanfield_as_centralized, build_centralized,
                     compare, expected_cost, solve_centralized)
from .sim import (SimulationTrace, deviation_residual, evaluate_cost_decomposed,
                  evaluate_cost_direct, simulate, simulate_costs)

__version__ = "0.1.0"

__all__ = [
    "AugmentedSystem", "CentralizedProblem", "ConfigError", "ConsensusForm", "CostModel", "Dims",
    "DimensionMismatch", "Distribution", "Diverged", "GainSchedule", "LeaderlessMode", "NoiseModel",
    "NotConverged", "NotPSD", "RiccatiSolution", "SimulationTrace", "SingularGain",
    "SingularInnerMatrix", "SystemModel", "TooLarge", "assemble_meanfield_as_centralized",
    "backward_step", "build_augmented", "build_centralized", "check_detectable",
    "check_stabilizable", "compare", "compute_gains", "consensus_coefficients", "deviation_residual",
    "evaluate_cost_decomposed", "evaluate_cost_direct", "expected_cost", "follower_action",
    "leader_action", "matrix_sqrt_psd", "simulate", "simulate_costs", "solve", "solve_are",
    "solve_centralized", "solve_finite", "solve_infinite", "validate",
]
