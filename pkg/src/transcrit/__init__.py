"""Explicit-Euler transcritical passage: map, blow-up charts and checks."""
from .charts import (K1Point, K2Point, K3Point, blow_down, classify_chart, k12, k21, k23,
                     k32, lift_to_k1, lift_to_k2, lift_to_k3, step_k1, step_k2, step_k3)
from .core_map import (BranchId, State, Trajectory, classify_branch, euler_step, iterate,
                       pi_a, pi_e, reference_flow, section_delta)
from .errors import (CapReachedError, ChartDomainError, DesingularizationError,
                     DivergenceError, InvariantBreachError, ParameterError, TranscritError)
from .params import Params

__all__ = [
    "Params", "State", "Trajectory", "BranchId", "euler_step", "iterate",
    "classify_branch", "section_delta", "pi_a", "pi_e", "reference_flow",
    "K1Point", "K2Point", "K3Point", "blow_down", "lift_to_k1", "lift_to_k2",
    "lift_to_k3", "k12", "k21", "k32", "k23", "step_k1", "step_k2", "step_k3",
    "classify_chart", "TranscritError", "ParameterError", "DivergenceError",
    "CapReachedError", "ChartDomainError", "DesingularizationError",
    "InvariantBreachError",
]

__version__ = "0.1.0"
