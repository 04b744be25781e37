"""Fused Lasso with safe screening of zero and fused coefficients."""
from .problem import (
    LambdaPair,
    Problem,
    SolveResult,
    dual_feasibility_violation,
    kkt_violation,
    make_problem,
    objective_value,
)
from .prox import prox_chain, prox_fused, prox_tv1d, soft_threshold
from .screening import (
    DualBall,
    ReducedProblem,
    ScreenReport,
    build_reduction,
    dual_ball,
    expand_solution,
    lambda1_max,
    lambda2_max,
    screen,
)
from .solver import SolverConfig, solve, solve_exact_small, solve_reduced

__version__ = "0.1.0"
