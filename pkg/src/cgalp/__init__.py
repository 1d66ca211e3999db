"""Conditional gradient with augmented Lagrangian and proximal step (CGALP),
its building blocks, a Douglas-Rachford baseline, and a benchmark harness."""

from . import _backend
from ._backend import available as available_backends
from .linalg import (ConvergenceError, DimensionError, LinearMap, MaskOperator,
                     NonFiniteError, SingularTriplet, adjoint_mismatch, operator_norm_estimate,
                     power_svd_top)
from .prox import (ProxFriendly, ProxInconsistencyError, indicator_l1_ball,
                   indicator_nuclear_ball, l1_norm, moreau_grad, moreau_value, nuclear_norm,
                   project_l1_ball, project_nuclear_ball, prox_l1, zero_function)
from .oracles import (LmoFriendly, NuclearBallOracle, box, l1_ball, lmo_box, lmo_l1_ball,
                      lmo_nuclear_ball, nuclear_ball)
from .schedule import ParameterSchedule, ValidationReport, validate_schedule
from .solver import (CompositeProblem, InfeasibleIterateError, NonFiniteIterateError,
                     RunResult, SolverError, SolverState, cgalp_step, curvature_estimate,
                     gradient_E, lagrangian, lipschitz_bound, project_onto_range, run,
                     smoothed_lagrangian)
from .product import (BlockOracleError, ProductSpec, blockwise_lmo, consensus_residual,
                      diagonal_projector, lift, weighted_inner)
from .gfb import (GfbState, MatcompData, feasibility, gfb_bregman_criterion, gfb_step,
                  objective_Q, run_gfb)
from .problems import gen_matcomp_instance, gen_projection_instance, matcomp_problem

__version__ = "0.1.0"


def backend() -> str:
    """Name of the kernel backend currently in use (``"cython"`` or ``"python"``)."""
    return _backend.name
