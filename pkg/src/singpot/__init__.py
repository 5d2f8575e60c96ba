"""Singular bulk potential of nematic Q-tensors: evaluation and bound checks."""

from .qtensor import QTensor, Spectrum, PhysicalityReport, decompose, classify, boundary_projection
from .specfun import bessel_i0_scaled, compute_constants, BlowupConstants
from .moments import Multipliers, NuCoords, moments_of, log_partition, moment_jacobian, angular_integrals
from .dualsolver import (
    SolveResult,
    SolverError,
    NonPhysicalInput,
    DegenerateJacobian,
    MaxIterations,
    solve_multipliers,
    continuation_solve,
)
from .potential import PotentialValue, GradientValue, evaluate, evaluate_eigenvalues, gradient
from .bounds import BoundReport, TheoremConstants, run_suite
from .oracle import SphereGrid, primal_minimize, construct_test_density
from .tables import InterpTable, build_table, interpolate_f, interpolate_g, load_table, save_table

__version__ = "0.1.0"

__all__ = [
    "QTensor",
    "Spectrum",
    "PhysicalityReport",
    "decompose",
    "classify",
    "boundary_projection",
    "bessel_i0_scaled",
    "compute_constants",
    "BlowupConstants",
    "Multipliers",
    "NuCoords",
    "moments_of",
    "log_partition",
    "moment_jacobian",
    "angular_integrals",
    "SolveResult",
    "SolverError",
    "NonPhysicalInput",
    "DegenerateJacobian",
    "MaxIterations",
    "solve_multipliers",
    "continuation_solve",
    "PotentialValue",
    "GradientValue",
    "evaluate",
    "evaluate_eigenvalues",
    "gradient",
    "BoundReport",
    "TheoremConstants",
    "run_suite",
    "SphereGrid",
    "primal_minimize",
    "construct_test_density",
    "InterpTable",
    "build_table",
    "interpolate_f",
    "interpolate_g",
    "load_table",
    "save_table",
]
