"""Multiresolution Galerkin and collocation solvers for backward and
forward tempered fractional Feynman-Kac equations."""

from .bspline import SplineSpace, fwt_forward, fwt_inverse, tensor_fwt
from .fracassembly import (BandedOp, MemoryBudgetError, QuasiToeplitzOp,
                           WeightedStiffness, colloc_matrices, load_vector,
                           mass_1d, power_load, riesz_stiffness,
                           stiffness_1d, weighted_mass)
from .fracweights import TimeGrid, WeightTable, fbdf_Q, grunwald_weights, \
    pi_Q, substantial_apply
from .linalg import (KrylovResult, PrecondSpec, SolverError, ToeplitzOp,
                     bicgstab, gmres_restarted, kron2_apply,
                     toeplitz_matvec, wavelet_precond_build)
from .problem import (ManufacturedCase, PotentialFn, ProblemSpec,
                      available_cases, kfac, make_problem, registry_get,
                      riesz_sin_series)
from .stepper import (SCHEME_NAMES, Discretization, SolveReport,
                      compute_errors, compute_errors_2d, run_2d,
                      run_collocation, run_forward, run_named_scheme,
                      run_scheme_I, run_scheme_II, run_scheme_Iprime)
from .tables import RowSpec, TablePreset, available_tables, preset, run_row

__version__ = "0.1.0"

__all__ = [
    "SplineSpace", "fwt_forward", "fwt_inverse", "tensor_fwt",
    "BandedOp", "MemoryBudgetError", "QuasiToeplitzOp", "WeightedStiffness",
    "colloc_matrices", "load_vector", "mass_1d", "power_load",
    "riesz_stiffness", "stiffness_1d", "weighted_mass",
    "TimeGrid", "WeightTable", "fbdf_Q", "grunwald_weights", "pi_Q",
    "substantial_apply",
    "KrylovResult", "PrecondSpec", "SolverError", "ToeplitzOp", "bicgstab",
    "gmres_restarted", "kron2_apply", "toeplitz_matvec",
    "wavelet_precond_build",
    "ManufacturedCase", "PotentialFn", "ProblemSpec", "available_cases",
    "kfac", "make_problem", "registry_get", "riesz_sin_series",
    "SCHEME_NAMES", "Discretization", "SolveReport", "compute_errors",
    "compute_errors_2d", "run_2d", "run_collocation", "run_forward",
    "run_named_scheme", "run_scheme_I", "run_scheme_II", "run_scheme_Iprime",
    "RowSpec", "TablePreset", "available_tables", "preset", "run_row",
    "__version__",
]
