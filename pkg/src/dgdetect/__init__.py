"""Modal discontinuous Galerkin Euler solver with pluggable troubled-cell
indicators and a benchmark harness for their flagged-cell statistics."""

from .discretization import (Basis, Mesh, extrapolated_cell_average,
                             make_basis, structured_mesh_2d, uniform_mesh_1d)
from .errors import (ConfigurationError, ContractViolationError,
                     DeserializationError, DgError, InvalidMeshError,
                     NonphysicalStateError, TrainingDivergedError)
from .indicators import (KINDS, IndicatorConfig, TroubledFlags, detect,
                         detect_all, make_detector)
from .limiter import apply_weno_limiter
from .benchmarks import (ProblemSpec, dmr_boundary_state, exact_sod_profile,
                         get_problem, problem_catalog)
from .boundary import make_boundary_conditions
from .reporting import RunReport, accumulate
from .solver import (ModalField, dg_residual, march,
                     project_initial_condition, ssp_rk3_step, stable_dt)
from .cli import run_case

__version__ = "1.0.0"

__all__ = [
    "Basis", "Mesh", "make_basis", "uniform_mesh_1d", "structured_mesh_2d",
    "extrapolated_cell_average", "DgError", "InvalidMeshError",
    "ConfigurationError", "NonphysicalStateError", "ContractViolationError",
    "DeserializationError", "TrainingDivergedError", "KINDS",
    "IndicatorConfig", "TroubledFlags", "detect", "detect_all",
    "make_detector", "apply_weno_limiter", "ProblemSpec", "problem_catalog",
    "get_problem", "dmr_boundary_state", "exact_sod_profile",
    "make_boundary_conditions", "RunReport", "accumulate", "ModalField",
    "project_initial_condition", "dg_residual", "ssp_rk3_step", "march",
    "stable_dt", "run_case", "__version__",
]
