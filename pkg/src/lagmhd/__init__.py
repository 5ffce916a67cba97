"""Planar non-resistive compressible MHD in Lagrangian coordinates."""

__version__ = "0.1.0"

from .config import RunConfig, load_config, parse_config  # noqa: E402
from .diagnostics import (  # noqa: E402
    InvariantReport,
    compute_fluxes,
    energy,
    j_lower_bound,
    report,
)
from .errors import (  # noqa: E402
    ConfigError,
    InvariantViolation,
    LagMHDError,
    SolverError,
    ValidationError,
)
from .eulerian import FlowMap, build_flow_map, to_eulerian  # noqa: E402
from .presets import get_preset, presets  # noqa: E402
from .runner import convergence_study, run, simulate  # noqa: E402
from .state import (  # noqa: E402
    FluidState,
    InitialData,
    LagrangianGrid,
    MaterialParams,
    discretize,
)
from .stepper import StepConfig, advance, stable_dt, step  # noqa: E402

__all__ = [
    "ConfigError", "FlowMap", "FluidState", "InitialData", "InvariantReport",
    "InvariantViolation", "LagMHDError", "LagrangianGrid", "MaterialParams", "RunConfig",
    "SolverError", "StepConfig", "ValidationError", "advance", "build_flow_map",
    "compute_fluxes", "convergence_study", "discretize", "energy", "get_preset",
    "j_lower_bound", "load_config", "parse_config", "presets", "report", "run", "simulate",
    "stable_dt", "step", "to_eulerian",
]
