"""Switched predictor feedback for an unstable reaction-diffusion plant
with boundary input delay, under dynamic state or input quantization.

Subpackage map: `kernels` (Bessel and series kernels, grid tables),
`transforms` (backstepping maps and norms), `gains` (the design-constant
ledger and feasibility certificates), `quantizers` (zoom quantizers and
their property checks), `plant` (Crank-Nicolson solver plus exact delay
line), `controller` (switching schedule, detection, predictors, bound
checks), `runner`/`config`/`cli` (scenario execution and the command-line
harness).  The hot stepping loop runs in a compiled extension when built,
with a pure-numpy fallback (`backend.BACKEND` tells which).
"""

from .backend import BACKEND
from .config import ScenarioConfig, parse_config, parse_text
from .gains import DesignConstants, QuantizerBudget, design_constants, validate_budget
from .kernels import SeriesTruncation, bessel_i1, bessel_j1, build_tables
from .quantizers import QuantizerSpec, verify_properties
from .runner import Trajectory, run_scenario, write_csv
from .transforms import CascadePair, Field, build_operators

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ScenarioConfig",
    "parse_config",
    "parse_text",
    "DesignConstants",
    "QuantizerBudget",
    "design_constants",
    "validate_budget",
    "SeriesTruncation",
    "bessel_i1",
    "bessel_j1",
    "build_tables",
    "QuantizerSpec",
    "verify_properties",
    "Trajectory",
    "run_scenario",
    "write_csv",
    "CascadePair",
    "Field",
    "build_operators",
    "__version__",
]
