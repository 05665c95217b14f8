"""Spectral Faedo-Galerkin simulation of Maxwell's equations with nonlinear
Ohm laws, plus the numerical checks that certify its energy identities."""

__version__ = "0.1.0"

from .basis import BasisSet, QuadratureGrid, build_basis, build_grid, project_initial, synthesize
from .cara_ode import OdeProblem, PiecewiseConstant, Trajectory, gronwall_bound, integrate
from .config import SimulationConfig, parse_config, serialize_config
from .galerkin import (
    SimulationResult,
    apriori_check,
    assemble,
    contraction_check,
    energy_residual,
    poynting_boundary,
    run,
)
from .materials import MaterialField, OhmLaw, build_material_field, build_ohm_law, eval_j
from .steklov import TimeSeries

__all__ = [
    "BasisSet", "QuadratureGrid", "build_basis", "build_grid", "project_initial", "synthesize",
    "OdeProblem", "PiecewiseConstant", "Trajectory", "gronwall_bound", "integrate",
    "SimulationConfig", "parse_config", "serialize_config",
    "SimulationResult", "apriori_check", "assemble", "contraction_check", "energy_residual",
    "poynting_boundary", "run",
    "MaterialField", "OhmLaw", "build_material_field", "build_ohm_law", "eval_j",
    "TimeSeries",
]
