"""Adaptive sliding-mode boundary control of a reaction-diffusion beam with thermoelectric actuators."""
from .equilibrium import EquilibriumProfile, solve_equilibrium
from .harness import Scenario, load_scenario, run_scenario, scenario_from_dict
from .pde_core import FieldState, PlantCoefficients, build_grid
from .series import TimeSeries, export_csv
from .smc_controller import ControllerConfig, DisturbanceBounds, check_gain_conditions, ultimate_bound

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig",
    "DisturbanceBounds",
    "EquilibriumProfile",
    "FieldState",
    "PlantCoefficients",
    "Scenario",
    "TimeSeries",
    "build_grid",
    "check_gain_conditions",
    "export_csv",
    "load_scenario",
    "run_scenario",
    "scenario_from_dict",
    "solve_equilibrium",
    "ultimate_bound",
]
