"""Bayesian quickest detection of radially propagating spatial events."""

from .geometry import Domain, OriginSet, SensorPlacement, build_origin_grid, max_radius
from .harness import ProcedureConfig, ScenarioConfig, SweepConfig, fs_to_rho, run_scenario
from .observation import ObservationFrame, ObservationModel, QuantizedModel
from .posterior import RadialFilter, change_posterior
from .rules import make_instant, make_oracle, make_rp, run_detector
from .state_model import BeliefState, PriorParams

__all__ = [
    "Domain", "OriginSet", "SensorPlacement", "build_origin_grid", "max_radius",
    "ProcedureConfig", "ScenarioConfig", "SweepConfig", "fs_to_rho", "run_scenario",
    "ObservationFrame", "ObservationModel", "QuantizedModel", "RadialFilter", "change_posterior",
    "make_instant", "make_oracle", "make_rp", "run_detector", "BeliefState", "PriorParams",
]
