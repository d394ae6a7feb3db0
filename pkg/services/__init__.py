"""Services package for Copter."""

from .copter_service import ChoiceEstimator, Copter, ForestEstimator
from .planner_service import PlannerService
from .simulation_tools import SimulationService

__all__ = [
    "PlannerService",
    "Copter",
    "ForestEstimator",
    "ChoiceEstimator",
    "SimulationService",
]
