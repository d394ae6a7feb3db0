"""Models package for Copter."""

from .adoption import AcceptabilityDefinition, AdoptionModel, LogisticFit, PersonIntercept
from .choice import Acceptability, ChoiceAlternative, ChoiceModel, ChoiceRecord, ChoiceSchema
from .energy import DelayParams, FuelCurve, FuelModel, VolumeDelay
from .forest import F1Report, ForestModel, ForestParams, ForestTarget, TreeArrays
from .network import Edge, ModeCategory, ModeLabel, Node, Query, Schedule, TransportGraph
from .plan import CandidatePlan, CandidatePlanSet, CostWeights, Plan, PlanStep
from .recommendation import Recommendation, ScoredCandidate
from .simulation import Condition, GridSpec, PeriodWindow, PopulationSpec, Scenario, SimReport, Traveler, TrialResult
from .traveler import TravelerProfile

__all__ = [
    "ModeLabel",
    "ModeCategory",
    "Node",
    "Edge",
    "Schedule",
    "Query",
    "TransportGraph",
    "PlanStep",
    "Plan",
    "CostWeights",
    "CandidatePlan",
    "CandidatePlanSet",
    "TravelerProfile",
    "ChoiceSchema",
    "ChoiceModel",
    "ChoiceAlternative",
    "ChoiceRecord",
    "Acceptability",
    "AcceptabilityDefinition",
    "AdoptionModel",
    "PersonIntercept",
    "LogisticFit",
    "FuelCurve",
    "FuelModel",
    "DelayParams",
    "VolumeDelay",
    "ForestTarget",
    "ForestParams",
    "TreeArrays",
    "ForestModel",
    "F1Report",
    "ScoredCandidate",
    "Recommendation",
    "Condition",
    "PeriodWindow",
    "GridSpec",
    "PopulationSpec",
    "Traveler",
    "Scenario",
    "TrialResult",
    "SimReport",
]
