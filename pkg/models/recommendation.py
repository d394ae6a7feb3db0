"""Pydantic models for acceptable-plan recommendations."""

from pydantic import BaseModel, ConfigDict, Field

from models.choice import Acceptability
from models.network import ModeCategory, ModeLabel
from models.plan import Plan


class ScoredCandidate(BaseModel):
    """A candidate plan after energy, acceptability and adoption scoring."""
    model_config = ConfigDict(frozen=True)

    language: str
    plan: Plan
    dominant_mode: ModeLabel
    category: ModeCategory
    acceptability: Acceptability
    adoption_prob: float = Field(ge=0.0, le=1.0)
    saving_l: float
    expected_saving_l: float

    @property
    def word(self) -> str:
        return self.plan.word


class Recommendation(BaseModel):
    """The selected alternative and its expected energy saving."""
    model_config = ConfigDict(frozen=True)

    plan: Plan
    language: str
    dominant_mode: ModeLabel
    category: ModeCategory
    acceptability: Acceptability
    adoption_prob: float = Field(ge=0.0, le=1.0)
    saving_l: float
    expected_saving_l: float
    baseline_fuel_l: float = Field(ge=0.0)

    def to_summary(self) -> dict:
        return {
            "plan": self.plan.to_summary(),
            "language": self.language,
            "dominant_mode": self.dominant_mode.value,
            "category": self.category.value,
            "acceptability": self.acceptability.model_dump(),
            "adoption_prob": self.adoption_prob,
            "saving_l": self.saving_l,
            "expected_saving_l": self.expected_saving_l,
            "baseline_fuel_l": self.baseline_fuel_l,
        }
