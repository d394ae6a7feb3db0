"""Pydantic models for plans and plan costs."""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.network import ModeLabel

EVALUATIVES = ("duration_s", "distance_m", "fare_units", "energy_l")


class PlanStep(BaseModel):
    """One traversed edge: departure, waiting and in-vehicle time."""
    model_config = ConfigDict(frozen=True)

    edge_id: str
    mode: ModeLabel
    start_s: float
    wait_s: float = Field(default=0.0, ge=0.0)
    travel_s: float = Field(gt=0.0)
    length_m: float = Field(gt=0.0)
    fare_units: float = Field(default=0.0, ge=0.0)

    @property
    def duration_s(self) -> float:
        return self.wait_s + self.travel_s

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


class Plan(BaseModel):
    """Timed edge sequence satisfying a query."""
    model_config = ConfigDict(frozen=True)

    steps: tuple[PlanStep, ...] = Field(min_length=1)

    @property
    def word(self) -> str:
        return "".join(step.mode.value for step in self.steps)

    @property
    def depart_s(self) -> float:
        return self.steps[0].start_s

    @property
    def arrive_s(self) -> float:
        return self.steps[-1].end_s

    @property
    def distance_m(self) -> float:
        return math.fsum(step.length_m for step in self.steps)

    @property
    def mode_distances(self) -> dict[str, float]:
        """Distance breakdown keyed by mode symbol, in symbol order."""
        totals: dict[str, float] = {}
        for mode in ModeLabel:
            parts = [s.length_m for s in self.steps if s.mode is mode]
            if parts:
                totals[mode.value] = math.fsum(parts)
        return totals

    def to_summary(self) -> dict:
        return {
            "steps": [
                {
                    "edge_id": s.edge_id,
                    "mode": s.mode.value,
                    "start_s": s.start_s,
                    "wait_s": s.wait_s,
                    "travel_s": s.travel_s,
                    "length_m": s.length_m,
                }
                for s in self.steps
            ],
            "word": self.word,
            "depart": self.depart_s,
            "arrive": self.arrive_s,
            "distance": self.distance_m,
            "mode_distances": self.mode_distances,
        }


class CostWeights(BaseModel):
    """Weights θ over evaluative functions φ."""
    model_config = ConfigDict(frozen=True)

    theta: dict[str, float] = Field(default_factory=lambda: {"duration_s": 1.0})

    @field_validator("theta")
    @classmethod
    def _finite(cls, v: dict[str, float]) -> dict[str, float]:
        if not all(math.isfinite(w) for w in v.values()):
            raise ValueError("cost weights must be finite")
        if not any(w != 0.0 for w in v.values()):
            raise ValueError("at least one cost weight must be non-zero")
        return v


class CandidatePlan(BaseModel):
    """A language element with its time-optimal plan, if any."""
    model_config = ConfigDict(frozen=True)

    language: str
    plan: Plan | None = None


class CandidatePlanSet(BaseModel):
    """Π_p, in language-set order."""
    model_config = ConfigDict(frozen=True)

    candidates: tuple[CandidatePlan, ...] = ()

    @property
    def present(self) -> list[CandidatePlan]:
        return [c for c in self.candidates if c.plan is not None]
