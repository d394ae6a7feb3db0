"""Pydantic models for the working model of adoption."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from models.choice import Acceptability


class AcceptabilityDefinition(str, Enum):
    """Which acceptability score feeds the adoption logit."""
    SWITCHING_GAIN = "switching_gain"
    ODDS = "odds"
    PROBABILITY = "probability"


# (intercept, coefficient) pairs of the survey fixed-effects fits.
COEFFICIENT_PRESETS: dict[str, tuple[AcceptabilityDefinition, float, float]] = {
    "binary_odds": (AcceptabilityDefinition.ODDS, -1.065, 1.780),
    "ordinal_odds": (AcceptabilityDefinition.ODDS, -0.025, 2.386),
    "binary_switching_gain": (AcceptabilityDefinition.SWITCHING_GAIN, -0.185, 0.104),
    "ordinal_switching_gain": (AcceptabilityDefinition.SWITCHING_GAIN, -0.017, 0.108),
    "binary_probability": (AcceptabilityDefinition.PROBABILITY, -1.080, 3.317),
    "ordinal_probability": (AcceptabilityDefinition.PROBABILITY, -0.964, 3.623),
}


class AdoptionModel(BaseModel):
    """σ(intercept + beta_odds · acceptability) with a Gaussian per-person intercept."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta_odds: float = 1.780
    intercept_mean: float = -1.065
    # No fitted value; configuration stand-in.
    intercept_sd: float = Field(default=1.0, ge=0.0)
    odds_cap: float = Field(default=20.0, gt=0.0)
    definition: AcceptabilityDefinition = AcceptabilityDefinition.ODDS

    @classmethod
    def from_preset(cls, name: str, intercept_sd: float = 1.0, odds_cap: float = 20.0) -> "AdoptionModel":
        if name not in COEFFICIENT_PRESETS:
            raise ValueError(f"unknown adoption preset {name!r}; choose from {sorted(COEFFICIENT_PRESETS)}")
        definition, intercept, beta = COEFFICIENT_PRESETS[name]
        return cls(
            beta_odds=beta,
            intercept_mean=intercept,
            intercept_sd=intercept_sd,
            odds_cap=odds_cap,
            definition=definition,
        )

    def covariate(self, acceptability: Acceptability) -> float:
        """The acceptability value this model was fitted on."""
        if self.definition is AcceptabilityDefinition.SWITCHING_GAIN:
            return acceptability.delta
        if self.definition is AcceptabilityDefinition.PROBABILITY:
            return acceptability.prob
        return acceptability.odds


class PersonIntercept(BaseModel):
    """Random intercept drawn once per simulated person."""
    model_config = ConfigDict(frozen=True)

    value: float


class LogisticFit(BaseModel):
    """Fixed-effects logistic refit of adoption on acceptability."""
    model_config = ConfigDict(frozen=True)

    intercept: float
    beta: float
    log_likelihood: float
    iterations: int = Field(ge=0)
    n_records: int = Field(ge=2)
