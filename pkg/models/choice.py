"""Pydantic models for the utility-based choice framework."""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

CHOICE_FORMAT_VERSION = 1


class ChoiceSchema(BaseModel):
    """Declared attribute names x, person feature names f_p and alternatives."""
    model_config = ConfigDict(frozen=True)

    attributes: tuple[str, ...] = ()
    features: tuple[str, ...] = ()
    alternatives: tuple[str, ...] = Field(min_length=1)


class ChoiceModel(BaseModel):
    """Multinomial logit parameters: shared γ, alternative-specific λ_a and constants."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    format_version: int = CHOICE_FORMAT_VERSION
    choice_schema: ChoiceSchema = Field(alias="schema")
    gamma: dict[str, float] = Field(default_factory=dict)
    lambdas: dict[str, dict[str, float]] = Field(default_factory=dict)
    constants: dict[str, float] = Field(default_factory=dict)
    reference: str
    log_likelihood: float | None = None
    iterations: int | None = None

    @model_validator(mode="after")
    def _consistent(self) -> "ChoiceModel":
        schema = self.choice_schema
        if self.reference not in schema.alternatives:
            raise ValueError(f"reference alternative {self.reference!r} not in schema")
        if set(self.gamma) - set(schema.attributes):
            raise ValueError("gamma names attributes outside the schema")
        for alt, weights in self.lambdas.items():
            if alt not in schema.alternatives:
                raise ValueError(f"lambda for unknown alternative {alt!r}")
            if set(weights) - set(schema.features):
                raise ValueError(f"lambda for {alt!r} names features outside the schema")
        if set(self.constants) - set(schema.alternatives):
            raise ValueError("constant for unknown alternative")
        if any(v != 0.0 for v in self.lambdas.get(self.reference, {}).values()) or self.constants.get(self.reference, 0.0) != 0.0:
            raise ValueError("the reference alternative must have zero λ and constant")
        values = list(self.gamma.values()) + list(self.constants.values())
        values += [w for weights in self.lambdas.values() for w in weights.values()]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("choice parameters must be finite")
        return self


class ChoiceAlternative(BaseModel):
    """One alternative in a choice set with its attribute values x_i."""
    model_config = ConfigDict(frozen=True)

    name: str
    attributes: dict[str, float] = Field(default_factory=dict)


class ChoiceRecord(BaseModel):
    """An observed choice: the chosen alternative among a choice set, for person f_p."""
    model_config = ConfigDict(frozen=True)

    chosen: str
    alternatives: tuple[ChoiceAlternative, ...] = Field(min_length=1)
    features: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _chosen_present(self) -> "ChoiceRecord":
        if self.chosen not in {alt.name for alt in self.alternatives}:
            raise ValueError(f"chosen alternative {self.chosen!r} not in its choice set")
        return self


class Acceptability(BaseModel):
    """Switching gain Δ, odds e^Δ and recommended-mode probability Pr(r,p)."""
    model_config = ConfigDict(frozen=True)

    delta: float
    odds: float = Field(gt=0.0)
    prob: float = Field(ge=0.0, le=1.0)
