"""Configuration settings for Copter."""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from models.adoption import COEFFICIENT_PRESETS, AcceptabilityDefinition, AdoptionModel
from models.energy import DelayParams, FuelModel
from models.forest import ForestParams
from utils.errors import ConfigError
from utils.helpers import read_json

APP_NAME = "copter"
APP_VERSION = "1.0.0"

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class Granularity(str, Enum):
    """Label space acceptability is computed over."""
    CATEGORY = "category"
    MODE = "mode"


class SelectionRule(str, Enum):
    """How the recommended candidate is chosen."""
    EXPECTED_SAVING = "expected_saving"
    ADOPTION = "adoption"


class Estimator(str, Enum):
    """Source of Pr(r,p) and Pr(u,p)."""
    FOREST = "forest"
    MNL = "mnl"


class PlannerSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    search: Literal["dijkstra", "astar"] = "dijkstra"
    fare_per_boarding: float = Field(default=1.0, ge=0.0)


class AdoptionSettings(BaseModel):
    """Adoption coefficients; a preset replaces intercept, beta and definition."""
    model_config = ConfigDict(extra="forbid")

    preset: str | None = None
    beta_odds: float = 1.780
    intercept_mean: float = -1.065
    intercept_sd: float = Field(default=1.0, ge=0.0)
    odds_cap: float = Field(default=20.0, gt=0.0)
    definition: AcceptabilityDefinition = AcceptabilityDefinition.ODDS

    @field_validator("preset")
    @classmethod
    def validate_preset(cls, v):
        """Validate the preset names a known fit."""
        if v is not None and v not in COEFFICIENT_PRESETS:
            raise ValueError(f"unknown adoption preset {v!r}; choose from {sorted(COEFFICIENT_PRESETS)}")
        return v

    def model(self) -> AdoptionModel:
        if self.preset is not None:
            return AdoptionModel.from_preset(self.preset, intercept_sd=self.intercept_sd, odds_cap=self.odds_cap)
        return AdoptionModel(
            beta_odds=self.beta_odds,
            intercept_mean=self.intercept_mean,
            intercept_sd=self.intercept_sd,
            odds_cap=self.odds_cap,
            definition=self.definition,
        )


class CopterSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    granularity: Granularity = Granularity.CATEGORY
    selection_rule: SelectionRule = SelectionRule.EXPECTED_SAVING
    estimator: Estimator = Estimator.FOREST


class Settings(BaseSettings):
    """Application settings."""
    model_config = SettingsConfigDict(extra="forbid", populate_by_name=True, case_sensitive=False)

    log_level: Literal["error", "warn", "info", "debug"] = Field(
        default="warn", validation_alias=AliasChoices("log_level", "COPTER_LOG")
    )
    planner: PlannerSettings = PlannerSettings()
    adoption: AdoptionSettings = AdoptionSettings()
    energy: FuelModel = FuelModel()
    delay: DelayParams = DelayParams()
    copter: CopterSettings = CopterSettings()
    forest: ForestParams = ForestParams()
    languages_file: Path | None = None

    @field_validator("log_level", mode="before")
    @classmethod
    def validate_log_level(cls, v):
        """Accept level names in any case; 'warning' means 'warn'."""
        v = str(v).strip().lower()
        return "warn" if v == "warning" else v

    @field_validator("languages_file")
    @classmethod
    def validate_languages_file(cls, v):
        """Resolve the languages file path."""
        return v.resolve() if v is not None else v


def _parse_override(item: str) -> tuple[list[str], Any]:
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} must look like key.path=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def _apply_override(tree: dict, path: list[str], value: Any) -> None:
    node = tree
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"cannot set {'.'.join(path)}: {part!r} is not a section")
        node = child
    node[path[-1]] = value


def load_settings(config_path: Path | None = None, overrides: list[str] | tuple[str, ...] = ()) -> Settings:
    """Merge defaults, a JSON config file and key.path=value overrides, in that order."""
    global _settings
    tree: dict[str, Any] = {}
    if config_path is not None:
        loaded = read_json(config_path)
        if not isinstance(loaded, dict):
            raise ConfigError(f"{config_path}: configuration must be a JSON object")
        tree = loaded
        if tree.get("languages_file") is not None:
            candidate = Path(tree["languages_file"])
            if not candidate.is_absolute():
                tree["languages_file"] = str(config_path.parent / candidate)
    for item in overrides:
        path, value = _parse_override(item)
        _apply_override(tree, path, value)
    _settings = Settings(**tree)
    return _settings


# Global settings instance
_settings: Settings | None = None


def get_settings() -> Settings:
    """Get application settings."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings
