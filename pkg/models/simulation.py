"""Pydantic models for baseline-vs-influence simulation experiments."""

from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.network import Query
from models.traveler import TravelerProfile

REPORT_FORMAT_VERSION = 1

NAMED_PERIODS: dict[str, tuple[int, int]] = {
    "am": (7 * 3600, 10 * 3600),
    "pm": (16 * 3600, 19 * 3600),
}


class Condition(str, Enum):
    """Experiment condition."""
    BASELINE = "baseline"
    INFLUENCE = "influence"
    WALK_BOUND = "walk_bound"


class PeriodWindow(BaseModel):
    """Departure window of the simulated peak period."""
    model_config = ConfigDict(frozen=True)

    name: str = "am"
    start_s: int = Field(default=NAMED_PERIODS["am"][0], ge=0)
    end_s: int = Field(default=NAMED_PERIODS["am"][1])

    @model_validator(mode="after")
    def _ordered(self) -> "PeriodWindow":
        if self.end_s <= self.start_s:
            raise ValueError("period end must follow its start")
        return self

    @classmethod
    def named(cls, name: str) -> "PeriodWindow":
        if name not in NAMED_PERIODS:
            raise ValueError(f"unknown period {name!r}; choose from {sorted(NAMED_PERIODS)}")
        start, end = NAMED_PERIODS[name]
        return cls(name=name, start_s=start, end_s=end)

    @property
    def hours(self) -> float:
        return (self.end_s - self.start_s) / 3600.0


class GridSpec(BaseModel):
    """Deterministic desk-scale network: drive grid with walk, bike, bus and subway overlays."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    size: int = Field(default=8, ge=2)
    block_m: float = Field(default=400.0, gt=0.0)
    origin_lat: float = 34.05
    origin_lon: float = -118.25
    drive_speed_mps: float = Field(default=13.4, gt=0.0)
    drive_capacity_vph: float = Field(default=900.0, gt=0.0)
    walk_speed_mps: float = Field(default=1.4, gt=0.0)
    cycle_speed_mps: float = Field(default=4.0, gt=0.0)
    bus_every: int = Field(default=2, ge=1)
    bus_speed_mps: float = Field(default=7.0, gt=0.0)
    bus_headway_s: int = Field(default=600, gt=0)
    subway: bool = True
    subway_speed_mps: float = Field(default=15.0, gt=0.0)
    subway_headway_s: int = Field(default=300, gt=0)
    service_start_s: int = Field(default=5 * 3600, ge=0)
    service_end_s: int = Field(default=24 * 3600, gt=0)


class PopulationSpec(BaseModel):
    """How travelers are sampled."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    size: int = Field(default=1000, ge=1)
    source_csv: Path | None = None
    # Marginals used when no source CSV is given.
    distance_log_mean: float = 8.0
    distance_log_sd: float = 0.7
    bicycle_share: float = Field(default=0.35, ge=0.0, le=1.0)
    transit_pass_share: float = Field(default=0.1, ge=0.0, le=1.0)


class Traveler(BaseModel):
    """A simulated regular driver with a usual trip."""
    model_config = ConfigDict(frozen=True)

    id: int
    profile: TravelerProfile
    query: Query
    seed: int


class Scenario(BaseModel):
    """Experiment definition; seeds are mandatory."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    seed: int
    graph_dir: Path | None = None
    grid: GridSpec = GridSpec()
    population: PopulationSpec = PopulationSpec()
    influenced_fraction: float = Field(default=0.10, ge=0.0, le=1.0)
    n_trials: int = Field(default=5, ge=1)
    period: PeriodWindow = PeriodWindow()
    max_trip_s: float = Field(default=7200.0, gt=0.0)
    forest_model: Path | None = None
    choice_model: Path | None = None
    languages: tuple[str, ...] | None = None
    background_vph: float = Field(default=600.0, ge=0.0)
    background_volumes: dict[str, float] = Field(default_factory=dict)
    background_noise: float = Field(default=0.05, ge=0.0)
    conditions: tuple[Condition, ...] = (Condition.BASELINE, Condition.INFLUENCE)

    @field_validator("period", mode="before")
    @classmethod
    def _named_period(cls, v):
        return PeriodWindow.named(v) if isinstance(v, str) else v

    @field_validator("conditions")
    @classmethod
    def _has_baseline(cls, v):
        if Condition.BASELINE not in v or len(v) < 2:
            raise ValueError("conditions must include baseline and at least one comparison")
        return tuple(dict.fromkeys(v))


class TrialResult(BaseModel):
    """Totals of one trial."""
    model_config = ConfigDict(frozen=True)

    condition: Condition
    trial_seed: int
    total_fuel_l: float = Field(ge=0.0)
    total_delay_hr: float = Field(ge=0.0)
    influenced: int = Field(ge=0)
    adopted: int = Field(ge=0)
    # Influenced travelers using each mode; "car" counts non-adopters.
    mode_counts: dict[str, int] = Field(default_factory=dict)


class MetricComparison(BaseModel):
    """Baseline vs comparison condition for one metric, with a Welch 95% interval."""
    model_config = ConfigDict(frozen=True)

    metric: str
    condition: Condition
    baseline_mean: float
    comparison_mean: float
    change_pct: float
    difference: float
    ci_low: float
    ci_high: float
    change_ci_low_pct: float
    change_ci_high_pct: float


class SimReport(BaseModel):
    """Aggregated experiment output."""
    model_config = ConfigDict(frozen=True)

    format_version: int = REPORT_FORMAT_VERSION
    scenario: str
    seed: int
    n_trials: int
    period: PeriodWindow
    trials: tuple[TrialResult, ...]
    means: dict[str, dict[str, float]]
    comparisons: tuple[MetricComparison, ...]
    # Per comparison condition: percent of influenced travelers using each mode.
    mode_share_pct: dict[str, dict[str, float]]
