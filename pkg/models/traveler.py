"""Traveler profile: the person features f_p used by every likelihood model."""

from pydantic import BaseModel, ConfigDict, Field

from models.network import ModeLabel

# Integer encodings, lowest value first:
#   education_level 1=less than high school .. 6=graduate degree
#   income_bracket 1=<$10k .. 10=>$250k
#   work_flexibility 1=fixed hours, 2=some flexibility, 3=fully flexible
ORDINAL_RANGES: dict[str, tuple[int, int]] = {
    "education_level": (1, 6),
    "income_bracket": (1, 10),
    "work_flexibility": (1, 3),
}

FEATURE_COLUMNS: tuple[str, ...] = (
    "trip_distance_m",
    "education_level",
    "household_size",
    "students",
    "workers",
    "hours_per_week",
    "income_bracket",
    "n_jobs",
    "work_flexibility",
    "n_autos",
    "n_bicycles",
    "has_license",
    "has_transit_pass",
    "transit_trips_last_week",
    "bike_trips_last_week",
    "walk_trips_last_week",
)


class TravelerProfile(BaseModel):
    """Trip, demographic, employment, accessibility and experience features."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    trip_distance_m: float = Field(gt=0.0)

    # demographics
    education_level: int = Field(default=3, ge=1, le=6)
    household_size: int = Field(default=2, ge=1)
    students: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=0)

    # employment
    hours_per_week: float = Field(default=40.0, ge=0.0, le=168.0)
    income_bracket: int = Field(default=5, ge=1, le=10)
    n_jobs: int = Field(default=1, ge=0)
    work_flexibility: int = Field(default=1, ge=1, le=3)

    # mode accessibility
    n_autos: int = Field(default=1, ge=0)
    n_bicycles: int = Field(default=0, ge=0)
    has_license: int = Field(default=1, ge=0, le=1)
    has_transit_pass: int = Field(default=0, ge=0, le=1)

    # mode experience
    transit_trips_last_week: int = Field(default=0, ge=0)
    bike_trips_last_week: int = Field(default=0, ge=0)
    walk_trips_last_week: int = Field(default=0, ge=0)

    usual_mode: ModeLabel = ModeLabel.DRIVE

    @property
    def owns_bicycle(self) -> bool:
        return self.n_bicycles > 0

    def to_features(self) -> dict[str, float]:
        """Feature vector in FEATURE_COLUMNS order."""
        return {name: float(getattr(self, name)) for name in FEATURE_COLUMNS}
