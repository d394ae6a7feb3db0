"""Pydantic models for the stand-in mesoscopic energy and delay model.

Default coefficients are NOT calibrated against any vehicle fleet; they only
give plausible magnitudes (about 8 l/100 km for a car in town).
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

SPEED_DOMAIN_MPS = (1.0, 40.0)


class FuelCurve(BaseModel):
    """fuel_l_per_km(v) = a0 + a1·v + a2·v², v in m/s."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0

    @model_validator(mode="after")
    def _non_negative(self) -> "FuelCurve":
        lo, hi = SPEED_DOMAIN_MPS
        candidates = [lo, hi]
        if self.a2 > 0:
            vertex = -self.a1 / (2 * self.a2)
            if lo < vertex < hi:
                candidates.append(vertex)
        if min(self.rate(v) for v in candidates) < -1e-12:
            raise ValueError("fuel rate must be non-negative over the speed domain [1, 40] m/s")
        return self

    def rate(self, speed_mps: float) -> float:
        lo, hi = SPEED_DOMAIN_MPS
        v = min(max(speed_mps, lo), hi)
        return self.a0 + self.a1 * v + self.a2 * v * v


class FuelModel(BaseModel):
    """Per-mode fuel curves; walk, cycle and subway burn nothing."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    fuel: FuelCurve = FuelCurve(a0=0.12, a1=-0.004, a2=0.0001)
    ride_fuel: FuelCurve = FuelCurve(a0=0.12, a1=-0.004, a2=0.0001)
    motorcycle_fuel: FuelCurve = FuelCurve(a0=0.05, a1=-0.0012, a2=0.00003)
    bus_fuel: FuelCurve = FuelCurve(a0=0.45, a1=-0.01, a2=0.0003)
    bus_factor: float = Field(default=0.05, ge=0.0, le=1.0)


class DelayParams(BaseModel):
    """BPR parameters shared by every road link."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=0.15, ge=0.0)
    beta: float = Field(default=4.0, ge=1.0)
    default_capacity_vph: float = Field(default=1800.0, gt=0.0)


class VolumeDelay(BaseModel):
    """BPR volume-delay function of one link."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.15, ge=0.0)
    beta: float = Field(default=4.0, ge=1.0)
    capacity_vph: float = Field(gt=0.0)
    t0_s: float = Field(gt=0.0)
