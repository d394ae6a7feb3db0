"""Stand-in mesoscopic energy and delay model.

Fuel is a polynomial rate in speed applied to motorized edge lengths; delay is
the BPR excess over free-flow time. Coefficients live in configuration.
"""

import logging
import math
from collections.abc import Mapping
from typing import Protocol

from models.energy import DelayParams, FuelModel, VolumeDelay
from models.network import Edge, ModeLabel, TransportGraph
from models.plan import Plan

logger = logging.getLogger(__name__)


class _Traversed(Protocol):
    mode: ModeLabel
    length_m: float


def edge_fuel(fuel_model: FuelModel, edge: _Traversed, speed_mps: float) -> float:
    """Liters burnt traversing `edge` at `speed_mps`; zero for walk, cycle and subway."""
    if speed_mps <= 0:
        raise ValueError(f"speed must be positive, got {speed_mps}")
    length_km = edge.length_m / 1000.0
    if edge.mode is ModeLabel.DRIVE:
        return fuel_model.fuel.rate(speed_mps) * length_km
    if edge.mode is ModeLabel.RIDE:
        return fuel_model.ride_fuel.rate(speed_mps) * length_km
    if edge.mode is ModeLabel.MOTORCYCLE:
        return fuel_model.motorcycle_fuel.rate(speed_mps) * length_km
    if edge.mode is ModeLabel.BUS:
        return fuel_model.bus_fuel.rate(speed_mps) * length_km * fuel_model.bus_factor
    return 0.0


def plan_energy(fuel_model: FuelModel, plan: Plan, speeds: Mapping[str, float] | None = None) -> float:
    """Sum of edge fuel over the plan.

    `speeds` maps edge id to an effective speed (e.g. congested drive speed);
    other steps use length over in-vehicle time.
    """
    speeds = speeds or {}
    return math.fsum(
        edge_fuel(fuel_model, step, speeds.get(step.edge_id, step.length_m / step.travel_s))
        for step in plan.steps
    )


def energy_saving(
    fuel_model: FuelModel,
    baseline_plan: Plan,
    alternative_plan: Plan,
    speeds: Mapping[str, float] | None = None,
) -> float:
    """Liters saved by taking the alternative instead of the baseline; may be negative."""
    return plan_energy(fuel_model, baseline_plan, speeds) - plan_energy(fuel_model, alternative_plan, speeds)


def volume_delay(edge: Edge, params: DelayParams) -> VolumeDelay:
    """BPR function of a fixed-speed road edge."""
    if edge.speed_mps is None:
        raise ValueError(f"edge {edge.id!r} has no free-flow speed")
    return VolumeDelay(
        alpha=params.alpha,
        beta=params.beta,
        capacity_vph=edge.capacity_vph or params.default_capacity_vph,
        t0_s=edge.length_m / edge.speed_mps,
    )


def link_delay(vd: VolumeDelay, volume: float) -> float:
    """Seconds of congestion delay per vehicle above free flow."""
    if volume < 0:
        raise ValueError(f"volume must be non-negative, got {volume}")
    if volume == 0:
        return 0.0
    return vd.t0_s * vd.alpha * (volume / vd.capacity_vph) ** vd.beta


def congested_speed(vd: VolumeDelay, length_m: float, volume: float) -> float:
    """Length over congested travel time."""
    return length_m / (vd.t0_s + link_delay(vd, volume))


def network_totals(
    graph: TransportGraph,
    volumes: Mapping[str, float],
    fuel_model: FuelModel,
    params: DelayParams,
    period_hours: float = 1.0,
) -> tuple[float, float]:
    """(total fuel in liters, total delay in hours) of drive link volumes.

    Volumes are vehicles over the period, turned into hourly flows for the
    volume-to-capacity ratio. Each vehicle burns fuel at the link's congested
    speed and suffers its BPR excess.
    """
    if period_hours <= 0:
        raise ValueError(f"period must be positive, got {period_hours}h")
    fuel_terms = []
    delay_terms = []
    for edge_id in sorted(volumes):
        volume = volumes[edge_id]
        if volume <= 0:
            continue
        edge = graph.edges[edge_id]
        vd = volume_delay(edge, params)
        flow = volume / period_hours
        speed = congested_speed(vd, edge.length_m, flow)
        fuel_terms.append(volume * edge_fuel(fuel_model, edge, speed))
        delay_terms.append(volume * link_delay(vd, flow) / 3600.0)
    return math.fsum(fuel_terms), math.fsum(delay_terms)
