"""Monte Carlo baseline-vs-influence experiments on a synthetic network and population.

Delay is computed once per trial from final link volumes; background traffic
is fixed per trial and only influenced travelers change their route.
"""

import logging
import math
from collections import Counter
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import stats

from config.settings import Estimator, Granularity, Settings
from models.adoption import AdoptionModel
from models.energy import DelayParams, FuelModel
from models.forest import ForestTarget
from models.network import Edge, ModeLabel, Node, Query, Schedule, TransportGraph
from models.plan import Plan
from models.simulation import (
    Condition,
    GridSpec,
    MetricComparison,
    PopulationSpec,
    Scenario,
    SimReport,
    Traveler,
    TrialResult,
)
from models.traveler import FEATURE_COLUMNS, TravelerProfile
from services.adoption_tools import sample_intercept
from services.choice_tools import load_choice_model
from services.copter_service import ChoiceEstimator, Copter, ForestEstimator, LikelihoodEstimator
from services.energy_tools import network_totals, plan_energy
from services.graph_service import build_graph, load_graph_dir
from services.likelihood_tools import load_forest, sample_profiles, synthesize_dataset, train_forest
from services.mode_language import load_languages_file
from services.planner_service import PlannerService
from utils.errors import ConfigError, EmptySource, InsufficientTrials, SchemaMismatch
from utils.helpers import derive_seeds, haversine_m, person_rng, read_json

logger = logging.getLogger(__name__)

METERS_PER_DEGREE_LAT = 111_320.0
TRAINING_ROWS = 5000
METRICS = ("fuel_l", "delay_hr")

MODE_NAMES = {
    ModeLabel.WALK: "walk",
    ModeLabel.CYCLE: "bike",
    ModeLabel.BUS: "bus",
    ModeLabel.SUBWAY: "train",
    ModeLabel.DRIVE: "car",
    ModeLabel.RIDE: "ride",
    ModeLabel.MOTORCYCLE: "motorcycle",
}


# ===== NETWORK =====

def _node_id(i: int, j: int) -> str:
    return f"n{i}_{j}"


def _line_schedule(
    schedule_id: str, ride_time: float, first_departure: int, headway: int, spec: GridSpec
) -> Schedule:
    departures = tuple(range(first_departure, spec.service_end_s, headway))
    return Schedule(id=schedule_id, ride_time_s=ride_time, departures=departures)


def build_grid_network(spec: GridSpec) -> TransportGraph:
    """Square grid of two-way drive, walk and cycle links with bus and subway lines on top.

    Buses run along every `bus_every`-th row and column; the subway runs along
    the middle row and column, stopping at every other node. Each transit
    segment has its own timetable, offset so a vehicle reaches successive stops
    one ride time apart.
    """
    grid = nx.grid_2d_graph(spec.size, spec.size)
    lat_step = spec.block_m / METERS_PER_DEGREE_LAT
    lon_step = spec.block_m / (METERS_PER_DEGREE_LAT * math.cos(math.radians(spec.origin_lat)))
    nodes = {
        (i, j): Node(id=_node_id(i, j), lat=spec.origin_lat + i * lat_step, lon=spec.origin_lon + j * lon_step)
        for i, j in sorted(grid.nodes)
    }

    def length(a: tuple[int, int], b: tuple[int, int]) -> float:
        na, nb = nodes[a], nodes[b]
        return haversine_m(na.lat, na.lon, nb.lat, nb.lon)

    edges: list[Edge] = []
    for a, b in sorted(grid.edges):
        meters = length(a, b)
        for u, v in ((a, b), (b, a)):
            tail, head = _node_id(*u), _node_id(*v)
            edges.append(Edge(id=f"d:{tail}>{head}", from_node=tail, to_node=head, mode=ModeLabel.DRIVE,
                              length_m=meters, speed_mps=spec.drive_speed_mps, capacity_vph=spec.drive_capacity_vph))
            edges.append(Edge(id=f"w:{tail}>{head}", from_node=tail, to_node=head, mode=ModeLabel.WALK,
                              length_m=meters, speed_mps=spec.walk_speed_mps))
            edges.append(Edge(id=f"c:{tail}>{head}", from_node=tail, to_node=head, mode=ModeLabel.CYCLE,
                              length_m=meters, speed_mps=spec.cycle_speed_mps))

    lines: list[tuple[str, ModeLabel, list[tuple[int, int]], float, int]] = []
    for k in range(0, spec.size, spec.bus_every):
        lines.append((f"b:row{k}", ModeLabel.BUS, [(k, j) for j in range(spec.size)], spec.bus_speed_mps, spec.bus_headway_s))
        lines.append((f"b:col{k}", ModeLabel.BUS, [(i, k) for i in range(spec.size)], spec.bus_speed_mps, spec.bus_headway_s))
    if spec.subway and spec.size >= 3:
        mid = spec.size // 2
        lines.append(("s:row", ModeLabel.SUBWAY, [(mid, j) for j in range(0, spec.size, 2)], spec.subway_speed_mps, spec.subway_headway_s))
        lines.append(("s:col", ModeLabel.SUBWAY, [(i, mid) for i in range(0, spec.size, 2)], spec.subway_speed_mps, spec.subway_headway_s))

    schedules: list[Schedule] = []
    for name, mode, stops, speed, headway in lines:
        for direction, sequence in (("fwd", stops), ("rev", stops[::-1])):
            offset = 0
            for seg, (a, b) in enumerate(zip(sequence, sequence[1:])):
                meters = length(a, b)
                ride = float(max(1, math.ceil(meters / speed)))
                schedule_id = f"{name}:{direction}:{seg}"
                first = spec.service_start_s + offset
                if first >= spec.service_end_s:
                    break
                schedules.append(_line_schedule(schedule_id, ride, first, headway, spec))
                tail, head = _node_id(*a), _node_id(*b)
                edges.append(Edge(id=schedule_id, from_node=tail, to_node=head, mode=mode,
                                  length_m=meters, schedule_id=schedule_id))
                offset += int(ride)

    graph = build_graph(nodes.values(), edges, schedules)
    logger.info(f"Built {spec.size}x{spec.size} grid: {len(graph.nodes)} nodes, {len(graph.edges)} edges, {len(graph.schedules)} transit segments")
    return graph


# ===== POPULATION =====

def _source_profiles(source: Path, rng: np.random.Generator, n: int) -> pd.DataFrame:
    try:
        frame = pd.read_csv(source, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptySource(f"{source} is empty") from e
    missing = [c for c in FEATURE_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaMismatch(f"{source}: missing columns {missing}")
    frame = frame[list(FEATURE_COLUMNS)].apply(pd.to_numeric, errors="coerce")
    frame = frame[frame["trip_distance_m"] > 0]
    if frame.empty:
        raise EmptySource(f"{source} has no usable rows")
    frame = frame.fillna(frame.median(numeric_only=True)).fillna(0.0)
    rows = rng.integers(0, len(frame), size=n)
    return frame.iloc[rows].reset_index(drop=True)


def _profile(row: dict) -> TravelerProfile:
    values = {name: row[name] for name in FEATURE_COLUMNS}
    for name in FEATURE_COLUMNS:
        if name not in ("trip_distance_m", "hours_per_week"):
            values[name] = int(round(values[name]))
    return TravelerProfile(**values, usual_mode=ModeLabel.DRIVE)


def generate_population(scenario: Scenario, graph: TransportGraph, seed: int | None = None) -> list[Traveler]:
    """Sample profiles and usual trips, deterministically per seed.

    Profiles come from the source CSV (with replacement) or from the configured
    marginals. The destination is the node whose straight-line distance from
    a random drive-network origin is closest to the profile's trip distance.
    """
    spec: PopulationSpec = scenario.population
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    if spec.source_csv is not None:
        frame = _source_profiles(spec.source_csv, rng, spec.size)
    else:
        frame = sample_profiles(
            rng,
            spec.size,
            distance_log_mean=spec.distance_log_mean,
            distance_log_sd=spec.distance_log_sd,
            bicycle_share=spec.bicycle_share,
            transit_pass_share=spec.transit_pass_share,
        )

    drive_nodes = sorted({e.from_node for e in graph.edges.values() if e.mode is ModeLabel.DRIVE})
    if len(drive_nodes) < 2:
        raise EmptySource("the network has fewer than two drive nodes")
    coords = np.array([[graph.nodes[n].lat, graph.nodes[n].lon] for n in drive_nodes])

    travelers = []
    for idx, row in enumerate(frame.to_dict("records")):
        profile = _profile(row)
        o = int(rng.integers(0, len(drive_nodes)))
        lat, lon = coords[o]
        gaps = np.array([
            abs(haversine_m(lat, lon, c[0], c[1]) - profile.trip_distance_m) if k != o else np.inf
            for k, c in enumerate(coords)
        ])
        d = int(np.argmin(gaps))
        depart = int(rng.integers(scenario.period.start_s, scenario.period.end_s))
        travelers.append(Traveler(
            id=idx,
            profile=profile,
            query=Query(origin=drive_nodes[o], destination=drive_nodes[d], start_s=depart, deadline_s=depart + scenario.max_trip_s),
            seed=int(rng.integers(0, 2**32)),
        ))
    logger.info(f"Generated {len(travelers)} travelers ({'source CSV' if spec.source_csv else 'marginals'})")
    return travelers


def choose_influenced(n: int, fraction: float, seed: int) -> frozenset[int]:
    """Ids of the influenced travelers: a seeded random subset of round(fraction·n)."""
    k = int(round(fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    return frozenset(int(i) for i in order[:k])


# ===== STATISTICS =====

def welch_interval(baseline: list[float], comparison: list[float], confidence: float = 0.95) -> tuple[float, float, float]:
    """(difference, low, high) for mean(baseline) - mean(comparison) with a Welch t interval."""
    a = np.asarray(baseline, dtype=float)
    b = np.asarray(comparison, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise InsufficientTrials("a confidence interval needs at least two trials per condition")
    diff = float(a.mean() - b.mean())
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    se = math.sqrt(va + vb)
    if se == 0:
        return diff, diff, diff
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    half = float(stats.t.ppf(0.5 + confidence / 2, df)) * se
    return diff, diff - half, diff + half


def compare_metric(metric: str, condition: Condition, baseline: list[float], comparison: list[float]) -> MetricComparison:
    diff, low, high = welch_interval(baseline, comparison)
    base_mean = float(np.mean(baseline))
    comp_mean = float(np.mean(comparison))
    if base_mean == 0:
        logger.warning(f"Baseline mean of {metric} is 0; percent change reported as 0")
        scale = 0.0
    else:
        scale = 100.0 / base_mean
    return MetricComparison(
        metric=metric,
        condition=condition,
        baseline_mean=base_mean,
        comparison_mean=comp_mean,
        change_pct=(comp_mean - base_mean) * scale,
        difference=diff,
        ci_low=low,
        ci_high=high,
        change_ci_low_pct=-high * scale,
        change_ci_high_pct=-low * scale,
    )


# ===== EXPERIMENT =====

def load_scenario(path: Path) -> Scenario:
    """Read scenario.json; relative paths resolve against its directory."""
    payload = read_json(path)
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: scenario must be a JSON object")
    base = path.parent
    for key in ("graph_dir", "forest_model", "choice_model"):
        if payload.get(key):
            payload[key] = str((base / payload[key]).resolve())
    population = payload.get("population")
    if isinstance(population, dict) and population.get("source_csv"):
        population["source_csv"] = str((base / population["source_csv"]).resolve())
    try:
        scenario = Scenario.model_validate(payload)
    except ValidationError as e:
        logger.error(f"Invalid scenario {path}: {e}")
        raise
    logger.info(f"Loaded scenario {scenario.name!r} (seed {scenario.seed}, {scenario.n_trials} trials)")
    return scenario


def build_estimator(scenario: Scenario, settings: Settings) -> LikelihoodEstimator:
    """Estimator named by the settings; an untrained forest is trained on synthetic survey data."""
    if settings.copter.estimator is Estimator.MNL:
        if scenario.choice_model is None:
            raise ConfigError("copter.estimator is 'mnl' but the scenario names no choice_model")
        return ChoiceEstimator(load_choice_model(scenario.choice_model))
    if scenario.forest_model is not None:
        return ForestEstimator(load_forest(scenario.forest_model))
    target = ForestTarget.MODE if settings.copter.granularity is Granularity.MODE else ForestTarget.CATEGORY
    logger.info(f"No forest model given; training a {target.value} forest on {TRAINING_ROWS} synthetic rows")
    dataset = synthesize_dataset(TRAINING_ROWS, scenario.seed, target=target)
    return ForestEstimator(train_forest(dataset, settings.forest, scenario.seed))


class SimulationService:
    """Runs trials of one scenario over a fixed population."""

    def __init__(
        self,
        scenario: Scenario,
        graph: TransportGraph,
        copter: Copter,
        adoption_model: AdoptionModel,
        fuel_model: FuelModel,
        delay_params: DelayParams,
    ):
        self.scenario = scenario
        self.graph = graph
        self.copter = copter
        self.adoption_model = adoption_model
        self.fuel_model = fuel_model
        self.delay_params = delay_params
        self.travelers = generate_population(scenario, graph)
        self.influenced = choose_influenced(len(self.travelers), scenario.influenced_fraction, scenario.seed)
        self._baselines: dict[int, Plan | None] = {}
        self._walks: dict[int, Plan | None] = {}

    @classmethod
    def from_settings(cls, scenario: Scenario, settings: Settings) -> "SimulationService":
        graph = load_graph_dir(scenario.graph_dir) if scenario.graph_dir else build_grid_network(scenario.grid)
        languages = list(scenario.languages) if scenario.languages else None
        if languages is None and settings.languages_file is not None:
            languages = load_languages_file(settings.languages_file)
        planner = PlannerService(graph, settings.planner.search, settings.planner.fare_per_boarding)
        adoption_model = settings.adoption.model()
        copter = Copter(planner, build_estimator(scenario, settings), adoption_model, settings.energy, settings.copter, languages)
        return cls(scenario, graph, copter, adoption_model, settings.energy, settings.delay)

    def baseline_plan(self, traveler: Traveler) -> Plan | None:
        if traveler.id not in self._baselines:
            self._baselines[traveler.id] = self.copter.baseline_plan(traveler.query)
        return self._baselines[traveler.id]

    def walk_plan(self, traveler: Traveler) -> Plan | None:
        if traveler.id not in self._walks:
            self._walks[traveler.id] = self.copter.walk_plan(traveler.query)
        return self._walks[traveler.id]

    def _background(self, rng: np.random.Generator) -> dict[str, float]:
        hours = self.scenario.period.hours
        volumes = {}
        for edge_id in sorted(self.graph.edges):
            if self.graph.edges[edge_id].mode is not ModeLabel.DRIVE:
                continue
            vph = self.scenario.background_volumes.get(edge_id, self.scenario.background_vph)
            factor = max(0.0, 1.0 + rng.normal(0.0, self.scenario.background_noise)) if self.scenario.background_noise > 0 else 1.0
            volumes[edge_id] = vph * hours * factor
        return volumes

    def _alternative(self, traveler: Traveler, condition: Condition, trial_seed: int, baseline: Plan) -> Plan | None:
        """The plan an influenced traveler follows instead of driving, or None if they keep driving."""
        if condition is Condition.WALK_BOUND:
            return self.walk_plan(traveler)
        rng = person_rng(trial_seed, traveler.seed)
        intercept = sample_intercept(self.adoption_model, rng)
        draw = rng.random()
        recommendation = self.copter.recommend(traveler.query, traveler.profile, intercept, baseline=baseline)
        if recommendation is None or draw >= recommendation.adoption_prob:
            return None
        return recommendation.plan

    def run_trial(self, condition: Condition, trial_seed: int) -> TrialResult:
        """Route every traveler, accumulate link volumes and total fuel and delay."""
        volumes = self._background(np.random.default_rng(trial_seed))
        rider_fuel = []
        mode_counts: Counter[str] = Counter()
        influenced = adopted = unroutable = 0

        for traveler in self.travelers:
            baseline = self.baseline_plan(traveler)
            if baseline is None:
                unroutable += 1
                continue
            chosen = baseline
            if traveler.id in self.influenced:
                influenced += 1
                alternative = None
                if condition is not Condition.BASELINE:
                    try:
                        alternative = self._alternative(traveler, condition, trial_seed, baseline)
                    except Exception as e:
                        logger.error(f"Trial {trial_seed} ({condition.value}) aborted at traveler {traveler.id}: {e}")
                        raise
                if alternative is None:
                    mode_counts[MODE_NAMES[ModeLabel.DRIVE]] += 1
                else:
                    adopted += 1
                    chosen = alternative
                    modes = {step.mode for step in alternative.steps}
                    # Access walking is not a mode share; all-walk trips are.
                    for mode in sorted(modes - {ModeLabel.WALK} or modes, key=lambda m: m.value):
                        mode_counts[MODE_NAMES[mode]] += 1
            for step in chosen.steps:
                if step.mode is ModeLabel.DRIVE:
                    volumes[step.edge_id] = volumes.get(step.edge_id, 0.0) + 1.0
            if chosen is not baseline:
                rider_fuel.append(plan_energy(self.fuel_model, chosen))

        if unroutable:
            logger.warning(f"{unroutable} travelers have no drive plan before their deadline and were skipped")
        road_fuel, delay_hr = network_totals(self.graph, volumes, self.fuel_model, self.delay_params, self.scenario.period.hours)
        result = TrialResult(
            condition=condition,
            trial_seed=trial_seed,
            total_fuel_l=road_fuel + math.fsum(rider_fuel),
            total_delay_hr=delay_hr,
            influenced=influenced,
            adopted=adopted,
            mode_counts=dict(sorted(mode_counts.items())),
        )
        logger.info(f"Trial {trial_seed} {condition.value}: fuel {result.total_fuel_l:.1f} l, delay {delay_hr:.1f} h, adopted {adopted}/{influenced}")
        return result

    def run_experiment(self) -> SimReport:
        """n_trials per condition with shared derived seeds, Welch intervals and mode shares."""
        scenario = self.scenario
        if scenario.n_trials < 2:
            raise InsufficientTrials(f"need at least 2 trials per condition, got {scenario.n_trials}")
        seeds = derive_seeds(scenario.seed, scenario.n_trials)
        trials = [self.run_trial(condition, seed) for condition in scenario.conditions for seed in seeds]

        def series(condition: Condition, metric: str) -> list[float]:
            return [t.total_fuel_l if metric == "fuel_l" else t.total_delay_hr for t in trials if t.condition is condition]

        means = {
            condition.value: {metric: float(np.mean(series(condition, metric))) for metric in METRICS}
            for condition in scenario.conditions
        }
        comparisons = []
        mode_share: dict[str, dict[str, float]] = {}
        for condition in scenario.conditions:
            if condition is Condition.BASELINE:
                continue
            for metric in METRICS:
                comparisons.append(compare_metric(metric, condition, series(Condition.BASELINE, metric), series(condition, metric)))
            shares: dict[str, list[float]] = {}
            runs = [t for t in trials if t.condition is condition]
            for name in sorted({m for t in runs for m in t.mode_counts}):
                shares[name] = [100.0 * t.mode_counts.get(name, 0) / t.influenced if t.influenced else 0.0 for t in runs]
            mode_share[condition.value] = {name: float(np.mean(v)) for name, v in shares.items()}

        return SimReport(
            scenario=scenario.name,
            seed=scenario.seed,
            n_trials=scenario.n_trials,
            period=scenario.period,
            trials=tuple(trials),
            means=means,
            comparisons=tuple(comparisons),
            mode_share_pct=mode_share,
        )


def run_experiment(scenario: Scenario, settings: Settings) -> SimReport:
    """Build the network, population and models for a scenario and run every condition."""
    return SimulationService.from_settings(scenario, settings).run_experiment()
