"""Tests for the grid network, population sampling, trials and interval statistics."""

import json

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from models.adoption import AdoptionModel
from models.energy import DelayParams, FuelModel
from models.network import ModeLabel
from models.simulation import Condition, GridSpec, PeriodWindow, PopulationSpec, Scenario
from services.copter_service import Copter
from services.energy_tools import plan_energy
from services.planner_service import PlannerService
from services.simulation_tools import (
    SimulationService,
    build_grid_network,
    choose_influenced,
    compare_metric,
    generate_population,
    load_scenario,
    welch_interval,
)
from utils.errors import InsufficientTrials

SMALL_GRID = GridSpec(size=4)

SURVEY_HEADER = (
    "trip_distance_m,education_level,household_size,students,workers,hours_per_week,income_bracket,n_jobs,"
    "work_flexibility,n_autos,n_bicycles,has_license,has_transit_pass,transit_trips_last_week,"
    "bike_trips_last_week,walk_trips_last_week"
)


def _scenario(**overrides):
    values = {
        "seed": 3,
        "grid": SMALL_GRID,
        "population": PopulationSpec(size=20, distance_log_mean=6.9, distance_log_sd=0.4),
        "influenced_fraction": 0.5,
        "n_trials": 2,
        "background_vph": 0.0,
        "background_noise": 0.0,
    }
    values.update(overrides)
    return Scenario(**values)


@pytest.fixture(scope="module")
def small_grid():
    return build_grid_network(SMALL_GRID)


@pytest.fixture
def walking_service(small_grid, fixed_estimator):
    """Every influenced driver is offered walking and always accepts."""

    def make(scenario, delay=DelayParams(alpha=0.0)):
        adoption = AdoptionModel(intercept_mean=50.0, intercept_sd=0.0)
        copter = Copter(PlannerService(small_grid), fixed_estimator(), adoption, FuelModel(), languages=["w+"])
        return SimulationService(scenario, small_grid, copter, adoption, FuelModel(), delay)

    return make


def test_grid_has_every_overlay(small_grid):
    modes = {edge.mode for edge in small_grid.edges.values()}
    drive = [e for e in small_grid.edges.values() if e.mode is ModeLabel.DRIVE]

    assert len(small_grid.nodes) == 16
    assert modes == {ModeLabel.DRIVE, ModeLabel.WALK, ModeLabel.CYCLE, ModeLabel.BUS, ModeLabel.SUBWAY}
    # 24 grid links, both directions.
    assert len(drive) == 48
    assert all(e.capacity_vph == SMALL_GRID.drive_capacity_vph for e in drive)


def test_grid_is_deterministic(small_grid):
    again = build_grid_network(SMALL_GRID)

    assert again.edges == small_grid.edges
    assert again.schedules == small_grid.schedules


def test_transit_segments_run_within_service_hours(small_grid):
    for schedule in small_grid.schedules.values():
        assert schedule.departures[0] >= SMALL_GRID.service_start_s
        assert schedule.departures[-1] < SMALL_GRID.service_end_s


def test_population_is_reproducible(small_grid):
    scenario = _scenario()

    first = generate_population(scenario, small_grid)
    second = generate_population(scenario, small_grid)

    assert first == second
    assert len(first) == 20


def test_population_trips_fit_the_period(small_grid):
    scenario = _scenario()

    for traveler in generate_population(scenario, small_grid):
        assert traveler.query.origin != traveler.query.destination
        assert scenario.period.start_s <= traveler.query.start_s < scenario.period.end_s
        assert traveler.query.deadline_s == traveler.query.start_s + scenario.max_trip_s


def test_population_from_source_csv(tmp_path, small_grid):
    source = tmp_path / "survey.csv"
    source.write_text(
        f"{SURVEY_HEADER}\n800,3,2,0,1,40,5,1,1,1,0,1,0,0,0,2\n1200,4,3,1,2,,6,1,2,2,1,1,0,1,1,3\n",
        encoding="utf-8",
    )
    scenario = _scenario(population=PopulationSpec(size=6, source_csv=source))

    travelers = generate_population(scenario, small_grid)

    assert len(travelers) == 6
    assert {t.profile.trip_distance_m for t in travelers} <= {800.0, 1200.0}
    # The blank cell takes the column median.
    assert all(t.profile.hours_per_week == 40.0 for t in travelers)


def test_influenced_subset_size_and_determinism():
    chosen = choose_influenced(20, 0.25, seed=1)

    assert len(chosen) == 5
    assert chosen == choose_influenced(20, 0.25, seed=1)
    assert chosen <= frozenset(range(20))
    assert choose_influenced(20, 0.0, seed=1) == frozenset()


def test_walking_savings_are_conserved(walking_service):
    service = walking_service(_scenario())

    baseline = service.run_trial(Condition.BASELINE, 11)
    influence = service.run_trial(Condition.INFLUENCE, 11)

    saved = [
        plan_energy(FuelModel(), service.baseline_plan(t))
        for t in service.travelers
        if t.id in service.influenced and service.baseline_plan(t) is not None
    ]
    assert influence.adopted == influence.influenced == len(saved)
    assert influence.mode_counts == {"walk": len(saved)}
    assert baseline.total_fuel_l - influence.total_fuel_l == pytest.approx(sum(saved), rel=1e-9)
    assert influence.total_delay_hr == 0.0


def test_walk_bound_matches_full_walking_adoption(walking_service):
    service = walking_service(_scenario())

    walk_bound = service.run_trial(Condition.WALK_BOUND, 5)
    influence = service.run_trial(Condition.INFLUENCE, 5)

    assert walk_bound.total_fuel_l == pytest.approx(influence.total_fuel_l)


def test_no_influenced_travelers_changes_nothing(walking_service):
    service = walking_service(_scenario(influenced_fraction=0.0))

    baseline = service.run_trial(Condition.BASELINE, 2)
    influence = service.run_trial(Condition.INFLUENCE, 2)

    assert influence.total_fuel_l == baseline.total_fuel_l
    assert influence.adopted == 0


def test_trials_are_reproducible(walking_service):
    service = walking_service(_scenario(background_vph=300.0, background_noise=0.1), DelayParams())

    first = service.run_trial(Condition.INFLUENCE, 7)
    second = service.run_trial(Condition.INFLUENCE, 7)

    assert first == second
    assert first.total_delay_hr > 0.0


def test_experiment_reports_every_condition(walking_service):
    scenario = _scenario(conditions=(Condition.BASELINE, Condition.INFLUENCE, Condition.WALK_BOUND))

    report = walking_service(scenario).run_experiment()

    assert len(report.trials) == 6
    assert set(report.means) == {"baseline", "influence", "walk_bound"}
    assert {(c.metric, c.condition) for c in report.comparisons} == {
        ("fuel_l", Condition.INFLUENCE), ("delay_hr", Condition.INFLUENCE),
        ("fuel_l", Condition.WALK_BOUND), ("delay_hr", Condition.WALK_BOUND),
    }
    assert report.mode_share_pct["influence"] == {"walk": 100.0}
    fuel = next(c for c in report.comparisons if c.metric == "fuel_l" and c.condition is Condition.INFLUENCE)
    assert fuel.change_pct < 0


def test_single_trial_has_no_interval(walking_service):
    with pytest.raises(InsufficientTrials):
        walking_service(_scenario(n_trials=1)).run_experiment()


def test_constant_trials_give_degenerate_interval():
    comparison = compare_metric("fuel_l", Condition.INFLUENCE, [10, 10, 10, 10], [8, 8, 8, 8])

    assert comparison.change_pct == pytest.approx(-20.0)
    assert comparison.difference == pytest.approx(2.0)
    assert (comparison.ci_low, comparison.ci_high) == (pytest.approx(2.0), pytest.approx(2.0))
    assert comparison.change_ci_low_pct == pytest.approx(-20.0)


def test_welch_interval_matches_scipy():
    rng = np.random.default_rng(0)
    a = list(rng.normal(100, 5, 8))
    b = list(rng.normal(90, 12, 6))

    diff, low, high = welch_interval(a, b)
    expected = stats.ttest_ind(a, b, equal_var=False).confidence_interval(0.95)

    assert diff == pytest.approx(np.mean(a) - np.mean(b))
    assert (low, high) == (pytest.approx(expected.low), pytest.approx(expected.high))


def test_welch_needs_two_trials():
    with pytest.raises(InsufficientTrials):
        welch_interval([1.0], [1.0, 2.0])


def test_zero_baseline_reports_no_change():
    comparison = compare_metric("delay_hr", Condition.INFLUENCE, [0.0, 0.0], [0.0, 0.0])

    assert comparison.change_pct == 0.0


def test_scenario_requires_a_seed():
    with pytest.raises(ValidationError):
        Scenario()


def test_scenario_requires_a_baseline_condition():
    with pytest.raises(ValidationError):
        Scenario(seed=1, conditions=(Condition.INFLUENCE, Condition.WALK_BOUND))


def test_named_period():
    scenario = Scenario(seed=1, period="pm")

    assert scenario.period == PeriodWindow.named("pm")
    assert scenario.period.hours == 3.0


def test_scenario_paths_resolve_against_its_directory(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"seed": 4, "graph_dir": "net", "n_trials": 3}), encoding="utf-8")

    scenario = load_scenario(path)

    assert scenario.graph_dir == (tmp_path / "net").resolve()
    assert scenario.n_trials == 3


# ===== MIXED ADOPTION =====

@pytest.fixture
def transit_service(small_grid, fixed_estimator):
    """Influenced drivers are offered walking and transit and adopt at the default rates."""

    def make(scenario, languages=("w+", "w*b+w*", "w*s+w*")):
        adoption = AdoptionModel()
        copter = Copter(PlannerService(small_grid), fixed_estimator(), adoption, FuelModel(), languages=list(languages))
        return SimulationService(scenario, small_grid, copter, adoption, FuelModel(), DelayParams())

    return make


def test_influence_never_adds_fuel_over_many_trials(transit_service):
    service = transit_service(_scenario(background_vph=300.0, background_noise=0.1))

    baseline = [service.run_trial(Condition.BASELINE, seed).total_fuel_l for seed in range(20)]
    influence = [service.run_trial(Condition.INFLUENCE, seed).total_fuel_l for seed in range(20)]

    assert sum(influence) <= sum(baseline) + 1e-9
    assert all(i <= b + 1e-9 for i, b in zip(influence, baseline))


def test_drivers_and_adopters_add_up_to_the_influenced(transit_service):
    service = transit_service(_scenario())

    trials = [service.run_trial(Condition.INFLUENCE, seed) for seed in range(5)]

    for trial in trials:
        assert trial.mode_counts.get("car", 0) + trial.adopted == trial.influenced
    assert 0 < sum(t.adopted for t in trials) < sum(t.influenced for t in trials)


def test_access_walking_is_not_a_mode_share(transit_service):
    service = transit_service(_scenario(), languages=("w*b+w*",))

    for seed in range(5):
        trial = service.run_trial(Condition.INFLUENCE, seed)
        assert "walk" not in trial.mode_counts
        assert trial.mode_counts.get("bus", 0) == trial.adopted


def test_trial_does_not_depend_on_traveler_order(transit_service):
    forward = transit_service(_scenario(background_vph=300.0))
    backward = transit_service(_scenario(background_vph=300.0))
    backward.travelers = list(reversed(backward.travelers))

    for seed in (1, 2, 3):
        a = forward.run_trial(Condition.INFLUENCE, seed)
        b = backward.run_trial(Condition.INFLUENCE, seed)
        assert a.total_fuel_l == pytest.approx(b.total_fuel_l, rel=1e-12)
        assert a.total_delay_hr == pytest.approx(b.total_delay_hr, rel=1e-12)
        assert (a.adopted, a.mode_counts) == (b.adopted, b.mode_counts)


def test_population_follows_its_sampling_distributions(small_grid):
    spec = PopulationSpec(size=2000, distance_log_mean=8.0, distance_log_sd=0.7)
    scenario = _scenario(population=spec)

    travelers = generate_population(scenario, small_grid)
    distances = [t.profile.trip_distance_m for t in travelers]
    departures = [t.query.start_s for t in travelers]

    fit = stats.kstest(distances, "lognorm", args=(spec.distance_log_sd, 0.0, np.exp(spec.distance_log_mean)))
    assert fit.pvalue > 1e-3
    window = scenario.period.end_s - scenario.period.start_s
    assert stats.kstest(departures, "uniform", args=(scenario.period.start_s, window)).pvalue > 1e-3


@pytest.mark.slow
def test_desk_scale_experiment(fixed_estimator):
    grid = GridSpec()
    graph = build_grid_network(grid)
    scenario = Scenario(seed=20170501, grid=grid, population=PopulationSpec(size=1000), n_trials=5)
    adoption = AdoptionModel()
    copter = Copter(PlannerService(graph), fixed_estimator(), adoption, FuelModel())
    service = SimulationService(scenario, graph, copter, adoption, FuelModel(), DelayParams())

    report = service.run_experiment()

    assert len(report.trials) == 10
    baseline = [t for t in report.trials if t.condition is Condition.BASELINE]
    influence = [t for t in report.trials if t.condition is Condition.INFLUENCE]
    assert [t.trial_seed for t in baseline] == [t.trial_seed for t in influence]
    for b, i in zip(baseline, influence):
        assert i.total_fuel_l <= b.total_fuel_l + 1e-9
        assert i.influenced == 100
        assert i.mode_counts.get("car", 0) + i.adopted == i.influenced
    fuel = next(c for c in report.comparisons if c.metric == "fuel_l")
    assert fuel.change_pct <= 0
    assert fuel.ci_low <= fuel.difference <= fuel.ci_high
