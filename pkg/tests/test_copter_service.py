"""Tests for candidate scoring and recommendation on the corridor network."""

import math

import numpy as np
import pytest
from scipy.special import expit

from config.settings import CopterSettings, Granularity, SelectionRule
from models.adoption import AdoptionModel
from models.choice import ChoiceModel, ChoiceSchema
from models.energy import FuelModel
from models.forest import ForestTarget
from models.network import ModeCategory, ModeLabel, Query
from models.plan import Plan, PlanStep
from models.recommendation import ScoredCandidate
from models.traveler import TravelerProfile
from services.choice_tools import acceptability
from services.energy_tools import plan_energy
from services.mode_language import compile_dfa
from services.copter_service import (
    ChoiceEstimator,
    Copter,
    dominant_mode,
    expected_saving,
    recommend,
    select_recommendation,
)
from services.planner_service import PlannerService, plan
from utils.errors import SchemaMismatch

INTERCEPT = -1.065
DRIVE_FUEL = 0.18
# Two 1 km bus links at 1000/120 m/s, shared among riders.
BUS_FUEL = 2 * (0.45 - 0.01 * (1000 / 120) + 0.0003 * (1000 / 120) ** 2) * 0.05


def _copter(graph, estimator, settings=None, languages=None):
    return Copter(PlannerService(graph), estimator, AdoptionModel(), FuelModel(), settings, languages)


def _step(mode, length_m, start_s=0.0):
    return PlanStep(edge_id=f"{mode.value}{start_s}", mode=mode, start_s=start_s, travel_s=10.0, length_m=length_m)


def test_expected_saving_is_product():
    assert expected_saving(0.5, 0.2) == pytest.approx(0.1)
    assert expected_saving(0.5, -0.2) == pytest.approx(-0.1)
    assert expected_saving(0.0, -1.0) == 0.0


def test_expected_saving_needs_a_probability():
    with pytest.raises(ValueError):
        expected_saving(1.5, 0.2)


def test_dominant_mode_ignores_access_walking():
    trip = Plan(steps=(_step(ModeLabel.WALK, 300), _step(ModeLabel.BUS, 1000, 10), _step(ModeLabel.WALK, 2000, 20)))

    assert dominant_mode(trip) is ModeLabel.BUS


def test_all_walk_plan_is_walk():
    assert dominant_mode(Plan(steps=(_step(ModeLabel.WALK, 300),))) is ModeLabel.WALK


def test_dominant_mode_ties_go_to_symbol_order():
    trip = Plan(steps=(_step(ModeLabel.SUBWAY, 500), _step(ModeLabel.BUS, 500, 10)))

    assert dominant_mode(trip) is ModeLabel.BUS


def test_bus_recommendation_on_corridor(corridor, corridor_query, fixed_estimator):
    copter = _copter(corridor, fixed_estimator())

    result = copter.recommend(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT)

    adopt = float(expit(INTERCEPT + 1.78 * 0.5))
    assert result.language == "w*b+w*"
    assert result.plan.word == "bb"
    assert result.dominant_mode is ModeLabel.BUS
    assert result.category is ModeCategory.PUBLIC_TRANSIT
    assert result.acceptability.odds == pytest.approx(0.5)
    assert result.adoption_prob == pytest.approx(adopt)
    assert result.baseline_fuel_l == pytest.approx(DRIVE_FUEL)
    assert result.saving_l == pytest.approx(DRIVE_FUEL - BUS_FUEL)
    assert result.expected_saving_l == pytest.approx(adopt * (DRIVE_FUEL - BUS_FUEL))


def test_bus_beats_walking_on_expected_saving(corridor, corridor_query, fixed_estimator):
    copter = _copter(corridor, fixed_estimator(), languages=["w+", "w*b+w*"])

    baseline, scored = copter.score_candidates(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT)
    walk, bus = scored

    assert baseline.word == "dd"
    assert walk.saving_l == pytest.approx(DRIVE_FUEL)
    assert walk.adoption_prob == pytest.approx(float(expit(INTERCEPT + 1.78 * 0.1 / 0.6)))
    assert bus.expected_saving_l > walk.expected_saving_l
    assert select_recommendation(scored) is bus


def test_estimator_is_queried_once_per_trip(corridor, corridor_query, fixed_estimator):
    estimator = fixed_estimator()

    _copter(corridor, estimator, languages=["w+", "w*b+w*"]).recommend(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT)

    assert estimator.calls == 1


def test_mode_granularity_compares_against_driving(corridor, corridor_query, fixed_estimator):
    copter = _copter(corridor, fixed_estimator(), CopterSettings(granularity=Granularity.MODE))

    result = copter.recommend(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT)

    assert result.acceptability.odds == pytest.approx(0.2 / 0.5)
    assert result.adoption_prob == pytest.approx(float(expit(INTERCEPT + 1.78 * 0.4)))


def test_mode_granularity_rejects_category_forest(corridor, fixed_estimator):
    with pytest.raises(SchemaMismatch):
        _copter(corridor, fixed_estimator(target=ForestTarget.CATEGORY), CopterSettings(granularity=Granularity.MODE))


def test_driving_alternative_saves_nothing(corridor, corridor_query, fixed_estimator):
    copter = _copter(corridor, fixed_estimator(), languages=["d+"])

    assert copter.recommend(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT) is None


def test_no_baseline_no_recommendation(corridor, fixed_estimator):
    query = Query(origin="A", destination="C", start_s=0, deadline_s=30)
    copter = _copter(corridor, fixed_estimator())

    baseline, scored = copter.score_candidates(query, TravelerProfile(trip_distance_m=2000), INTERCEPT)

    assert baseline is None
    assert scored == []
    assert copter.recommend(query, TravelerProfile(trip_distance_m=2000), INTERCEPT) is None


def test_one_shot_recommend_matches_copter(corridor, corridor_query, fixed_estimator):
    profile = TravelerProfile(trip_distance_m=2000)

    result = recommend(corridor, corridor_query, profile, fixed_estimator(), AdoptionModel(), FuelModel(), INTERCEPT)

    assert result == _copter(corridor, fixed_estimator()).recommend(corridor_query, profile, INTERCEPT)


def test_choice_estimator_uses_trip_times(corridor, corridor_query):
    model = ChoiceModel(
        schema=ChoiceSchema(attributes=("travel_time_s",), alternatives=("d", "b")),
        gamma={"travel_time_s": -0.01},
        reference="d",
    )
    copter = _copter(corridor, ChoiceEstimator(model), CopterSettings(granularity=Granularity.MODE), ["w*b+w*"])

    result = copter.recommend(corridor_query, TravelerProfile(trip_distance_m=2000), INTERCEPT)

    # Drive takes 200 s and the bus 240 s.
    assert result.acceptability.odds == pytest.approx(math.exp(-0.4))


def test_choice_estimator_rejects_unknown_attributes():
    model = ChoiceModel(schema=ChoiceSchema(attributes=("comfort",), alternatives=("d", "b")), reference="d")

    with pytest.raises(SchemaMismatch):
        ChoiceEstimator(model)


def _scored(language, word_mode, adoption, saving):
    trip = Plan(steps=(_step(word_mode, 1000),))
    return ScoredCandidate(
        language=language,
        plan=trip,
        dominant_mode=word_mode,
        category=word_mode.category,
        acceptability=acceptability(0.3, 0.6),
        adoption_prob=adoption,
        saving_l=saving,
        expected_saving_l=expected_saving(adoption, saving),
    )


def test_selection_rules():
    likely = _scored("w+", ModeLabel.WALK, 0.9, 0.1)
    saving = _scored("w*b+w*", ModeLabel.BUS, 0.3, 1.0)
    losing = _scored("d+", ModeLabel.DRIVE, 1.0, -0.5)

    assert select_recommendation([likely, saving, losing]) is saving
    assert select_recommendation([likely, saving, losing], SelectionRule.ADOPTION) is likely
    assert select_recommendation([losing]) is None


def test_selection_ties_go_to_smaller_word():
    bus = _scored("w*b+w*", ModeLabel.BUS, 0.5, 0.2)
    cycle = _scored("c+", ModeLabel.CYCLE, 0.5, 0.2)

    assert select_recommendation([bus, cycle]) is bus


def test_likely_smaller_saving_beats_unlikely_larger_one():
    unlikely = _scored("w*b+w*", ModeLabel.BUS, 0.2, 10.0)
    likely = _scored("w+", ModeLabel.WALK, 0.9, 4.0)

    assert select_recommendation([unlikely, likely]) is likely


def test_only_usual_drivers_get_recommendations(corridor, corridor_query, fixed_estimator):
    copter = _copter(corridor, fixed_estimator())

    with pytest.raises(ValueError):
        copter.recommend(corridor_query, TravelerProfile(trip_distance_m=2000, usual_mode=ModeLabel.WALK), INTERCEPT)


# ===== SELECTION PROPERTIES =====

RESCORE_LANGUAGES = ["w+", "w*b+w*", "(w|b)+", "w*d+"]


def _expected_by_hand(graph, query, probs, intercept, fuel):
    """Expected saving of every feasible language element, computed from first principles."""
    baseline = plan(graph, query, compile_dfa("d+"))
    if baseline is None:
        return {}
    categories = dict.fromkeys(ModeCategory, 0.0)
    for mode in ModeLabel:
        categories[mode.category] += probs[mode.value]
    scores = {}
    for pattern in RESCORE_LANGUAGES:
        found = plan(graph, query, compile_dfa(pattern))
        if found is None:
            continue
        acc = acceptability(min(categories[dominant_mode(found).category], 1.0), min(categories[ModeCategory.MOTORIZED], 1.0))
        adopt = float(expit(intercept + 1.78 * min(acc.odds, 20.0)))
        scores[pattern] = adopt * (plan_energy(fuel, baseline) - plan_energy(fuel, found))
    return scores


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(1000))
def test_recommendation_is_the_rescored_argmax(seed, corridor, fixed_estimator):
    rng = np.random.default_rng(seed)
    probs = dict(zip((m.value for m in ModeLabel), rng.dirichlet(np.ones(len(ModeLabel)))))
    intercept = float(rng.normal(INTERCEPT, 1.0))
    fuel = FuelModel(bus_factor=float(rng.uniform(0.0, 1.0)))
    start = float(rng.integers(0, 7000))
    query = Query(origin="A", destination="C", start_s=start, deadline_s=start + float(rng.integers(200, 2400)))
    copter = Copter(PlannerService(corridor), fixed_estimator(probs), AdoptionModel(), fuel, languages=RESCORE_LANGUAGES)

    result = copter.recommend(query, TravelerProfile(trip_distance_m=2000), intercept)
    scores = _expected_by_hand(corridor, query, probs, intercept, fuel)

    best = max(scores.values(), default=0.0)
    if best <= 0:
        assert result is None
        return
    assert result is not None
    assert result.expected_saving_l == pytest.approx(best, abs=1e-12)
    assert all(result.expected_saving_l >= s - 1e-12 for s in scores.values())


def _random_candidates(rng):
    labels = list(ModeLabel)
    modes = [labels[i] for i in rng.choice(len(labels), size=int(rng.integers(2, 6)), replace=False)]
    return [
        _scored(f"lang{i}", mode, float(rng.uniform(0.01, 1.0)), float(rng.uniform(-1.0, 2.0)))
        for i, mode in enumerate(modes)
    ]


def _rescaled(candidate, adoption=None, saving=None):
    adoption = candidate.adoption_prob if adoption is None else adoption
    saving = candidate.saving_l if saving is None else saving
    return candidate.model_copy(update={
        "adoption_prob": adoption,
        "saving_l": saving,
        "expected_saving_l": expected_saving(adoption, saving),
    })


@pytest.mark.parametrize("seed", range(200))
def test_scaling_savings_keeps_the_choice(seed):
    rng = np.random.default_rng(seed)
    candidates = _random_candidates(rng)
    factor = float(rng.uniform(0.01, 100.0))

    before = select_recommendation(candidates)
    after = select_recommendation([_rescaled(c, saving=c.saving_l * factor) for c in candidates])

    assert (before is None) == (after is None)
    if before is not None:
        assert after.language == before.language


@pytest.mark.parametrize("seed", range(200))
def test_raising_the_winner_keeps_it_selected(seed):
    rng = np.random.default_rng(seed)
    candidates = _random_candidates(rng)
    winner = select_recommendation(candidates)
    if winner is None:
        return
    i = candidates.index(winner)

    more_saving = [*candidates[:i], _rescaled(winner, saving=winner.saving_l * float(rng.uniform(1.0, 3.0))), *candidates[i + 1:]]
    more_likely = [*candidates[:i], _rescaled(winner, adoption=float(rng.uniform(winner.adoption_prob, 1.0))), *candidates[i + 1:]]

    assert select_recommendation(more_saving).language == winner.language
    assert select_recommendation(more_likely).language == winner.language


@pytest.mark.parametrize("seed", range(200))
def test_raising_adoption_never_lowers_rank(seed):
    rng = np.random.default_rng(seed)
    candidates = [c for c in _random_candidates(rng) if c.saving_l > 0]
    if not candidates:
        return
    i = int(rng.integers(len(candidates)))
    raised = _rescaled(candidates[i], adoption=float(rng.uniform(candidates[i].adoption_prob, 1.0)))

    def ahead(pool, target):
        return sum(c.expected_saving_l > target.expected_saving_l for c in pool if c is not target)

    assert ahead([*candidates[:i], raised, *candidates[i + 1:]], raised) <= ahead(candidates, candidates[i])
