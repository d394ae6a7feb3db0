"""Acceptable planning: recommend the alternative with the largest expected energy saving."""

import logging
from collections.abc import Mapping, Sequence
from typing import Protocol

from config.settings import CopterSettings, Granularity, SelectionRule
from models.adoption import AdoptionModel, PersonIntercept
from models.choice import ChoiceAlternative, ChoiceModel
from models.energy import FuelModel
from models.forest import ForestModel, ForestTarget
from models.network import ALPHABET, ModeCategory, ModeLabel, Query, TransportGraph
from models.plan import Plan
from models.recommendation import Recommendation, ScoredCandidate
from models.traveler import TravelerProfile
from services.adoption_tools import adoption_for
from services.choice_tools import acceptability, probabilities
from services.energy_tools import energy_saving, plan_energy
from services.likelihood_tools import category_probs, label_probs
from services.mode_language import (
    LanguageSet,
    candidate_modes,
    compile_dfa,
    language_set,
    language_set_from_patterns,
)
from services.planner_service import PlannerService
from utils.errors import SchemaMismatch

logger = logging.getLogger(__name__)

DRIVE_PATTERN = "d+"
WALK_PATTERN = "w+"


def expected_saving(adoption_prob: float, saving_l: float) -> float:
    """adopt × saving."""
    if not 0.0 <= adoption_prob <= 1.0:
        raise ValueError(f"adoption probability must be in [0, 1], got {adoption_prob}")
    product = adoption_prob * saving_l
    return 0.0 if product == 0 else product


def dominant_mode(plan: Plan) -> ModeLabel:
    """Non-walk mode covering the most distance; walk for all-walk plans."""
    distances = plan.mode_distances
    best = None
    for mode in ALPHABET:
        if mode is ModeLabel.WALK or mode.value not in distances:
            continue
        if best is None or distances[mode.value] > distances[best.value]:
            best = mode
    return best or ModeLabel.WALK


class LikelihoodEstimator(Protocol):
    """Supplies the probabilities acceptability is computed from."""

    def label_probs(self, features: Mapping[str, float], options: Mapping[str, Plan]) -> dict[str, float]:
        """Probabilities keyed by mode symbol or category name."""
        ...


class ForestEstimator:
    """Mode or category likelihoods from a trained forest; trip options are ignored."""

    def __init__(self, model: ForestModel):
        self.model = model

    @property
    def target(self) -> ForestTarget:
        return self.model.target

    def label_probs(self, features: Mapping[str, float], options: Mapping[str, Plan]) -> dict[str, float]:
        return label_probs(self.model, features)


class ChoiceEstimator:
    """MNL probabilities over the offered modes, using each option's travel time and distance."""

    ATTRIBUTES = ("distance_m", "travel_time_s")

    def __init__(self, model: ChoiceModel):
        if set(model.choice_schema.attributes) - set(self.ATTRIBUTES):
            raise SchemaMismatch(f"choice model attributes must be drawn from {list(self.ATTRIBUTES)}")
        modes = {m.value for m in ModeLabel}
        if not set(model.choice_schema.alternatives) <= modes:
            raise SchemaMismatch("choice model alternatives must be mode symbols")
        self.model = model

    @property
    def target(self) -> ForestTarget:
        return ForestTarget.MODE

    def label_probs(self, features: Mapping[str, float], options: Mapping[str, Plan]) -> dict[str, float]:
        schema = self.model.choice_schema
        alternatives = []
        for mode, plan in options.items():
            if mode not in schema.alternatives:
                raise SchemaMismatch(f"choice model has no alternative for mode {mode!r}")
            values = {"travel_time_s": plan.arrive_s - plan.depart_s, "distance_m": plan.distance_m}
            alternatives.append(ChoiceAlternative(name=mode, attributes={a: values[a] for a in schema.attributes}))
        missing = [f for f in schema.features if f not in features]
        if missing:
            raise SchemaMismatch(f"choice model needs person features {missing}")
        person = {f: features[f] for f in schema.features}
        probs = probabilities(self.model, alternatives, person)
        return {alt.name: float(p) for alt, p in zip(alternatives, probs)}


def select_recommendation(scored: Sequence[ScoredCandidate], rule: SelectionRule = SelectionRule.EXPECTED_SAVING) -> ScoredCandidate | None:
    """Best positive-expected-saving candidate; ties go to higher adoption, then the smaller word."""
    eligible = [c for c in scored if c.expected_saving_l > 0]
    if not eligible:
        return None
    if rule is SelectionRule.ADOPTION:
        return min(eligible, key=lambda c: (-c.adoption_prob, -c.expected_saving_l, c.word))
    return min(eligible, key=lambda c: (-c.expected_saving_l, -c.adoption_prob, c.word))


class Copter:
    """Acceptable-planning pipeline bound to a graph and its models."""

    def __init__(
        self,
        planner: PlannerService,
        estimator: LikelihoodEstimator,
        adoption_model: AdoptionModel,
        fuel_model: FuelModel,
        settings: CopterSettings | None = None,
        languages: Sequence[str] | None = None,
    ):
        self.planner = planner
        self.estimator = estimator
        self.adoption_model = adoption_model
        self.fuel_model = fuel_model
        self.settings = settings or CopterSettings()
        self.languages = list(languages) if languages else None
        self._drive = compile_dfa(DRIVE_PATTERN)
        self._walk = compile_dfa(WALK_PATTERN)
        if self.settings.granularity is Granularity.MODE and getattr(estimator, "target", None) is ForestTarget.CATEGORY:
            raise SchemaMismatch("mode granularity needs a mode-level likelihood model, got a category forest")

    @property
    def graph(self) -> TransportGraph:
        return self.planner.graph

    def baseline_plan(self, query: Query) -> Plan | None:
        """Time-optimal drive-only plan."""
        return self.planner.plan(query, self._drive)

    def walk_plan(self, query: Query) -> Plan | None:
        """Time-optimal walk-only plan."""
        return self.planner.plan(query, self._walk)

    def languages_for(self, profile: TravelerProfile, trip_distance_m: float) -> LanguageSet:
        if self.languages:
            return language_set_from_patterns(self.languages)
        return language_set(candidate_modes(profile, trip_distance_m))

    def _acceptability_inputs(self, probs: Mapping[str, float], plan: Plan) -> tuple[float, float]:
        """(Pr(r), Pr(u)) at the configured granularity."""
        mode = dominant_mode(plan)
        if self.settings.granularity is Granularity.MODE:
            return probs.get(mode.value, 0.0), probs.get(ModeLabel.DRIVE.value, 0.0)
        categories = category_probs(probs)
        return categories[mode.category], categories[ModeCategory.MOTORIZED]

    def score_candidates(
        self,
        query: Query,
        profile: TravelerProfile,
        intercept: PersonIntercept | float,
        baseline: Plan | None = None,
    ) -> tuple[Plan | None, list[ScoredCandidate]]:
        """Baseline drive plan and every feasible candidate with its energy, acceptability and adoption scores."""
        if profile.usual_mode is not ModeLabel.DRIVE:
            raise ValueError(f"recommendations replace a usual drive trip, got usual mode {profile.usual_mode.value!r}")
        baseline = baseline or self.baseline_plan(query)
        if baseline is None:
            logger.warning(f"No drive plan {query.origin}->{query.destination}; nothing to compare against")
            return None, []

        trip_distance = baseline.distance_m
        languages = self.languages_for(profile, trip_distance)
        present = [c for c in self.planner.candidate_plans(query, languages).candidates if c.plan is not None]
        if not present:
            return baseline, []

        features = {**profile.to_features(), "trip_distance_m": trip_distance}
        options: dict[str, Plan] = {ModeLabel.DRIVE.value: baseline}
        for candidate in present:
            options.setdefault(dominant_mode(candidate.plan).value, candidate.plan)
        probs = self.estimator.label_probs(features, options)

        scored = []
        for candidate in present:
            plan = candidate.plan
            mode = dominant_mode(plan)
            pr_r, pr_u = self._acceptability_inputs(probs, plan)
            acc = acceptability(min(pr_r, 1.0), min(pr_u, 1.0))
            adopt = adoption_for(self.adoption_model, intercept, acc)
            saving = energy_saving(self.fuel_model, baseline, plan)
            scored.append(ScoredCandidate(
                language=candidate.language,
                plan=plan,
                dominant_mode=mode,
                category=mode.category,
                acceptability=acc,
                adoption_prob=adopt,
                saving_l=saving,
                expected_saving_l=expected_saving(adopt, saving),
            ))
        return baseline, scored

    def recommend(
        self,
        query: Query,
        profile: TravelerProfile,
        intercept: PersonIntercept | float,
        baseline: Plan | None = None,
    ) -> Recommendation | None:
        """The maximum expected saving alternative, or None when no candidate saves energy."""
        try:
            baseline, scored = self.score_candidates(query, profile, intercept, baseline)
        except Exception as e:
            logger.error(f"Scoring failed for {query.origin}->{query.destination}: {e}")
            raise
        best = select_recommendation(scored, self.settings.selection_rule)
        if best is None:
            logger.warning(f"No alternative for {query.origin}->{query.destination}: {len(scored)} candidates, none with positive expected saving")
            return None
        logger.info(f"Recommend {best.word!r} ({best.language}): saving {best.saving_l:.3f} l, adoption {best.adoption_prob:.3f}")
        return Recommendation(
            plan=best.plan,
            language=best.language,
            dominant_mode=best.dominant_mode,
            category=best.category,
            acceptability=best.acceptability,
            adoption_prob=best.adoption_prob,
            saving_l=best.saving_l,
            expected_saving_l=best.expected_saving_l,
            baseline_fuel_l=plan_energy(self.fuel_model, baseline),
        )


def recommend(
    graph: TransportGraph,
    query: Query,
    profile: TravelerProfile,
    estimator: LikelihoodEstimator,
    adoption_model: AdoptionModel,
    fuel_model: FuelModel,
    intercept: PersonIntercept | float,
    settings: CopterSettings | None = None,
) -> Recommendation | None:
    """One-shot recommendation over a graph."""
    copter = Copter(PlannerService(graph), estimator, adoption_model, fuel_model, settings)
    return copter.recommend(query, profile, intercept)
