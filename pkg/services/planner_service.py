"""Label-constrained, time-dependent shortest paths on the multi-modal graph.

The search runs over the product of graph nodes and DFA states, so every
returned plan's mode word belongs to the constraining language. Relaxation
relies on FIFO edges: entering an edge later never lets you leave it earlier.
"""

import heapq
import logging
import math
from typing import Literal

from models.energy import FuelModel
from models.network import SCHEDULED_MODES, Query, TransportGraph
from models.plan import EVALUATIVES, CandidatePlan, CandidatePlanSet, CostWeights, Plan, PlanStep
from services.energy_tools import edge_fuel
from services.graph_service import duration, traversal
from services.mode_language import LanguageSet, ModeDfa
from utils.errors import NoService, UnknownEvaluative
from utils.helpers import haversine_m

logger = logging.getLogger(__name__)

SearchKind = Literal["dijkstra", "astar"]

EVALUATIVE_ALIASES = {
    "duration": "duration_s",
    "distance": "distance_m",
    "fare": "fare_units",
    "energy": "energy_l",
}


def _heuristic(graph: TransportGraph, destination: str, search: SearchKind):
    if search != "astar" or graph.max_speed_mps <= 0:
        return lambda node_id: 0.0
    dest = graph.nodes[destination]
    v_max = graph.max_speed_mps
    cache: dict[str, float] = {}

    def h(node_id: str) -> float:
        if node_id not in cache:
            node = graph.nodes[node_id]
            cache[node_id] = haversine_m(node.lat, node.lon, dest.lat, dest.lon) / v_max
        return cache[node_id]

    return h


def _dominates(a: tuple[float, int, str], b: tuple[float, int, str]) -> bool:
    """`a` is no later than `b` and no worse on (edges, word) once both take the same suffix."""
    return a[0] <= b[0] and (a[1], a[2]) <= (b[1], b[2])


def plan(
    graph: TransportGraph,
    query: Query,
    dfa: ModeDfa,
    objective: str = "duration",
    search: SearchKind = "dijkstra",
    fare_per_boarding: float = 1.0,
) -> Plan | None:
    """Earliest-arrival plan whose word the DFA accepts, or None when none meets the deadline.

    Ties on arrival go to fewer edges, then the lexicographically smaller word.
    A later label with fewer edges can still tie at the goal after a shared
    wait, so each (node, state) keeps every label not dominated on both.
    """
    if EVALUATIVE_ALIASES.get(objective, objective) != "duration_s":
        raise ValueError(f"plan search optimizes arrival time only, got objective {objective!r}")
    graph.validate_query(query)
    h = _heuristic(graph, query.destination, search)

    # label id -> (arrive, n_edges, word); parents[id] = (parent id, step)
    labels: list[tuple[float, int, str]] = []
    states: list[tuple[str, int]] = []
    parents: list[tuple[int, PlanStep | None]] = []
    front: dict[tuple[str, int], list[int]] = {}
    dominated: set[int] = set()
    heap: list[tuple[float, float, int, str, int]] = []

    def add(state: tuple[str, int], label: tuple[float, int, str], parent: int, step: PlanStep | None) -> int | None:
        alive = front.setdefault(state, [])
        if any(_dominates(labels[j], label) for j in alive):
            return None
        survivors = []
        for j in alive:
            if _dominates(label, labels[j]):
                dominated.add(j)
            else:
                survivors.append(j)
        label_id = len(labels)
        labels.append(label)
        states.append(state)
        parents.append((parent, step))
        survivors.append(label_id)
        front[state] = survivors
        return label_id

    def relax(label_id: int) -> None:
        t, n, word = labels[label_id]
        node_id, q = states[label_id]
        prev_mode = word[-1] if word else ""
        for edge_id in graph.outgoing(node_id):
            edge = graph.edges[edge_id]
            q2 = dfa.step(q, edge.mode)
            if dfa.is_dead(q2):
                continue
            try:
                wait, travel = traversal(graph, edge, t)
            except NoService:
                continue
            arrive = t + wait + travel
            if arrive > query.deadline_s:
                continue
            boarding = edge.mode in SCHEDULED_MODES and edge.mode.value != prev_mode
            step = PlanStep(
                edge_id=edge.id,
                mode=edge.mode,
                start_s=t,
                wait_s=wait,
                travel_s=travel,
                length_m=edge.length_m,
                fare_units=fare_per_boarding if boarding else 0.0,
            )
            label = (arrive, n + 1, word + edge.mode.value)
            child = add((edge.to_node, q2), label, label_id, step)
            if child is not None:
                heapq.heappush(heap, (arrive + h(edge.to_node), *label, child))

    labels.append((query.start_s, 0, ""))
    states.append((query.origin, dfa.start))
    parents.append((-1, None))
    relax(0)
    expanded = 0
    while heap:
        _, arrive, _, word, label_id = heapq.heappop(heap)
        if label_id in dominated:
            continue
        expanded += 1
        node_id, q = states[label_id]
        if node_id == query.destination and q in dfa.accepting:
            steps = []
            cursor = label_id
            while cursor > 0:
                cursor, step = parents[cursor]
                steps.append(step)
            steps.reverse()
            logger.debug(f"Plan {query.origin}->{query.destination} under {dfa.pattern!r}: word {word!r}, arrive {arrive:.1f}s, {expanded} labels expanded")
            return Plan(steps=tuple(steps))
        relax(label_id)

    logger.debug(f"No plan {query.origin}->{query.destination} under {dfa.pattern!r} before {query.deadline_s}s")
    return None


def candidate_plans(
    graph: TransportGraph,
    query: Query,
    languages: LanguageSet,
    search: SearchKind = "dijkstra",
    fare_per_boarding: float = 1.0,
) -> CandidatePlanSet:
    """Π_p: the time-optimal plan (or absence) per language element, in language order."""
    candidates = []
    for element in languages.elements:
        found = plan(graph, query, element.dfa, search=search, fare_per_boarding=fare_per_boarding)
        if found is None:
            logger.info(f"No feasible plan for language {element.pattern!r}")
        candidates.append(CandidatePlan(language=element.pattern, plan=found))
    return CandidatePlanSet(candidates=tuple(candidates))


def plan_cost(plan: Plan, weights: CostWeights, fuel_model: FuelModel | None = None) -> float:
    """cost(π) = Σ_e Σ_φ θ_φ·φ(e)."""
    resolved = {}
    for name, weight in weights.theta.items():
        key = EVALUATIVE_ALIASES.get(name, name)
        if key not in EVALUATIVES:
            raise UnknownEvaluative(name)
        resolved[key] = resolved.get(key, 0.0) + weight
    if resolved.get("energy_l", 0.0) != 0.0 and fuel_model is None:
        raise ValueError("an energy weight needs a fuel model")

    terms = []
    for step in plan.steps:
        values = {
            "duration_s": step.duration_s,
            "distance_m": step.length_m,
            "fare_units": step.fare_units,
            "energy_l": 0.0,
        }
        if "energy_l" in resolved and fuel_model is not None:
            values["energy_l"] = edge_fuel(fuel_model, step, step.length_m / step.travel_s)
        terms.extend(weight * values[key] for key, weight in resolved.items())
    return math.fsum(terms)


def validate_plan(graph: TransportGraph, query: Query, plan: Plan, dfa: ModeDfa, tolerance: float = 1e-6) -> list[str]:
    """Every violated validity condition; an empty list means the plan is valid."""
    violations: list[str] = []
    if not plan.steps:
        return ["plan has no edges"]

    expected_from = query.origin
    previous_end = query.start_s
    for i, step in enumerate(plan.steps):
        edge = graph.edges.get(step.edge_id)
        if edge is None:
            violations.append(f"step {i}: unknown edge {step.edge_id!r}")
            continue
        if edge.mode is not step.mode:
            violations.append(f"step {i}: mode {step.mode.value!r} differs from edge mode {edge.mode.value!r}")
        if edge.from_node != expected_from:
            violations.append(f"connectivity: step {i} leaves {edge.from_node!r}, expected {expected_from!r}")
        if step.start_s < previous_end - tolerance:
            violations.append(f"temporal: step {i} starts at {step.start_s:g}s before the previous step ends at {previous_end:g}s")
        try:
            actual = duration(graph, edge, step.start_s)
            if abs(actual - step.duration_s) > tolerance:
                violations.append(f"temporal: step {i} lasts {step.duration_s:g}s but the edge takes {actual:g}s")
        except NoService:
            violations.append(f"temporal: no service on {edge.id!r} at {step.start_s:g}s")
        expected_from = edge.to_node
        previous_end = step.start_s + step.duration_s

    if expected_from != query.destination:
        violations.append(f"connectivity: plan ends at {expected_from!r}, expected {query.destination!r}")
    if plan.arrive_s > query.deadline_s + tolerance:
        violations.append(f"deadline: arrives at {plan.arrive_s:g}s after {query.deadline_s:g}s")
    if not dfa.accepts(plan.word):
        violations.append(f"word: {plan.word!r} is not in {dfa.pattern!r}")
    return violations


class PlannerService:
    """Planner bound to one immutable graph."""

    def __init__(self, graph: TransportGraph, search: SearchKind = "dijkstra", fare_per_boarding: float = 1.0):
        self.graph = graph
        self.search = search
        self.fare_per_boarding = fare_per_boarding

    def plan(self, query: Query, dfa: ModeDfa) -> Plan | None:
        return plan(self.graph, query, dfa, search=self.search, fare_per_boarding=self.fare_per_boarding)

    def candidate_plans(self, query: Query, languages: LanguageSet) -> CandidatePlanSet:
        return candidate_plans(self.graph, query, languages, search=self.search, fare_per_boarding=self.fare_per_boarding)
