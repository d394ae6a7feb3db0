"""Shared fixtures: a three-stop corridor network and fixed-probability estimators."""

from collections.abc import Mapping

import pytest

from models.forest import ForestTarget
from models.network import Edge, ModeLabel, Node, Query, Schedule, TransportGraph
from models.plan import Plan
from services.graph_service import build_graph

# Stops 0.01° of longitude apart (about 922 m at this latitude); links are 1 km.
CORRIDOR_LAT = 34.0
LINK_M = 1000.0
DRIVE_SPEED = 10.0
BUS_RIDE_S = 120.0
BUS_HEADWAY_S = 300

MODE_PROBS = {"w": 0.1, "c": 0.0, "b": 0.2, "s": 0.1, "d": 0.5, "r": 0.05, "m": 0.05}


def corridor_graph() -> TransportGraph:
    """A - B - C with two-way drive and walk links and a one-way bus line A -> B -> C."""
    nodes = [Node(id=name, lat=CORRIDOR_LAT, lon=0.01 * i) for i, name in enumerate("ABC")]
    edges = []
    for tail, head in (("A", "B"), ("B", "C")):
        for u, v in ((tail, head), (head, tail)):
            edges.append(Edge(id=f"d:{u}{v}", from_node=u, to_node=v, mode=ModeLabel.DRIVE, length_m=LINK_M, speed_mps=DRIVE_SPEED))
            edges.append(Edge(id=f"w:{u}{v}", from_node=u, to_node=v, mode=ModeLabel.WALK, length_m=LINK_M, speed_mps=1.4))
    schedules = [
        Schedule(id="bus:AB", ride_time_s=BUS_RIDE_S, departures=tuple(range(0, 7200, BUS_HEADWAY_S))),
        Schedule(id="bus:BC", ride_time_s=BUS_RIDE_S, departures=tuple(range(int(BUS_RIDE_S), 7200, BUS_HEADWAY_S))),
    ]
    edges.append(Edge(id="b:AB", from_node="A", to_node="B", mode=ModeLabel.BUS, length_m=LINK_M, schedule_id="bus:AB"))
    edges.append(Edge(id="b:BC", from_node="B", to_node="C", mode=ModeLabel.BUS, length_m=LINK_M, schedule_id="bus:BC"))
    return build_graph(nodes, edges, schedules)


class FixedEstimator:
    """Returns the same label probabilities for every traveler."""

    def __init__(self, probs: Mapping[str, float], target: ForestTarget = ForestTarget.MODE):
        self.probs = dict(probs)
        self.target = target
        self.calls = 0

    def label_probs(self, features: Mapping[str, float], options: Mapping[str, Plan]) -> dict[str, float]:
        self.calls += 1
        return dict(self.probs)


@pytest.fixture
def corridor() -> TransportGraph:
    return corridor_graph()


@pytest.fixture
def corridor_query() -> Query:
    return Query(origin="A", destination="C", start_s=0, deadline_s=3600)


@pytest.fixture
def fixed_estimator():
    def make(probs: Mapping[str, float] | None = None, target: ForestTarget = ForestTarget.MODE) -> FixedEstimator:
        return FixedEstimator(MODE_PROBS if probs is None else probs, target)

    return make
