"""Pydantic models for the multi-modal transportation network."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from utils.errors import InvariantViolation
from utils.helpers import haversine_m

SCHEDULE_HORIZON_S = 172_800


class ModeLabel(str, Enum):
    """Single-character mode alphabet."""
    WALK = "w"
    CYCLE = "c"
    BUS = "b"
    SUBWAY = "s"
    DRIVE = "d"
    RIDE = "r"
    MOTORCYCLE = "m"

    @property
    def category(self) -> "ModeCategory":
        return MODE_CATEGORIES[self]


class ModeCategory(str, Enum):
    """Coarse mode categories used for likelihood estimation."""
    NON_MOTORIZED = "non-motorized"
    PUBLIC_TRANSIT = "public-transit"
    MOTORIZED = "motorized"


MODE_CATEGORIES: dict[ModeLabel, ModeCategory] = {
    ModeLabel.WALK: ModeCategory.NON_MOTORIZED,
    ModeLabel.CYCLE: ModeCategory.NON_MOTORIZED,
    ModeLabel.BUS: ModeCategory.PUBLIC_TRANSIT,
    ModeLabel.SUBWAY: ModeCategory.PUBLIC_TRANSIT,
    ModeLabel.DRIVE: ModeCategory.MOTORIZED,
    ModeLabel.RIDE: ModeCategory.MOTORIZED,
    ModeLabel.MOTORCYCLE: ModeCategory.MOTORIZED,
}

# Canonical symbol order, also the DFA alphabet order.
ALPHABET: tuple[ModeLabel, ...] = tuple(ModeLabel)
CATEGORY_ORDER: tuple[ModeCategory, ...] = tuple(ModeCategory)
SCHEDULED_MODES = frozenset({ModeLabel.BUS, ModeLabel.SUBWAY})


class Node(BaseModel):
    """Network node."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    lat: float = Field(ge=-90.0, le=90.0)
    lon: float = Field(ge=-180.0, le=180.0)


class Edge(BaseModel):
    """Directed edge traversed by exactly one mode."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    from_node: str
    to_node: str
    mode: ModeLabel
    length_m: float = Field(gt=0.0)
    speed_mps: float | None = Field(default=None, gt=0.0)
    schedule_id: str | None = None
    capacity_vph: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _one_traversal(self) -> "Edge":
        if (self.speed_mps is None) == (self.schedule_id is None):
            raise ValueError(f"edge {self.id!r} needs exactly one of speed_mps or schedule_id")
        if self.schedule_id is not None and self.mode not in SCHEDULED_MODES:
            raise ValueError(f"edge {self.id!r}: mode {self.mode.value!r} cannot be scheduled")
        return self

    @property
    def is_scheduled(self) -> bool:
        return self.schedule_id is not None


class Schedule(BaseModel):
    """Timetable of one scheduled edge."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    ride_time_s: float = Field(gt=0.0)
    departures: tuple[int, ...]

    @field_validator("departures")
    @classmethod
    def _increasing(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("departures must be non-empty")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("departures must be strictly increasing")
        if v[0] < 0 or v[-1] >= SCHEDULE_HORIZON_S:
            raise ValueError(f"departures must lie in [0, {SCHEDULE_HORIZON_S})")
        return v


class Query(BaseModel):
    """Trip request q = (v, w, t_s, t_e)."""
    model_config = ConfigDict(frozen=True)

    origin: str
    destination: str
    start_s: float = Field(ge=0.0)
    deadline_s: float

    @model_validator(mode="after")
    def _window(self) -> "Query":
        if self.start_s >= self.deadline_s:
            raise ValueError("query start must precede its deadline")
        return self


class TransportGraph(BaseModel):
    """Immutable time-dependent multi-modal network with an adjacency index."""
    model_config = ConfigDict(frozen=True)

    nodes: dict[str, Node]
    edges: dict[str, Edge]
    schedules: dict[str, Schedule] = Field(default_factory=dict)

    _adjacency: dict[str, tuple[str, ...]] = PrivateAttr(default_factory=dict)
    _max_speed: float = PrivateAttr(default=0.0)

    @model_validator(mode="after")
    def _index(self) -> "TransportGraph":
        adjacency: dict[str, list[str]] = {node_id: [] for node_id in self.nodes}
        max_speed = 0.0
        for edge_id in sorted(self.edges):
            edge = self.edges[edge_id]
            for endpoint in (edge.from_node, edge.to_node):
                if endpoint not in self.nodes:
                    raise ValueError(f"edge {edge.id!r} references missing node {endpoint!r}")
            if edge.schedule_id is not None:
                schedule = self.schedules.get(edge.schedule_id)
                if schedule is None:
                    raise ValueError(f"edge {edge.id!r} references missing schedule {edge.schedule_id!r}")
                travel_s = schedule.ride_time_s
            else:
                travel_s = edge.length_m / edge.speed_mps
            tail, head = self.nodes[edge.from_node], self.nodes[edge.to_node]
            # Stated lengths may undercut the straight line; the bound must cover both.
            reach_m = max(edge.length_m, haversine_m(tail.lat, tail.lon, head.lat, head.lon))
            max_speed = max(max_speed, reach_m / travel_s)
            adjacency[edge.from_node].append(edge.id)
        self._adjacency = {k: tuple(v) for k, v in adjacency.items()}
        self._max_speed = max_speed
        return self

    def outgoing(self, node_id: str) -> tuple[str, ...]:
        """Outgoing edge ids of a node, sorted by edge id."""
        return self._adjacency.get(node_id, ())

    @property
    def max_speed_mps(self) -> float:
        """Largest speed of any edge, by stated length or straight-line displacement."""
        return self._max_speed

    def validate_query(self, query: Query) -> None:
        for node_id in (query.origin, query.destination):
            if node_id not in self.nodes:
                raise InvariantViolation(f"query node {node_id!r} is not in the graph")
