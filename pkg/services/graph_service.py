"""Loading, validation and traversal-time queries for the transport network."""

import bisect
import logging
from collections.abc import Iterable
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from models.network import Edge, ModeLabel, Node, Schedule, TransportGraph
from utils.errors import DanglingReference, InvariantViolation, NoService, ParseError

logger = logging.getLogger(__name__)

GRAPH_FORMAT_VERSION = 1

NODE_COLUMNS = ["id", "lat", "lon"]
EDGE_COLUMNS = ["id", "from", "to", "mode", "length_m", "speed_mps", "schedule_id"]
SCHEDULE_COLUMNS = ["schedule_id", "ride_time_s", "departures"]

DEFAULT_SPEEDS_MPS: dict[ModeLabel, float] = {
    ModeLabel.WALK: 1.4,
    ModeLabel.CYCLE: 4.0,
}


def _read_table(source: Path | str, required: list[str]) -> pd.DataFrame:
    """Read a UTF-8 CSV with a header row, keeping every cell as text."""
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise ParseError(1, "missing header row", str(source)) from e
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ParseError(1, f"missing columns {missing}", str(source))
    return frame


def _number(value: str, line: int, column: str, source: str) -> float:
    try:
        return float(value)
    except ValueError as e:
        raise ParseError(line, f"column {column!r}: {value!r} is not a number", source) from e


def _parse_nodes(source: Path | str) -> list[Node]:
    frame = _read_table(source, NODE_COLUMNS)
    nodes = []
    for i, row in enumerate(frame.itertuples(index=False)):
        line = i + 2
        try:
            nodes.append(Node(
                id=row.id.strip(),
                lat=_number(row.lat, line, "lat", str(source)),
                lon=_number(row.lon, line, "lon", str(source)),
            ))
        except ValidationError as e:
            raise ParseError(line, e.errors()[0]["msg"], str(source)) from e
    return nodes


def _parse_edges(source: Path | str, default_speeds: dict[ModeLabel, float]) -> list[Edge]:
    frame = _read_table(source, ["id", "from", "to", "mode", "length_m"])
    for optional in ("speed_mps", "schedule_id", "capacity_vph"):
        if optional not in frame.columns:
            frame[optional] = ""
    edges = []
    for i, row in enumerate(frame.to_dict("records")):
        line = i + 2
        mode_text = row["mode"].strip()
        try:
            mode = ModeLabel(mode_text)
        except ValueError as e:
            raise ParseError(line, f"unknown mode {mode_text!r}", str(source)) from e

        speed_text = row["speed_mps"].strip()
        schedule_id = row["schedule_id"].strip() or None
        if speed_text and schedule_id:
            raise ParseError(line, "speed_mps and schedule_id are mutually exclusive", str(source))
        speed = _number(speed_text, line, "speed_mps", str(source)) if speed_text else None
        if speed is None and schedule_id is None:
            if mode not in default_speeds:
                raise ParseError(line, f"mode {mode.value!r} requires speed_mps or schedule_id", str(source))
            speed = default_speeds[mode]

        capacity_text = row["capacity_vph"].strip()
        try:
            edges.append(Edge(
                id=row["id"].strip(),
                from_node=row["from"].strip(),
                to_node=row["to"].strip(),
                mode=mode,
                length_m=_number(row["length_m"], line, "length_m", str(source)),
                speed_mps=speed,
                schedule_id=schedule_id,
                capacity_vph=_number(capacity_text, line, "capacity_vph", str(source)) if capacity_text else None,
            ))
        except ValidationError as e:
            raise ParseError(line, e.errors()[0]["msg"], str(source)) from e
    return edges


def _parse_schedules(source: Path | str) -> list[Schedule]:
    frame = _read_table(source, SCHEDULE_COLUMNS)
    schedules = []
    for i, row in enumerate(frame.itertuples(index=False)):
        line = i + 2
        try:
            departures = tuple(int(tok) for tok in row.departures.split(";") if tok.strip())
        except ValueError as e:
            raise ParseError(line, f"departures {row.departures!r} are not integers", str(source)) from e
        try:
            schedules.append(Schedule(
                id=row.schedule_id.strip(),
                ride_time_s=_number(row.ride_time_s, line, "ride_time_s", str(source)),
                departures=departures,
            ))
        except ValidationError as e:
            raise InvariantViolation(f"{source}:{line}: schedule {row.schedule_id!r}: {e.errors()[0]['msg']}") from e
    return schedules


def build_graph(nodes: Iterable[Node], edges: Iterable[Edge], schedules: Iterable[Schedule] = ()) -> TransportGraph:
    """Validate references and uniqueness, then build the immutable graph."""
    node_map: dict[str, Node] = {}
    for node in nodes:
        if node.id in node_map:
            raise InvariantViolation(f"duplicate node id {node.id!r}")
        node_map[node.id] = node

    schedule_map: dict[str, Schedule] = {}
    for schedule in schedules:
        if schedule.id in schedule_map:
            raise InvariantViolation(f"duplicate schedule id {schedule.id!r}")
        schedule_map[schedule.id] = schedule

    edge_map: dict[str, Edge] = {}
    for edge in edges:
        if edge.id in edge_map:
            raise InvariantViolation(f"duplicate edge id {edge.id!r}")
        for endpoint in (edge.from_node, edge.to_node):
            if endpoint not in node_map:
                raise DanglingReference(edge.id, endpoint)
        if edge.schedule_id is not None and edge.schedule_id not in schedule_map:
            raise DanglingReference(edge.id, edge.schedule_id)
        edge_map[edge.id] = edge

    return TransportGraph(nodes=node_map, edges=edge_map, schedules=schedule_map)


def load_graph(
    nodes_source: Path | str,
    edges_source: Path | str,
    schedules_source: Path | str | None = None,
    default_speeds: dict[ModeLabel, float] | None = None,
) -> TransportGraph:
    """Load and validate a graph from nodes.csv, edges.csv and schedules.csv."""
    speeds = default_speeds if default_speeds is not None else DEFAULT_SPEEDS_MPS
    nodes = _parse_nodes(nodes_source)
    edges = _parse_edges(edges_source, speeds)
    schedules = _parse_schedules(schedules_source) if schedules_source is not None else []
    graph = build_graph(nodes, edges, schedules)
    logger.info(f"Loaded graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, {len(graph.schedules)} schedules")
    return graph


def load_graph_dir(directory: Path, default_speeds: dict[ModeLabel, float] | None = None) -> TransportGraph:
    """Load nodes.csv, edges.csv and (optional) schedules.csv from a directory."""
    schedules = directory / "schedules.csv"
    return load_graph(
        directory / "nodes.csv",
        directory / "edges.csv",
        schedules if schedules.exists() else None,
        default_speeds,
    )


def save_graph(graph: TransportGraph, directory: Path) -> None:
    """Write a graph in the CSV formats accepted by load_graph."""
    directory.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(
        [{"id": n.id, "lat": repr(n.lat), "lon": repr(n.lon)} for n in graph.nodes.values()],
        columns=NODE_COLUMNS,
    ).to_csv(directory / "nodes.csv", index=False)
    pd.DataFrame(
        [
            {
                "id": e.id,
                "from": e.from_node,
                "to": e.to_node,
                "mode": e.mode.value,
                "length_m": repr(e.length_m),
                "speed_mps": "" if e.speed_mps is None else repr(e.speed_mps),
                "schedule_id": e.schedule_id or "",
                "capacity_vph": "" if e.capacity_vph is None else repr(e.capacity_vph),
            }
            for e in graph.edges.values()
        ],
        columns=EDGE_COLUMNS + ["capacity_vph"],
    ).to_csv(directory / "edges.csv", index=False)
    pd.DataFrame(
        [
            {
                "schedule_id": s.id,
                "ride_time_s": repr(s.ride_time_s),
                "departures": ";".join(str(t) for t in s.departures),
            }
            for s in graph.schedules.values()
        ],
        columns=SCHEDULE_COLUMNS,
    ).to_csv(directory / "schedules.csv", index=False)


def traversal(graph: TransportGraph, edge: Edge, departure_time: float) -> tuple[float, float]:
    """(wait_s, travel_s) when entering `edge` at `departure_time`."""
    if departure_time < 0:
        raise InvariantViolation(f"departure time must be non-negative, got {departure_time}")
    if edge.schedule_id is None:
        return 0.0, edge.length_m / edge.speed_mps

    schedule = graph.schedules[edge.schedule_id]
    # First departure at or after the requested time.
    idx = bisect.bisect_left(schedule.departures, departure_time)
    if idx == len(schedule.departures):
        raise NoService(edge.id, departure_time)
    return schedule.departures[idx] - departure_time, schedule.ride_time_s


def duration(graph: TransportGraph, edge: Edge, departure_time: float) -> float:
    """Seconds to traverse `edge` when arriving at its tail at `departure_time`, waiting included."""
    wait, travel = traversal(graph, edge, departure_time)
    return wait + travel
