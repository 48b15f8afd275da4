"""Road networks, traffic demand, and the JSON file formats for both.

Every road carries three lanes, one per movement, stored in the order
Straight, Left, Right.  A signalized intersection exposes its twelve
incoming lanes in the canonical order N, E, S, W (approach-major), which
fixes the layout of every observation vector built on top of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

APPROACHES = ("N", "E", "S", "W")
LANES_PER_ROAD = 3


class ScenarioError(ValueError):
    """Raised for malformed or invalid roadnet / flow data."""


class Movement(IntEnum):
    STRAIGHT = 0
    LEFT = 1
    RIGHT = 2


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float
    signalized: bool


@dataclass(frozen=True)
class Road:
    id: str
    start: str
    end: str
    length: float


@dataclass(frozen=True)
class Intersection:
    """A signalized four-way node.

    ``incoming`` and ``outgoing`` map an approach letter to a road id; an
    outgoing road keyed ``"N"`` leaves toward the north.  ``lanes`` holds the
    twelve global lane indices in canonical order.  ``feeds`` maps
    (approach, movement) to the outgoing road that movement discharges onto.
    """

    id: str
    incoming: dict[str, str]
    outgoing: dict[str, str]
    lanes: tuple[int, ...]
    feeds: dict[tuple[str, Movement], str]

    def lane(self, approach: str, movement: Movement) -> int:
        return self.lanes[APPROACHES.index(approach) * LANES_PER_ROAD + int(movement)]


@dataclass(frozen=True)
class FlowSpec:
    route: tuple[str, ...]
    interval: float
    start_time: float = 0.0
    end_time: float = 3600.0


def _compass(dx: float, dy: float) -> str:
    if abs(dy) >= abs(dx):
        return "N" if dy > 0 else "S"
    return "E" if dx > 0 else "W"


def _turn_angle(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


@dataclass
class RoadNetwork:
    nodes: list[Node]
    roads: list[Road]
    intersections: list[Intersection] = field(init=False)

    def __post_init__(self) -> None:
        self.node_by_id = {}
        for n in self.nodes:
            if n.id in self.node_by_id:
                raise ScenarioError(f"duplicate node id {n.id!r}")
            self.node_by_id[n.id] = n
        self.road_index = {}
        for i, r in enumerate(self.roads):
            if r.id in self.road_index:
                raise ScenarioError(f"duplicate road id {r.id!r}")
            for end in (r.start, r.end):
                if end not in self.node_by_id:
                    raise ScenarioError(f"road {r.id!r} references unknown node {end!r}")
            if not r.length > 0:
                raise ScenarioError(f"road {r.id!r} has non-positive length")
            self.road_index[r.id] = i
        self.intersections = [self._build_intersection(n) for n in self.nodes if n.signalized]
        self.intersection_by_node = {ix.id: ix for ix in self.intersections}

    # -- geometry -----------------------------------------------------------

    def _heading(self, road: Road) -> tuple[float, float]:
        a, b = self.node_by_id[road.start], self.node_by_id[road.end]
        return (b.x - a.x, b.y - a.y)

    def turn(self, road_in: str, road_out: str) -> Movement:
        """Movement a vehicle makes going from ``road_in`` onto ``road_out``."""
        r_in, r_out = self.road(road_in), self.road(road_out)
        if r_in.end != r_out.start:
            raise ScenarioError(f"roads {road_in!r} and {road_out!r} are not connected")
        ang = _turn_angle(self._heading(r_in), self._heading(r_out))
        if abs(ang) < math.pi / 4:
            return Movement.STRAIGHT
        if abs(ang) > 3 * math.pi / 4:
            raise ScenarioError(f"u-turn from {road_in!r} to {road_out!r} is not supported")
        return Movement.LEFT if ang > 0 else Movement.RIGHT

    def _build_intersection(self, node: Node) -> Intersection:
        incoming: dict[str, list[str]] = {}
        outgoing: dict[str, list[str]] = {}
        for r in self.roads:
            if r.end == node.id:
                u = self.node_by_id[r.start]
                incoming.setdefault(_compass(u.x - node.x, u.y - node.y), []).append(r.id)
            if r.start == node.id:
                w = self.node_by_id[r.end]
                outgoing.setdefault(_compass(w.x - node.x, w.y - node.y), []).append(r.id)
        if sorted(incoming) != sorted(APPROACHES) or any(len(v) != 1 for v in incoming.values()):
            raise ScenarioError(
                f"signalized intersection {node.id!r} must have exactly one incoming road "
                f"from each of N/E/S/W (got {sorted((k, len(v)) for k, v in incoming.items())})"
            )
        if sorted(outgoing) != sorted(APPROACHES) or any(len(v) != 1 for v in outgoing.values()):
            raise ScenarioError(
                f"signalized intersection {node.id!r} must have exactly one outgoing road "
                f"toward each of N/E/S/W"
            )
        inc = {k: v[0] for k, v in incoming.items()}
        out = {k: v[0] for k, v in outgoing.items()}
        lanes = tuple(self.road_index[inc[a]] * LANES_PER_ROAD + m for a in APPROACHES for m in range(3))
        feeds = {}
        for a in APPROACHES:
            for d in APPROACHES:
                if d == a:
                    continue  # u-turn
                feeds[(a, self.turn(inc[a], out[d]))] = out[d]
        if len(feeds) != 12:
            raise ScenarioError(f"intersection {node.id!r} has ambiguous turn geometry")
        return Intersection(node.id, inc, out, lanes, feeds)

    # -- lookups ------------------------------------------------------------

    def road(self, road_id: str) -> Road:
        try:
            return self.roads[self.road_index[road_id]]
        except KeyError:
            raise ScenarioError(f"unknown road {road_id!r}") from None

    @property
    def n_lanes(self) -> int:
        return len(self.roads) * LANES_PER_ROAD

    def lane_id(self, lane: int) -> str:
        return f"{self.roads[lane // LANES_PER_ROAD].id}_{lane % LANES_PER_ROAD}"

    def lane_index(self, road_id: str, movement: Movement) -> int:
        return self.road_index[road_id] * LANES_PER_ROAD + int(movement)

    def lane_length(self, lane: int) -> float:
        return self.roads[lane // LANES_PER_ROAD].length

    def route_lanes(self, route: tuple[str, ...] | list[str]) -> list[int]:
        """Lane sequence for a route; the final road uses its Straight lane."""
        if not route:
            raise ScenarioError("empty route")
        lanes = []
        for i, rid in enumerate(route):
            self.road(rid)
            mv = self.turn(rid, route[i + 1]) if i + 1 < len(route) else Movement.STRAIGHT
            lanes.append(self.lane_index(rid, mv))
        return lanes

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "x": n.x, "y": n.y, "signalized": n.signalized} for n in self.nodes],
            "roads": [{"id": r.id, "from": r.start, "to": r.end, "length_m": r.length} for r in self.roads],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoadNetwork":
        if "intersections" in data and "nodes" not in data:
            return _from_cityflow(data)
        try:
            nodes = [
                Node(str(n["id"]), float(n["x"]), float(n["y"]), bool(n.get("signalized", False)))
                for n in data["nodes"]
            ]
            roads = [
                Road(str(r["id"]), str(r["from"]), str(r["to"]), float(r["length_m"]))
                for r in data["roads"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed roadnet: {exc!r}") from exc
        return cls(nodes, roads)


def _from_cityflow(data: dict) -> RoadNetwork:
    """Adapter for open-dataset roadnet files (``intersections`` / ``roads`` with points)."""
    try:
        nodes = [
            Node(str(i["id"]), float(i["point"]["x"]), float(i["point"]["y"]), not i.get("virtual", False))
            for i in data["intersections"]
        ]
        roads = []
        for r in data["roads"]:
            pts = r.get("points") or []
            length = sum(math.dist((p["x"], p["y"]), (q["x"], q["y"])) for p, q in zip(pts, pts[1:]))
            roads.append(Road(str(r["id"]), str(r["startIntersection"]), str(r["endIntersection"]), length))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed roadnet: {exc!r}") from exc
    return RoadNetwork(nodes, roads)


def build_grid(rows: int, cols: int, approach_len_ns: float, approach_len_ew: float) -> RoadNetwork:
    """Signalized ``rows`` x ``cols`` grid with one boundary node beyond every edge.

    Row 0 is the northern row.  Links are bidirectional; NS links have length
    ``approach_len_ns`` and EW links ``approach_len_ew``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if approach_len_ns <= 0 or approach_len_ew <= 0:
        raise ValueError("approach lengths must be positive")
    ns, ew = float(approach_len_ns), float(approach_len_ew)

    def inter(r, c):
        return f"i_{r}_{c}"

    nodes = [Node(inter(r, c), c * ew, -r * ns, True) for r in range(rows) for c in range(cols)]
    pairs: list[tuple[str, str, float]] = []
    for r in range(rows):
        for c in range(cols - 1):
            pairs.append((inter(r, c), inter(r, c + 1), ew))
    for c in range(cols):
        for r in range(rows - 1):
            pairs.append((inter(r, c), inter(r + 1, c), ns))
    for c in range(cols):
        nodes.append(Node(f"b_N_{c}", c * ew, ns, False))
        nodes.append(Node(f"b_S_{c}", c * ew, -(rows - 1) * ns - ns, False))
        pairs.append((f"b_N_{c}", inter(0, c), ns))
        pairs.append((inter(rows - 1, c), f"b_S_{c}", ns))
    for r in range(rows):
        nodes.append(Node(f"b_W_{r}", -ew, -r * ns, False))
        nodes.append(Node(f"b_E_{r}", cols * ew, -r * ns, False))
        pairs.append((f"b_W_{r}", inter(r, 0), ew))
        pairs.append((inter(r, cols - 1), f"b_E_{r}", ew))
    roads = []
    for a, b, length in pairs:
        roads.append(Road(f"{a}__{b}", a, b, length))
        roads.append(Road(f"{b}__{a}", b, a, length))
    return RoadNetwork(nodes, roads)


def straight_flows(
    net: RoadNetwork, ns_interval: float, ew_interval: float, start: float = 0.0, end: float = 3600.0
) -> list[FlowSpec]:
    """One straight-through flow from every boundary node across a grid built by `build_grid`."""
    flows = []
    for n in net.nodes:
        if n.signalized:
            continue
        route = []
        cur = n.id
        prev = None
        while True:
            nxt = [r for r in net.roads if r.start == cur and (prev is None or r.end != prev)]
            if prev is not None:
                nxt = [r for r in nxt if net.turn(route[-1], r.id) == Movement.STRAIGHT]
            if not nxt:
                break
            route.append(nxt[0].id)
            prev, cur = cur, nxt[0].end
            if not net.node_by_id[cur].signalized:
                break
        heading = _compass(*net._heading(net.road(route[0])))
        interval = ns_interval if heading in ("N", "S") else ew_interval
        flows.append(FlowSpec(tuple(route), float(interval), float(start), float(end)))
    return flows


def validate_flow(net: RoadNetwork, flow: FlowSpec) -> None:
    if not flow.interval > 0:
        raise ScenarioError(f"flow interval must be positive (route {list(flow.route)})")
    if not 0 <= flow.start_time <= flow.end_time:
        raise ScenarioError(f"flow times must satisfy 0 <= startTime <= endTime (route {list(flow.route)})")
    net.route_lanes(flow.route)


def expand_flows(flows: list[FlowSpec], horizon: float) -> list[tuple[int, tuple[str, ...]]]:
    """Time-ordered spawn schedule; equal times keep flow declaration order.

    Spawn times are rounded to the simulator's 1 s resolution.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    events = []
    for order, f in enumerate(flows):
        last = min(f.end_time, horizon)
        k = 0
        while True:
            t = f.start_time + k * f.interval
            if t > last + 1e-9:
                break
            events.append((int(round(t)), order, k, f.route))
            k += 1
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return [(t, route) for t, _, _, route in events]


@dataclass
class Scenario:
    network: RoadNetwork
    flows: list[FlowSpec]

    def __post_init__(self) -> None:
        for f in self.flows:
            validate_flow(self.network, f)

    def schedule(self, horizon: float) -> list[tuple[int, tuple[str, ...]]]:
        return expand_flows(self.flows, horizon)


def flows_to_list(flows: list[FlowSpec]) -> list[dict]:
    return [
        {"route": list(f.route), "interval": f.interval, "startTime": f.start_time, "endTime": f.end_time}
        for f in flows
    ]


def flows_from_list(data: list) -> list[FlowSpec]:
    if not isinstance(data, list):
        raise ScenarioError("flow file must contain a JSON list")
    try:
        return [
            FlowSpec(
                tuple(str(r) for r in f["route"]),
                float(f["interval"]),
                float(f.get("startTime", 0.0)),
                float(f.get("endTime", 3600.0)),
            )
            for f in data
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed flow entry: {exc!r}") from exc


def _read_json(path) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc


def load_roadnet(path) -> RoadNetwork:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: roadnet must be a JSON object")
    return RoadNetwork.from_dict(data)


def load_scenario(roadnet_path, flow_path) -> Scenario:
    net = load_roadnet(roadnet_path)
    return Scenario(net, flows_from_list(_read_json(flow_path)))


def save_roadnet(net: RoadNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1))


def save_flows(flows: list[FlowSpec], path) -> None:
    Path(path).write_text(json.dumps(flows_to_list(flows), indent=1))


def asymmetric_scenario(ns_interval: float = 4.0, ew_interval: float = 12.0, length: float = 300.0,
                        horizon: float = 3600.0, rows: int = 1, cols: int = 1) -> Scenario:
    """Grid with straight-through demand heavier on NS than EW."""
    net = build_grid(rows, cols, length, length)
    return Scenario(net, straight_flows(net, ns_interval, ew_interval, 0.0, horizon))
