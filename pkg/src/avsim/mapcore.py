"""In-memory HD-map model: lane graph, validation, queries, native format.

The local frame is east-north-up with a geodetic (lat, lon) anchor at the
origin. All ids are strings, unique within their collection. Maps are
treated as immutable once a world is built on top of them; the polyline
cache relies on that.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MapFormatError, MapValidationError, UnknownElementError
from .geom import Polyline

NATIVE_VERSION = 1
DEFAULT_SPEED_LIMIT = 13.89  # m/s


class TurnType(str, enum.Enum):
    STRAIGHT = "straight"
    LEFT = "left"
    RIGHT = "right"
    U_TURN = "u_turn"


class BoundaryStyle(str, enum.Enum):
    SOLID = "solid"
    DASHED = "dashed"
    DOUBLE = "double"
    CURB = "curb"


class SignalPhase(str, enum.Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"


class SignKind(str, enum.Enum):
    STOP = "stop"
    YIELD = "yield"


@dataclass(frozen=True)
class LanePoint:
    x: float
    y: float
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


@dataclass
class Lane:
    id: str
    centerline: list[LanePoint]
    left_boundary_id: str | None = None
    right_boundary_id: str | None = None
    successors: list[str] = field(default_factory=list)
    predecessors: list[str] = field(default_factory=list)
    speed_limit: float = DEFAULT_SPEED_LIMIT
    turn_type: TurnType = TurnType.STRAIGHT


@dataclass
class BoundaryLine:
    id: str
    polyline: list[LanePoint]
    style: BoundaryStyle = BoundaryStyle.SOLID


@dataclass
class TrafficSignal:
    id: str
    stop_line: list[LanePoint]
    controlled_lane_ids: list[str]
    initial_state: SignalPhase = SignalPhase.RED


@dataclass
class TrafficSign:
    id: str
    kind: SignKind
    stop_line: list[LanePoint]
    controlled_lane_ids: list[str]


@dataclass
class PedestrianRoute:
    id: str
    waypoints: list[LanePoint]


@dataclass
class HdMap:
    origin_lat: float = 0.0
    origin_lon: float = 0.0
    lanes: dict[str, Lane] = field(default_factory=dict)
    boundaries: dict[str, BoundaryLine] = field(default_factory=dict)
    signals: dict[str, TrafficSignal] = field(default_factory=dict)
    signs: dict[str, TrafficSign] = field(default_factory=dict)
    pedestrian_routes: dict[str, PedestrianRoute] = field(default_factory=dict)
    _polylines: dict = field(default_factory=dict, compare=False, repr=False)

    def lane(self, lane_id: str) -> Lane:
        try:
            return self.lanes[lane_id]
        except KeyError:
            raise UnknownElementError(f"unknown lane {lane_id!r}") from None

    def add_lane(self, lane: Lane) -> None:
        self.lanes[lane.id] = lane
        self._polylines.clear()


@dataclass(frozen=True)
class Violation:
    element_id: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.element_id}:{self.rule}: {self.message}"


def lane_polyline(hd_map: HdMap, lane_id: str) -> Polyline:
    pl = hd_map._polylines.get(lane_id)
    if pl is None:
        lane = hd_map.lane(lane_id)
        pl = Polyline([p.as_array() for p in lane.centerline])
        hd_map._polylines[lane_id] = pl
    return pl


def _check_polyline(element_id: str, points: list[LanePoint], out: list[Violation]) -> None:
    if len(points) < 2:
        out.append(Violation(element_id, "degenerate_polyline", "fewer than 2 points"))
        return
    for p in points:
        if not p.is_finite():
            out.append(Violation(element_id, "nonfinite", "non-finite coordinate"))
            return
    for a, b in zip(points, points[1:]):
        if a == b:
            out.append(
                Violation(element_id, "degenerate_polyline", "consecutive identical points")
            )
            return


def validate(hd_map: HdMap) -> list[Violation]:
    """Check every map invariant; empty result means well-formed.

    Deterministic: violations sorted by (element id, rule, message).
    """
    out: list[Violation] = []
    lanes = hd_map.lanes
    for lane in lanes.values():
        _check_polyline(lane.id, lane.centerline, out)
        if not (lane.speed_limit > 0):
            out.append(Violation(lane.id, "bad_speed_limit", f"speed_limit {lane.speed_limit}"))
        for ref in lane.successors:
            if ref not in lanes:
                out.append(Violation(lane.id, "dangling_ref", f"successor {ref!r} missing"))
            elif lane.id not in lanes[ref].predecessors:
                out.append(
                    Violation(lane.id, "asymmetric_link", f"{ref!r} lacks predecessor back-link")
                )
        for ref in lane.predecessors:
            if ref not in lanes:
                out.append(Violation(lane.id, "dangling_ref", f"predecessor {ref!r} missing"))
            elif lane.id not in lanes[ref].successors:
                out.append(
                    Violation(lane.id, "asymmetric_link", f"{ref!r} lacks successor link")
                )
        for ref in (lane.left_boundary_id, lane.right_boundary_id):
            if ref is not None and ref not in hd_map.boundaries:
                out.append(Violation(lane.id, "dangling_ref", f"boundary {ref!r} missing"))
    for boundary in hd_map.boundaries.values():
        _check_polyline(boundary.id, boundary.polyline, out)
    for elem_id, stop_line, controlled in [
        (s.id, s.stop_line, s.controlled_lane_ids) for s in hd_map.signals.values()
    ] + [(s.id, s.stop_line, s.controlled_lane_ids) for s in hd_map.signs.values()]:
        if len(stop_line) != 2 or stop_line[0] == stop_line[1]:
            out.append(Violation(elem_id, "degenerate_polyline", "stop line needs 2 distinct points"))
        if not controlled:
            out.append(Violation(elem_id, "dangling_ref", "no controlled lanes"))
        for ref in controlled:
            if ref not in lanes:
                out.append(Violation(elem_id, "dangling_ref", f"controlled lane {ref!r} missing"))
    for route in hd_map.pedestrian_routes.values():
        _check_polyline(route.id, route.waypoints, out)
    return sorted(out, key=lambda v: (v.element_id, v.rule, v.message))


def successors(hd_map: HdMap, lane_id: str) -> list[str]:
    return list(hd_map.lane(lane_id).successors)


def link_lanes(hd_map: HdMap, from_id: str, to_id: str) -> None:
    """Create a successor/predecessor pair, keeping the symmetry invariant."""
    a, b = hd_map.lane(from_id), hd_map.lane(to_id)
    if to_id not in a.successors:
        a.successors.append(to_id)
    if from_id not in b.predecessors:
        b.predecessors.append(from_id)


def project_to_lane(
    hd_map: HdMap, point, candidate_lanes: list[str] | None = None
) -> tuple[str, float, float]:
    """Project a point onto the nearest lane centerline.

    Returns (lane_id, arc length s, signed lateral offset d); ties on
    distance break toward the lexicographically smaller lane id.
    """
    ids = sorted(candidate_lanes) if candidate_lanes is not None else sorted(hd_map.lanes)
    if not ids:
        raise UnknownElementError("map has no lanes to project onto")
    best = None
    for lane_id in ids:
        s, d = lane_polyline(hd_map, lane_id).project(point)
        if best is None or abs(d) < best[0]:
            best = (abs(d), lane_id, s, d)
    return best[1], best[2], best[3]


def sample_centerline(hd_map: HdMap, lane_id: str, spacing: float):
    """Arc-length-uniform resample of a lane centerline.

    Returns [(point ndarray, heading)] including both endpoints; consecutive
    arc gaps never exceed ``spacing``.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    return lane_polyline(hd_map, lane_id).resample(spacing)


# ---------- native format (docs/map-native.md) ----------


def _points_out(points: list[LanePoint]) -> list[list[float]]:
    return [[p.x, p.y, p.z] for p in points]


def _points_in(raw, where: str) -> list[LanePoint]:
    try:
        return [LanePoint(float(p[0]), float(p[1]), float(p[2])) for p in raw]
    except (TypeError, ValueError, IndexError):
        raise MapFormatError(f"{where}: malformed point list") from None


def map_to_dict(hd_map: HdMap) -> dict:
    return {
        "version": NATIVE_VERSION,
        "origin": {"lat": hd_map.origin_lat, "lon": hd_map.origin_lon},
        "lanes": [
            {
                "id": lane.id,
                "centerline": _points_out(lane.centerline),
                "left_boundary_id": lane.left_boundary_id,
                "right_boundary_id": lane.right_boundary_id,
                "successors": list(lane.successors),
                "predecessors": list(lane.predecessors),
                "speed_limit": lane.speed_limit,
                "turn_type": lane.turn_type.value,
            }
            for lane in sorted(hd_map.lanes.values(), key=lambda x: x.id)
        ],
        "boundaries": [
            {"id": b.id, "polyline": _points_out(b.polyline), "style": b.style.value}
            for b in sorted(hd_map.boundaries.values(), key=lambda x: x.id)
        ],
        "signals": [
            {
                "id": s.id,
                "stop_line": _points_out(s.stop_line),
                "controlled_lane_ids": list(s.controlled_lane_ids),
                "initial_state": s.initial_state.value,
            }
            for s in sorted(hd_map.signals.values(), key=lambda x: x.id)
        ],
        "signs": [
            {
                "id": s.id,
                "kind": s.kind.value,
                "stop_line": _points_out(s.stop_line),
                "controlled_lane_ids": list(s.controlled_lane_ids),
            }
            for s in sorted(hd_map.signs.values(), key=lambda x: x.id)
        ],
        "pedestrian_routes": [
            {"id": r.id, "waypoints": _points_out(r.waypoints)}
            for r in sorted(hd_map.pedestrian_routes.values(), key=lambda x: x.id)
        ],
    }


def save_native(hd_map: HdMap) -> bytes:
    """Serialize to the native JSON document (exact float round-trip)."""
    return json.dumps(map_to_dict(hd_map), sort_keys=True, separators=(",", ":")).encode("utf-8")


def _require(doc: dict, key: str):
    if key not in doc:
        raise MapFormatError(f"native map document missing required key {key!r}")
    return doc[key]


def _enum_in(cls, raw, where: str):
    try:
        return cls(raw)
    except ValueError:
        raise MapFormatError(f"{where}: bad enum value {raw!r}") from None


def map_from_dict(doc: dict) -> HdMap:
    if not isinstance(doc, dict):
        raise MapFormatError("native map document must be a JSON object")
    version = _require(doc, "version")
    if version != NATIVE_VERSION:
        raise MapFormatError(f"unsupported native map version {version!r}")
    origin = _require(doc, "origin")
    hd_map = HdMap(origin_lat=float(origin["lat"]), origin_lon=float(origin["lon"]))
    for raw in _require(doc, "lanes"):
        lane = Lane(
            id=str(raw["id"]),
            centerline=_points_in(raw["centerline"], f"lane {raw.get('id')}"),
            left_boundary_id=raw.get("left_boundary_id"),
            right_boundary_id=raw.get("right_boundary_id"),
            successors=[str(x) for x in raw.get("successors", [])],
            predecessors=[str(x) for x in raw.get("predecessors", [])],
            speed_limit=float(raw.get("speed_limit", DEFAULT_SPEED_LIMIT)),
            turn_type=_enum_in(TurnType, raw.get("turn_type", "straight"), f"lane {raw.get('id')}"),
        )
        if lane.id in hd_map.lanes:
            raise MapFormatError(f"duplicate lane id {lane.id!r}")
        hd_map.lanes[lane.id] = lane
    for raw in _require(doc, "boundaries"):
        b = BoundaryLine(
            id=str(raw["id"]),
            polyline=_points_in(raw["polyline"], f"boundary {raw.get('id')}"),
            style=_enum_in(BoundaryStyle, raw.get("style", "solid"), f"boundary {raw.get('id')}"),
        )
        if b.id in hd_map.boundaries:
            raise MapFormatError(f"duplicate boundary id {b.id!r}")
        hd_map.boundaries[b.id] = b
    for raw in _require(doc, "signals"):
        s = TrafficSignal(
            id=str(raw["id"]),
            stop_line=_points_in(raw["stop_line"], f"signal {raw.get('id')}"),
            controlled_lane_ids=[str(x) for x in raw["controlled_lane_ids"]],
            initial_state=_enum_in(
                SignalPhase, raw.get("initial_state", "red"), f"signal {raw.get('id')}"
            ),
        )
        if s.id in hd_map.signals:
            raise MapFormatError(f"duplicate signal id {s.id!r}")
        hd_map.signals[s.id] = s
    for raw in _require(doc, "signs"):
        s = TrafficSign(
            id=str(raw["id"]),
            kind=_enum_in(SignKind, raw["kind"], f"sign {raw.get('id')}"),
            stop_line=_points_in(raw["stop_line"], f"sign {raw.get('id')}"),
            controlled_lane_ids=[str(x) for x in raw["controlled_lane_ids"]],
        )
        if s.id in hd_map.signs:
            raise MapFormatError(f"duplicate sign id {s.id!r}")
        hd_map.signs[s.id] = s
    for raw in _require(doc, "pedestrian_routes"):
        r = PedestrianRoute(
            id=str(raw["id"]), waypoints=_points_in(raw["waypoints"], f"route {raw.get('id')}")
        )
        if r.id in hd_map.pedestrian_routes:
            raise MapFormatError(f"duplicate pedestrian route id {r.id!r}")
        hd_map.pedestrian_routes[r.id] = r
    return hd_map


def load_native(data: bytes) -> HdMap:
    """Parse and validate a native JSON map document."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MapFormatError(f"malformed native map document: {exc}") from None
    hd_map = map_from_dict(doc)
    violations = validate(hd_map)
    if violations:
        raise MapValidationError(violations)
    return hd_map
