"""OpenDRIVE 1.4 import/export subset.

Import supports: planView ``line`` and ``arc`` geometries, ``laneOffset``
polynomials, one or more lane sections with left/right driving lanes of
constant or polynomial width, road- and lane-level linkage, ``junction``
connectivity, and ``signal`` elements of stop/yield/trafficLight types.
Everything else is dropped with a warning. Elevation is not modelled; z is
always 0 in imported maps.

Export maps every lane to one single-lane road whose reference line is the
polyline-fitted centerline (collinear runs merged); a constant laneOffset
of +width/2 makes the re-imported centerline coincide with the reference
line exactly. Multi-successor lanes become junction connections.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import MapFormatError, MapValidationError
from .geom import Polyline
from .mapcore import (
    DEFAULT_SPEED_LIMIT,
    HdMap,
    Lane,
    LanePoint,
    SignalPhase,
    SignKind,
    TrafficSign,
    TrafficSignal,
    TurnType,
    lane_polyline,
    link_lanes,
    validate,
)
from .mapio import FormatReport

DEFAULT_LANE_WIDTH = 3.5
CHORD_TARGET = 0.2  # m, conservative vs the 0.5 m contract to cover lane offsets
MAX_SAMPLE_STEP = 5.0  # m
COLLINEAR_EPS = 1e-12

_SIGNAL_TYPES = {"trafficLight": "signal", "1000001": "signal", "1000011": "signal"}
_SIGN_TYPES = {
    "stop": SignKind.STOP,
    "stopSign": SignKind.STOP,
    "206": SignKind.STOP,
    "yield": SignKind.YIELD,
    "205": SignKind.YIELD,
}


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass
class _Poly:
    s: float
    a: float
    b: float
    c: float
    d: float

    def eval(self, ds: float) -> float:
        return self.a + self.b * ds + self.c * ds * ds + self.d * ds * ds * ds


def _eval_poly_list(polys: list[_Poly], s: float) -> float:
    """Evaluate the piecewise polynomial entry active at s (s >= entry.s)."""
    if not polys:
        return 0.0
    active = polys[0]
    for p in polys:
        if p.s <= s + 1e-9:
            active = p
        else:
            break
    return active.eval(s - active.s)


@dataclass
class _Geometry:
    s: float
    x: float
    y: float
    hdg: float
    length: float
    kind: str  # "line" | "arc" | unsupported tag name
    curvature: float = 0.0

    def eval(self, ds: float) -> tuple[float, float, float]:
        if self.kind == "arc" and abs(self.curvature) > 1e-12:
            h1 = self.hdg + self.curvature * ds
            x = self.x + (math.sin(h1) - math.sin(self.hdg)) / self.curvature
            y = self.y - (math.cos(h1) - math.cos(self.hdg)) / self.curvature
            return x, y, h1
        return (
            self.x + ds * math.cos(self.hdg),
            self.y + ds * math.sin(self.hdg),
            self.hdg,
        )

    def max_step(self) -> float:
        if self.kind == "arc" and abs(self.curvature) > 1e-12:
            radius = 1.0 / abs(self.curvature)
            if CHORD_TARGET >= radius:
                theta = math.pi / 2
            else:
                theta = 2.0 * math.acos(1.0 - CHORD_TARGET / radius)
            return min(MAX_SAMPLE_STEP, theta * radius)
        return MAX_SAMPLE_STEP


@dataclass
class _XodrLane:
    lane_id: int
    lane_type: str
    widths: list[_Poly]
    succ: int | None
    pred: int | None


@dataclass
class _Section:
    s: float
    end: float = 0.0
    left: list[_XodrLane] = field(default_factory=list)
    right: list[_XodrLane] = field(default_factory=list)


@dataclass
class _Road:
    rid: str
    name: str
    length: float
    junction: str
    geoms: list[_Geometry]
    lane_offsets: list[_Poly]
    sections: list[_Section]
    succ: tuple[str, str, str] | None  # (elementType, elementId, contactPoint)
    speed_limit: float | None


def _parse_poly(elem, s_attr: str = "s") -> _Poly:
    return _Poly(
        s=float(elem.get(s_attr, 0.0)),
        a=float(elem.get("a", 0.0)),
        b=float(elem.get("b", 0.0)),
        c=float(elem.get("c", 0.0)),
        d=float(elem.get("d", 0.0)),
    )


def _parse_road(road_elem, report: FormatReport) -> _Road:
    rid = road_elem.get("id")
    plan_view = road_elem.find("planView")
    if plan_view is None:
        raise MapFormatError(f"road {rid}: missing planView")
    geoms = []
    for g in plan_view.findall("geometry"):
        children = list(g)
        kind = children[0].tag if children else "empty"
        geom = _Geometry(
            s=float(g.get("s", 0.0)),
            x=float(g.get("x", 0.0)),
            y=float(g.get("y", 0.0)),
            hdg=float(g.get("hdg", 0.0)),
            length=float(g.get("length", 0.0)),
            kind=kind,
        )
        if kind == "arc":
            geom.curvature = float(children[0].get("curvature", 0.0))
        elif kind != "line":
            report.warn(f"road {rid} geometry s={geom.s}", f"{kind} unsupported", dropped=True)
        geoms.append(geom)

    lanes_elem = road_elem.find("lanes")
    lane_offsets = (
        [_parse_poly(e) for e in lanes_elem.findall("laneOffset")] if lanes_elem is not None else []
    )
    sections: list[_Section] = []
    if lanes_elem is not None:
        for sec_elem in lanes_elem.findall("laneSection"):
            sec = _Section(s=float(sec_elem.get("s", 0.0)))
            for side_name in ("left", "right"):
                side_elem = sec_elem.find(side_name)
                if side_elem is None:
                    continue
                out = sec.left if side_name == "left" else sec.right
                for lane_elem in side_elem.findall("lane"):
                    lid = int(lane_elem.get("id"))
                    ltype = lane_elem.get("type", "none")
                    widths = sorted(
                        (_parse_poly(w, "sOffset") for w in lane_elem.findall("width")),
                        key=lambda p: p.s,
                    )
                    succ = pred = None
                    link = lane_elem.find("link")
                    if link is not None:
                        se = link.find("successor")
                        pe = link.find("predecessor")
                        succ = int(se.get("id")) if se is not None else None
                        pred = int(pe.get("id")) if pe is not None else None
                    if ltype != "driving":
                        report.warn(
                            f"road {rid} lane {lid}", f"type {ltype!r} not driving", dropped=True
                        )
                        continue
                    out.append(_XodrLane(lid, ltype, widths, succ, pred))
            sec.left.sort(key=lambda l: abs(l.lane_id))
            sec.right.sort(key=lambda l: abs(l.lane_id))
            sections.append(sec)
    road_length = float(road_elem.get("length", 0.0))
    if not road_length and geoms:
        road_length = geoms[-1].s + geoms[-1].length
    sections.sort(key=lambda s: s.s)
    for i, sec in enumerate(sections):
        sec.end = sections[i + 1].s if i + 1 < len(sections) else road_length

    succ = None
    link = road_elem.find("link")
    if link is not None:
        se = link.find("successor")
        if se is not None:
            contact = se.get("contactPoint", "start")
            succ = (se.get("elementType", "road"), se.get("elementId"), contact)
            if succ[0] == "road" and contact != "start":
                report.warn(f"road {rid}", f"successor contactPoint {contact!r} unsupported", dropped=True)
                succ = None

    speed_limit = None
    type_elem = road_elem.find("type")
    if type_elem is not None:
        speed_elem = type_elem.find("speed")
        if speed_elem is not None:
            value = float(speed_elem.get("max"))
            unit = speed_elem.get("unit", "m/s")
            if unit in ("km/h", "kmh"):
                value /= 3.6
            elif unit == "mph":
                value *= 0.44704
            speed_limit = value

    for tag in ("elevationProfile", "lateralProfile"):
        if road_elem.find(tag) is not None:
            report.warn(f"road {rid}", f"{tag} unsupported", dropped=True)

    return _Road(
        rid=rid,
        name=road_elem.get("name", ""),
        length=road_length,
        junction=road_elem.get("junction", "-1"),
        geoms=geoms,
        lane_offsets=lane_offsets,
        sections=sections,
        succ=succ,
        speed_limit=speed_limit,
    )


def _sample_values(road: _Road, s0: float, s1: float) -> list[float]:
    """Sample s positions in [s0, s1]: breakpoints plus chord-bound refinement."""
    breaks = {s0, s1}
    for g in road.geoms:
        for v in (g.s, g.s + g.length):
            if s0 < v < s1:
                breaks.add(v)
    for p in road.lane_offsets:
        if s0 < p.s < s1:
            breaks.add(p.s)
    pts = sorted(breaks)
    out: list[float] = []
    for a, b in zip(pts, pts[1:]):
        geom = _geom_at(road, 0.5 * (a + b))
        if geom is None or geom.kind not in ("line", "arc"):
            continue
        step = geom.max_step()
        n = max(1, math.ceil((b - a) / step - 1e-9))
        for i in range(n):
            out.append(a + (b - a) * i / n)
    out.append(s1)
    dedup: list[float] = []
    for s in out:
        if not dedup or s - dedup[-1] > 1e-9:
            dedup.append(s)
    return dedup


def _geom_at(road: _Road, s: float) -> _Geometry | None:
    found = None
    for g in road.geoms:
        if g.s <= s + 1e-9:
            found = g
        else:
            break
    if found is not None and s <= found.s + found.length + 1e-9:
        return found
    return None


def _ref_pose(road: _Road, s: float) -> tuple[float, float, float] | None:
    geom = _geom_at(road, s)
    if geom is None or geom.kind not in ("line", "arc"):
        return None
    return geom.eval(s - geom.s)


def _lane_center_t(road: _Road, sec: _Section, lane: _XodrLane, s: float) -> float:
    """Lateral offset of a lane centerline from the reference line at s."""
    offset = _eval_poly_list(road.lane_offsets, s)
    side = sec.left if lane.lane_id > 0 else sec.right
    sign = 1.0 if lane.lane_id > 0 else -1.0
    acc = 0.0
    for other in side:
        w = _eval_poly_list(other.widths, s - sec.s)
        if abs(other.lane_id) < abs(lane.lane_id):
            acc += w
        elif other.lane_id == lane.lane_id:
            return offset + sign * (acc + 0.5 * w)
    return offset


def import_opendrive(data: bytes) -> tuple[HdMap, FormatReport]:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MapFormatError(f"XML parse failure: {exc}") from None
    if root.tag != "OpenDRIVE":
        raise MapFormatError(f"expected <OpenDRIVE> root, got <{root.tag}>")
    report = FormatReport()

    header = root.find("header")
    lat0 = float(header.get("originLat", 0.0)) if header is not None else 0.0
    lon0 = float(header.get("originLon", 0.0)) if header is not None else 0.0
    hd_map = HdMap(origin_lat=lat0, origin_lon=lon0)

    roads = [_parse_road(r, report) for r in root.findall("road")]
    by_id = {r.rid: r for r in roads}

    # lane naming: single-driving-lane roads with a name keep it as lane id
    def lane_name(road: _Road, sec_idx: int, lane_id: int) -> str:
        total = sum(len(s.left) + len(s.right) for s in road.sections)
        if total == 1 and road.name:
            return road.name
        return f"r{road.rid}:{sec_idx}:{lane_id}"

    lane_lookup: dict[tuple[str, int, int], str] = {}
    for road in roads:
        for sec_idx, sec in enumerate(road.sections):
            for lane in sec.left + sec.right:
                samples = _sample_values(road, sec.s, sec.end)
                pts: list[LanePoint] = []
                for s in samples:
                    pose = _ref_pose(road, s)
                    if pose is None:
                        continue
                    x, y, hdg = pose
                    t = _lane_center_t(road, sec, lane, s)
                    pts.append(LanePoint(x - t * math.sin(hdg), y + t * math.cos(hdg), 0.0))
                pts = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
                if len(pts) < 2:
                    report.warn(
                        f"road {road.rid} lane {lane.lane_id}", "degenerate geometry", dropped=True
                    )
                    continue
                if lane.lane_id > 0:
                    pts.reverse()  # left lanes travel against the reference line
                name = lane_name(road, sec_idx, lane.lane_id)
                if name in hd_map.lanes:
                    raise MapFormatError(f"duplicate lane id {name!r}")
                hd_map.add_lane(
                    Lane(
                        id=name,
                        centerline=pts,
                        speed_limit=road.speed_limit
                        if road.speed_limit is not None
                        else DEFAULT_SPEED_LIMIT,
                    )
                )
                lane_lookup[(road.rid, sec_idx, lane.lane_id)] = name

    def try_link(a_key, b_key):
        a, b = lane_lookup.get(a_key), lane_lookup.get(b_key)
        if a is not None and b is not None:
            link_lanes(hd_map, a, b)

    for road in roads:
        n_sec = len(road.sections)
        # chain lane sections within the road
        for sec_idx in range(n_sec - 1):
            sec, nxt = road.sections[sec_idx], road.sections[sec_idx + 1]
            nxt_ids = {l.lane_id for l in nxt.left + nxt.right}
            for lane in sec.left + sec.right:
                target = lane.succ if lane.succ is not None else (
                    lane.lane_id if lane.lane_id in nxt_ids else None
                )
                if target is None:
                    continue
                if lane.lane_id > 0:  # left lanes travel backwards through sections
                    try_link((road.rid, sec_idx + 1, target), (road.rid, sec_idx, lane.lane_id))
                else:
                    try_link((road.rid, sec_idx, lane.lane_id), (road.rid, sec_idx + 1, target))
        # road-level successor
        if road.succ is not None and road.succ[0] == "road" and road.succ[1] in by_id:
            nxt_road = by_id[road.succ[1]]
            if nxt_road.sections and road.sections:
                last = n_sec - 1
                nxt_first = nxt_road.sections[0]
                nxt_ids = {l.lane_id for l in nxt_first.left + nxt_first.right}
                for lane in road.sections[last].left + road.sections[last].right:
                    target = lane.succ if lane.succ is not None else (
                        lane.lane_id if lane.lane_id in nxt_ids else None
                    )
                    if target is None:
                        continue
                    if lane.lane_id > 0:
                        try_link(
                            (nxt_road.rid, 0, target), (road.rid, last, lane.lane_id)
                        )
                    else:
                        try_link(
                            (road.rid, last, lane.lane_id), (nxt_road.rid, 0, target)
                        )

    for junction in root.findall("junction"):
        for conn in junction.findall("connection"):
            incoming, connecting = conn.get("incomingRoad"), conn.get("connectingRoad")
            contact = conn.get("contactPoint", "start")
            if contact != "start":
                report.warn(
                    f"junction {junction.get('id')} connection {conn.get('id')}",
                    f"contactPoint {contact!r} unsupported",
                    dropped=True,
                )
                continue
            if incoming not in by_id or connecting not in by_id:
                report.warn(
                    f"junction {junction.get('id')} connection {conn.get('id')}",
                    "unknown road reference",
                    dropped=True,
                )
                continue
            last = len(by_id[incoming].sections) - 1
            for ll in conn.findall("laneLink"):
                try_link(
                    (incoming, last, int(ll.get("from"))),
                    (connecting, 0, int(ll.get("to"))),
                )

    # signals; same-name entries across roads merge their controlled lanes
    for road in roads:
        signals_elem = None
        for elem in root.findall("road"):
            if elem.get("id") == road.rid:
                signals_elem = elem.find("signals")
        if signals_elem is None:
            continue
        for sig in signals_elem.findall("signal"):
            s = float(sig.get("s", 0.0))
            sig_type = sig.get("type", "")
            name = sig.get("name") or f"sig_r{road.rid}_{sig.get('id')}"
            sec_idx = 0
            for i, sec in enumerate(road.sections):
                if sec.s <= s + 1e-9:
                    sec_idx = i
            sec = road.sections[sec_idx] if road.sections else None
            pose = _ref_pose(road, s)
            if sec is None or pose is None:
                report.warn(f"road {road.rid} signal {name}", "no geometry at s", dropped=True)
                continue
            lanes_here = sec.left + sec.right
            controlled = sorted(
                lane_lookup[(road.rid, sec_idx, l.lane_id)]
                for l in lanes_here
                if (road.rid, sec_idx, l.lane_id) in lane_lookup
            )
            if not controlled:
                report.warn(f"road {road.rid} signal {name}", "no driving lanes", dropped=True)
                continue
            ts = []
            for l in lanes_here:
                t_mid = _lane_center_t(road, sec, l, s)
                w = _eval_poly_list(l.widths, s - sec.s)
                ts += [t_mid - 0.5 * w, t_mid + 0.5 * w]
            x, y, hdg = pose
            nx, ny = -math.sin(hdg), math.cos(hdg)
            lo, hi = min(ts), max(ts)
            stop_line = [
                LanePoint(x + lo * nx, y + lo * ny, 0.0),
                LanePoint(x + hi * nx, y + hi * ny, 0.0),
            ]
            if sig_type in _SIGNAL_TYPES:
                phase = sig.get("initState", "red")
                if name in hd_map.signals:
                    merged = sorted(set(hd_map.signals[name].controlled_lane_ids) | set(controlled))
                    hd_map.signals[name].controlled_lane_ids = merged
                else:
                    hd_map.signals[name] = TrafficSignal(
                        id=name,
                        stop_line=stop_line,
                        controlled_lane_ids=controlled,
                        initial_state=SignalPhase(phase)
                        if phase in SignalPhase._value2member_map_
                        else SignalPhase.RED,
                    )
            elif sig_type in _SIGN_TYPES:
                if name in hd_map.signs:
                    merged = sorted(set(hd_map.signs[name].controlled_lane_ids) | set(controlled))
                    hd_map.signs[name].controlled_lane_ids = merged
                else:
                    hd_map.signs[name] = TrafficSign(
                        id=name,
                        kind=_SIGN_TYPES[sig_type],
                        stop_line=stop_line,
                        controlled_lane_ids=controlled,
                    )
            else:
                report.warn(
                    f"road {road.rid} signal {name}", f"type {sig_type!r} unsupported", dropped=True
                )

    return hd_map, report


# ---------- export ----------


def _merge_collinear(points: list[LanePoint]) -> list[LanePoint]:
    """Drop interior vertices where consecutive segments are collinear."""
    if len(points) <= 2:
        return list(points)
    out = [points[0]]
    for i in range(1, len(points) - 1):
        ax, ay = points[i].x - out[-1].x, points[i].y - out[-1].y
        bx, by = points[i + 1].x - points[i].x, points[i + 1].y - points[i].y
        na, nb = math.hypot(ax, ay), math.hypot(bx, by)
        if na > 0 and nb > 0:
            cross = (ax * by - ay * bx) / (na * nb)
            dot = (ax * bx + ay * by) / (na * nb)
            if abs(cross) < COLLINEAR_EPS and dot > 0:
                continue
        out.append(points[i])
    out.append(points[-1])
    return out


def export_opendrive(hd_map: HdMap) -> tuple[bytes, FormatReport]:
    violations = validate(hd_map)
    if violations:
        raise MapValidationError(violations)
    report = FormatReport()

    root = ET.Element(
        "OpenDRIVE",
    )
    ET.SubElement(
        root,
        "header",
        {
            "revMajor": "1",
            "revMinor": "4",
            "name": "avsim",
            "originLat": _fmt(hd_map.origin_lat),
            "originLon": _fmt(hd_map.origin_lon),
        },
    )

    lane_ids = sorted(hd_map.lanes)
    road_of = {lane_id: str(i + 1) for i, lane_id in enumerate(lane_ids)}

    if any(abs(p.z) > 1e-9 for lane in hd_map.lanes.values() for p in lane.centerline):
        report.warn("map", "elevation dropped (z forced to 0)")
    if hd_map.boundaries:
        report.warn(
            "map",
            f"{len(hd_map.boundaries)} boundary line(s) replaced by fixed "
            f"{DEFAULT_LANE_WIDTH} m lane width",
        )
    if hd_map.pedestrian_routes:
        report.warn(
            "map", f"{len(hd_map.pedestrian_routes)} pedestrian route(s) dropped", dropped=True
        )

    junctions: list[tuple[str, str, list[str]]] = []  # (junction id, from lane, successors)
    for lane_id in lane_ids:
        lane = hd_map.lanes[lane_id]
        if len(lane.successors) > 1:
            junctions.append((f"j{len(junctions) + 1}", lane_id, list(lane.successors)))
        if lane.turn_type != TurnType.STRAIGHT:
            report.warn(f"lane {lane_id}", f"turn_type {lane.turn_type.value} not representable")
    junction_of = {from_lane: jid for jid, from_lane, _ in junctions}

    # signals grouped per exported road; same name merges back on import
    signals_per_road: dict[str, list] = {}
    for collection, kind in ((hd_map.signals, "signal"), (hd_map.signs, "sign")):
        for elem in sorted(collection.values(), key=lambda e: e.id):
            for lane_ref in elem.controlled_lane_ids:
                signals_per_road.setdefault(lane_ref, []).append((kind, elem))

    for lane_id in lane_ids:
        lane = hd_map.lanes[lane_id]
        merged = _merge_collinear(lane.centerline)
        road = ET.SubElement(
            root,
            "road",
            {
                "name": lane_id,
                "id": road_of[lane_id],
                "junction": "-1",
                "length": "0",  # patched below
            },
        )
        link = ET.SubElement(road, "link")
        if lane_id in junction_of:
            ET.SubElement(
                link,
                "successor",
                {"elementType": "junction", "elementId": junction_of[lane_id]},
            )
        elif len(lane.successors) == 1:
            ET.SubElement(
                link,
                "successor",
                {
                    "elementType": "road",
                    "elementId": road_of[lane.successors[0]],
                    "contactPoint": "start",
                },
            )
        type_elem = ET.SubElement(road, "type", {"s": "0", "type": "town"})
        ET.SubElement(type_elem, "speed", {"max": _fmt(lane.speed_limit), "unit": "m/s"})
        plan_view = ET.SubElement(road, "planView")
        s_acc = 0.0
        for a, b in zip(merged, merged[1:]):
            seg_len = math.hypot(b.x - a.x, b.y - a.y)
            g = ET.SubElement(
                plan_view,
                "geometry",
                {
                    "s": _fmt(s_acc),
                    "x": _fmt(a.x),
                    "y": _fmt(a.y),
                    "hdg": _fmt(math.atan2(b.y - a.y, b.x - a.x)),
                    "length": _fmt(seg_len),
                },
            )
            ET.SubElement(g, "line")
            s_acc += seg_len
        road.set("length", _fmt(s_acc))

        lanes_elem = ET.SubElement(road, "lanes")
        ET.SubElement(
            lanes_elem,
            "laneOffset",
            {
                "s": "0",
                "a": _fmt(DEFAULT_LANE_WIDTH / 2),
                "b": "0",
                "c": "0",
                "d": "0",
            },
        )
        section = ET.SubElement(lanes_elem, "laneSection", {"s": "0"})
        center = ET.SubElement(section, "center")
        ET.SubElement(center, "lane", {"id": "0", "type": "none", "level": "false"})
        right = ET.SubElement(section, "right")
        drive = ET.SubElement(right, "lane", {"id": "-1", "type": "driving", "level": "false"})
        if len(lane.successors) == 1:
            lane_link = ET.SubElement(drive, "link")
            ET.SubElement(lane_link, "successor", {"id": "-1"})
        ET.SubElement(
            drive,
            "width",
            {"sOffset": "0", "a": _fmt(DEFAULT_LANE_WIDTH), "b": "0", "c": "0", "d": "0"},
        )

        if lane_id in signals_per_road:
            signals_elem = ET.SubElement(road, "signals")
            pl = lane_polyline(hd_map, lane_id)
            for kind, elem in signals_per_road[lane_id]:
                mid = [
                    0.5 * (elem.stop_line[0].x + elem.stop_line[1].x),
                    0.5 * (elem.stop_line[0].y + elem.stop_line[1].y),
                    0.0,
                ]
                s_pos, _ = pl.project(mid)
                attrs = {
                    "s": _fmt(s_pos),
                    "t": "0",
                    "id": elem.id,
                    "name": elem.id,
                    "orientation": "+",
                }
                if kind == "signal":
                    attrs["type"] = "trafficLight"
                    attrs["dynamic"] = "yes"
                    attrs["initState"] = elem.initial_state.value
                else:
                    attrs["type"] = "stop" if elem.kind == SignKind.STOP else "yield"
                    attrs["dynamic"] = "no"
                ET.SubElement(signals_elem, "signal", attrs)

    for jid, from_lane, succs in junctions:
        j = ET.SubElement(root, "junction", {"id": jid, "name": jid})
        for i, succ in enumerate(succs):
            conn = ET.SubElement(
                j,
                "connection",
                {
                    "id": str(i),
                    "incomingRoad": road_of[from_lane],
                    "connectingRoad": road_of[succ],
                    "contactPoint": "start",
                },
            )
            ET.SubElement(conn, "laneLink", {"from": "-1", "to": "-1"})

    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True), report
