"""Lanelet2 (OSM XML) import/export subset.

Supported: nodes, ways, relations tagged type=lanelet with left/right way
members, speed_limit/turn_type/name tags, and regulatory_element relations
of subtype traffic_light/stop_sign/yield_sign with a 2-node ref_line way.
Everything else is dropped with a warning.

The geodetic anchor is the <bounds> center when present, else the first
node; the exporter always writes a degenerate <bounds> at the map origin so
re-import recovers the identical local frame.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .errors import MapFormatError, MapValidationError
from .geodesy import geodetic_to_local, local_to_geodetic
from .geom import resample_to_count
from .mapcore import (
    DEFAULT_SPEED_LIMIT,
    BoundaryLine,
    BoundaryStyle,
    HdMap,
    Lane,
    LanePoint,
    PedestrianRoute,
    SignalPhase,
    SignKind,
    TrafficSign,
    TrafficSignal,
    TurnType,
    link_lanes,
    validate,
)
from .mapio import FormatReport

ENDPOINT_TOL = 1e-6
DEFAULT_LANE_WIDTH = 3.5

_STYLE_TO_TAGS = {
    BoundaryStyle.SOLID: ("line_thin", "solid"),
    BoundaryStyle.DASHED: ("line_thin", "dashed"),
    BoundaryStyle.DOUBLE: ("line_thin", "double"),
    BoundaryStyle.CURB: ("curbstone", "high"),
}


def _fmt(v: float) -> str:
    return repr(float(v))


def _tags(elem) -> dict[str, str]:
    return {t.get("k"): t.get("v") for t in elem.findall("tag")}


def _parse_xml(data: bytes):
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise MapFormatError(f"XML parse failure: {exc}") from None


def _close(a: LanePoint, b: LanePoint) -> bool:
    return (
        abs(a.x - b.x) <= ENDPOINT_TOL
        and abs(a.y - b.y) <= ENDPOINT_TOL
        and abs(a.z - b.z) <= ENDPOINT_TOL
    )


def import_lanelet2(data: bytes) -> tuple[HdMap, FormatReport]:
    root = _parse_xml(data)
    if root.tag != "osm":
        raise MapFormatError(f"expected <osm> root, got <{root.tag}>")
    report = FormatReport()

    raw_nodes: dict[str, tuple[float, float, float]] = {}
    node_order: list[str] = []
    for node in root.findall("node"):
        nid = node.get("id")
        lat, lon = float(node.get("lat")), float(node.get("lon"))
        ele = float(_tags(node).get("ele", 0.0))
        raw_nodes[nid] = (lat, lon, ele)
        node_order.append(nid)

    bounds = root.find("bounds")
    if bounds is not None:
        lat0 = 0.5 * (float(bounds.get("minlat")) + float(bounds.get("maxlat")))
        lon0 = 0.5 * (float(bounds.get("minlon")) + float(bounds.get("maxlon")))
    elif node_order:
        lat0, lon0, _ = raw_nodes[node_order[0]]
    else:
        lat0 = lon0 = 0.0

    points: dict[str, LanePoint] = {}
    for nid, (lat, lon, ele) in raw_nodes.items():
        x, y = geodetic_to_local(lat, lon, lat0, lon0)
        points[nid] = LanePoint(x, y, ele)

    ways: dict[str, tuple[list[str], dict[str, str]]] = {}
    for way in root.findall("way"):
        refs = [nd.get("ref") for nd in way.findall("nd")]
        ways[way.get("id")] = (refs, _tags(way))

    lanelets = []
    reg_elems: dict[str, tuple[dict[str, str], str | None]] = {}  # rel id -> (tags, ref_line way)
    for rel in root.findall("relation"):
        tags = _tags(rel)
        rel_type = tags.get("type")
        if rel_type == "lanelet":
            lanelets.append((rel.get("id"), rel, tags))
        elif rel_type == "regulatory_element":
            ref_line = None
            for member in rel.findall("member"):
                if member.get("role") == "ref_line" and member.get("type") == "way":
                    ref_line = member.get("ref")
            reg_elems[rel.get("id")] = (tags, ref_line)
        else:
            report.warn(f"relation {rel.get('id')}", f"unsupported type {rel_type!r}", dropped=True)

    if not lanelets:
        raise MapFormatError("no lanelet relations found")

    hd_map = HdMap(origin_lat=lat0, origin_lon=lon0)

    def way_points(way_id: str) -> list[LanePoint]:
        refs, _ = ways[way_id]
        return [points[r] for r in refs]

    def boundary_from_way(way_id: str) -> str:
        refs, tags = ways[way_id]
        bid = tags.get("name", way_id)
        if bid not in hd_map.boundaries:
            style = BoundaryStyle.SOLID
            if tags.get("type") == "curbstone":
                style = BoundaryStyle.CURB
            elif tags.get("subtype") in ("dashed", "double", "solid"):
                style = BoundaryStyle(tags["subtype"])
            hd_map.boundaries[bid] = BoundaryLine(id=bid, polyline=way_points(way_id), style=style)
        return bid

    used_ways: set[str] = set()
    lane_ends: dict[str, tuple] = {}  # lane id -> (left refs, right refs)
    lane_regs: dict[str, list[str]] = {}
    for rel_id, rel, tags in lanelets:
        left = right = None
        regs = []
        for member in rel.findall("member"):
            role, ref = member.get("role"), member.get("ref")
            if role == "left" and member.get("type") == "way":
                left = ref
            elif role == "right" and member.get("type") == "way":
                right = ref
            elif role == "regulatory_element":
                regs.append(ref)
        if left is None or right is None or left not in ways or right not in ways:
            report.warn(f"lanelet {rel_id}", "missing left/right way member", dropped=True)
            continue
        left_pts, right_pts = way_points(left), way_points(right)
        if len(left_pts) < 2 or len(right_pts) < 2:
            report.warn(f"lanelet {rel_id}", "degenerate boundary way", dropped=True)
            continue
        # normalize boundary orientation: ways may run against travel direction
        aligned = math.dist(
            (left_pts[0].x, left_pts[0].y), (right_pts[0].x, right_pts[0].y)
        ) + math.dist((left_pts[-1].x, left_pts[-1].y), (right_pts[-1].x, right_pts[-1].y))
        crossed = math.dist(
            (left_pts[0].x, left_pts[0].y), (right_pts[-1].x, right_pts[-1].y)
        ) + math.dist((left_pts[-1].x, left_pts[-1].y), (right_pts[0].x, right_pts[0].y))
        right_refs = list(ways[right][0])
        if crossed < aligned:
            right_pts = list(reversed(right_pts))
            right_refs.reverse()
        n = max(len(left_pts), len(right_pts))
        left_arr = resample_to_count([p.as_array() for p in left_pts], n)
        right_arr = resample_to_count([p.as_array() for p in right_pts], n)
        mid = 0.5 * (left_arr + right_arr)
        centerline = [LanePoint(*p) for p in mid]
        centerline = [p for i, p in enumerate(centerline) if i == 0 or p != centerline[i - 1]]
        if len(centerline) < 2:
            report.warn(f"lanelet {rel_id}", "degenerate centerline", dropped=True)
            continue
        speed = tags.get("speed_limit")
        turn = tags.get("turn_type", "straight")
        lane_id = tags.get("name", rel_id)
        lane = Lane(
            id=lane_id,
            centerline=centerline,
            left_boundary_id=boundary_from_way(left),
            right_boundary_id=boundary_from_way(right),
            speed_limit=float(speed) if speed is not None else DEFAULT_SPEED_LIMIT,
            turn_type=TurnType(turn) if turn in TurnType._value2member_map_ else TurnType.STRAIGHT,
        )
        if lane_id in hd_map.lanes:
            raise MapFormatError(f"duplicate lanelet name/id {lane_id!r}")
        hd_map.add_lane(lane)
        used_ways.update((left, right))
        lane_ends[lane_id] = (ways[left][0], right_refs, left_pts, right_pts)
        lane_regs[lane_id] = regs

    # successor detection by shared endpoints (node ids, else coordinates)
    ids = sorted(hd_map.lanes)
    for a in ids:
        la_refs, ra_refs, la_pts, ra_pts = lane_ends[a]
        for b in ids:
            if a == b:
                continue
            lb_refs, rb_refs, lb_pts, rb_pts = lane_ends[b]
            by_ref = la_refs[-1] == lb_refs[0] and ra_refs[-1] == rb_refs[0]
            by_coord = _close(la_pts[-1], lb_pts[0]) and _close(ra_pts[-1], rb_pts[0])
            if by_ref or by_coord:
                link_lanes(hd_map, a, b)

    # regulatory elements -> signals/signs
    for reg_id, (tags, ref_line) in reg_elems.items():
        controlled = sorted(l for l, regs in lane_regs.items() if reg_id in regs)
        subtype = tags.get("subtype")
        name = tags.get("name", reg_id)
        if ref_line is None or ref_line not in ways:
            report.warn(f"regulatory_element {reg_id}", "missing ref_line way", dropped=True)
            continue
        if not controlled:
            report.warn(f"regulatory_element {reg_id}", "no lanelet references it", dropped=True)
            continue
        stop_line = way_points(ref_line)[:2]
        used_ways.add(ref_line)
        if subtype == "traffic_light":
            phase = tags.get("init_state", "red")
            hd_map.signals[name] = TrafficSignal(
                id=name,
                stop_line=stop_line,
                controlled_lane_ids=controlled,
                initial_state=SignalPhase(phase)
                if phase in SignalPhase._value2member_map_
                else SignalPhase.RED,
            )
        elif subtype in ("stop_sign", "yield_sign"):
            hd_map.signs[name] = TrafficSign(
                id=name,
                kind=SignKind.STOP if subtype == "stop_sign" else SignKind.YIELD,
                stop_line=stop_line,
                controlled_lane_ids=controlled,
            )
        else:
            report.warn(f"regulatory_element {reg_id}", f"unsupported subtype {subtype!r}", dropped=True)

    for way_id, (refs, tags) in ways.items():
        if way_id in used_ways:
            continue
        if tags.get("type") == "pedestrian_route" and len(refs) >= 2:
            name = tags.get("name", way_id)
            hd_map.pedestrian_routes[name] = PedestrianRoute(id=name, waypoints=way_points(way_id))
        else:
            report.warn(f"way {way_id}", "not referenced by any lanelet", dropped=True)

    return hd_map, report


def _offset_polyline(centerline: list[LanePoint], offset: float) -> list[LanePoint]:
    """Offset laterally in XY; positive offset is left of travel."""
    import numpy as np

    pts = np.array([[p.x, p.y, p.z] for p in centerline])
    seg = np.diff(pts[:, :2], axis=0)
    seg = seg / np.linalg.norm(seg, axis=1, keepdims=True)
    normals = np.empty_like(pts[:, :2])
    normals[0] = (-seg[0, 1], seg[0, 0])
    normals[-1] = (-seg[-1, 1], seg[-1, 0])
    for i in range(1, len(pts) - 1):
        avg = seg[i - 1] + seg[i]
        n = np.linalg.norm(avg)
        avg = seg[i] if n < 1e-12 else avg / n
        normals[i] = (-avg[1], avg[0])
    out = pts.copy()
    out[:, :2] += offset * normals
    return [LanePoint(*p) for p in out]


def export_lanelet2(hd_map: HdMap) -> tuple[bytes, FormatReport]:
    violations = validate(hd_map)
    if violations:
        raise MapValidationError(violations)
    report = FormatReport()

    root = ET.Element("osm", {"version": "0.6", "generator": "avsim"})
    o = _fmt(hd_map.origin_lat), _fmt(hd_map.origin_lon)
    ET.SubElement(
        root, "bounds", {"minlat": o[0], "minlon": o[1], "maxlat": o[0], "maxlon": o[1]}
    )

    next_id = [0]

    def new_id() -> str:
        next_id[0] += 1
        return str(next_id[0])

    node_ids: dict[tuple, str] = {}

    def node_for(p: LanePoint) -> str:
        key = (p.x, p.y, p.z)
        nid = node_ids.get(key)
        if nid is None:
            nid = new_id()
            node_ids[key] = nid
            lat, lon = local_to_geodetic(p.x, p.y, hd_map.origin_lat, hd_map.origin_lon)
            node = ET.SubElement(root, "node", {"id": nid, "lat": _fmt(lat), "lon": _fmt(lon)})
            ET.SubElement(node, "tag", {"k": "ele", "v": _fmt(p.z)})
        return nid

    way_ids: dict[str, str] = {}

    def way_for(points: list[LanePoint], name: str, style: BoundaryStyle | None) -> str:
        if name in way_ids:
            return way_ids[name]
        wid = new_id()
        way_ids[name] = wid
        way = ET.SubElement(root, "way", {"id": wid})
        for p in points:
            ET.SubElement(way, "nd", {"ref": node_for(p)})
        if style is not None:
            way_type, subtype = _STYLE_TO_TAGS[style]
            ET.SubElement(way, "tag", {"k": "type", "v": way_type})
            ET.SubElement(way, "tag", {"k": "subtype", "v": subtype})
        ET.SubElement(way, "tag", {"k": "name", "v": name})
        return wid

    # regulatory elements first so lanelets can reference them
    reg_rel_ids: dict[str, str] = {}
    controlled_by: dict[str, list[tuple[str, str]]] = {}
    for sig in sorted(hd_map.signals.values(), key=lambda s: s.id):
        way_id = way_for(sig.stop_line, f"stopline:{sig.id}", None)
        rel_id = new_id()
        rel = ET.SubElement(root, "relation", {"id": rel_id})
        ET.SubElement(rel, "member", {"type": "way", "role": "ref_line", "ref": way_id})
        ET.SubElement(rel, "tag", {"k": "type", "v": "regulatory_element"})
        ET.SubElement(rel, "tag", {"k": "subtype", "v": "traffic_light"})
        ET.SubElement(rel, "tag", {"k": "name", "v": sig.id})
        ET.SubElement(rel, "tag", {"k": "init_state", "v": sig.initial_state.value})
        reg_rel_ids[sig.id] = rel_id
        for lane_id in sig.controlled_lane_ids:
            controlled_by.setdefault(lane_id, []).append((sig.id, rel_id))
    for sign in sorted(hd_map.signs.values(), key=lambda s: s.id):
        way_id = way_for(sign.stop_line, f"stopline:{sign.id}", None)
        rel_id = new_id()
        rel = ET.SubElement(root, "relation", {"id": rel_id})
        ET.SubElement(rel, "member", {"type": "way", "role": "ref_line", "ref": way_id})
        ET.SubElement(rel, "tag", {"k": "type", "v": "regulatory_element"})
        subtype = "stop_sign" if sign.kind == SignKind.STOP else "yield_sign"
        ET.SubElement(rel, "tag", {"k": "subtype", "v": subtype})
        ET.SubElement(rel, "tag", {"k": "name", "v": sign.id})
        reg_rel_ids[sign.id] = rel_id
        for lane_id in sign.controlled_lane_ids:
            controlled_by.setdefault(lane_id, []).append((sign.id, rel_id))

    for lane in sorted(hd_map.lanes.values(), key=lambda x: x.id):
        if lane.left_boundary_id is not None:
            left_b = hd_map.boundaries[lane.left_boundary_id]
            left_pts, left_name, left_style = left_b.polyline, left_b.id, left_b.style
        else:
            report.warn(f"lane {lane.id}", "left boundary synthesized at +1.75 m")
            left_pts = _offset_polyline(lane.centerline, DEFAULT_LANE_WIDTH / 2)
            left_name, left_style = f"synth:left:{lane.id}", BoundaryStyle.SOLID
        if lane.right_boundary_id is not None:
            right_b = hd_map.boundaries[lane.right_boundary_id]
            right_pts, right_name, right_style = right_b.polyline, right_b.id, right_b.style
        else:
            report.warn(f"lane {lane.id}", "right boundary synthesized at -1.75 m")
            right_pts = _offset_polyline(lane.centerline, -DEFAULT_LANE_WIDTH / 2)
            right_name, right_style = f"synth:right:{lane.id}", BoundaryStyle.SOLID
        rel = ET.SubElement(root, "relation", {"id": new_id()})
        ET.SubElement(
            rel, "member", {"type": "way", "role": "left", "ref": way_for(left_pts, left_name, left_style)}
        )
        ET.SubElement(
            rel,
            "member",
            {"type": "way", "role": "right", "ref": way_for(right_pts, right_name, right_style)},
        )
        for _, reg_rel in sorted(controlled_by.get(lane.id, [])):
            ET.SubElement(
                rel, "member", {"type": "relation", "role": "regulatory_element", "ref": reg_rel}
            )
        ET.SubElement(rel, "tag", {"k": "type", "v": "lanelet"})
        ET.SubElement(rel, "tag", {"k": "name", "v": lane.id})
        ET.SubElement(rel, "tag", {"k": "speed_limit", "v": _fmt(lane.speed_limit)})
        ET.SubElement(rel, "tag", {"k": "turn_type", "v": lane.turn_type.value})

    for route in sorted(hd_map.pedestrian_routes.values(), key=lambda r: r.id):
        way = ET.SubElement(root, "way", {"id": new_id()})
        for p in route.waypoints:
            ET.SubElement(way, "nd", {"ref": node_for(p)})
        ET.SubElement(way, "tag", {"k": "type", "v": "pedestrian_route"})
        ET.SubElement(way, "tag", {"k": "name", "v": route.id})

    # successor links survive re-import only through coincident boundary
    # endpoints; warn when a linked pair is not geometrically contiguous
    for lane in hd_map.lanes.values():
        for succ in lane.successors:
            nxt = hd_map.lanes[succ]
            if not _close(lane.centerline[-1], nxt.centerline[0]):
                report.warn(
                    f"lane {lane.id}",
                    f"successor {succ!r} not contiguous; link not representable",
                    dropped=True,
                )

    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True), report
