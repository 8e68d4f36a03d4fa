#!/usr/bin/env python3
"""Regenerate the golden map files under testdata/.

Two of the four files are assembled by hand (independent of the codecs) to
pin the import side; the other two come from the exporters to pin the
export side. Run from the repo root: python3 scripts/make_golden_maps.py
"""
from __future__ import annotations

import math
from pathlib import Path

from avsim.geodesy import local_to_geodetic
from avsim.mapcore import (
    BoundaryLine,
    HdMap,
    Lane,
    LanePoint,
    SignalPhase,
    SignKind,
    TrafficSign,
    TrafficSignal,
    link_lanes,
)
from avsim.mapio import export_map

ROOT = Path(__file__).resolve().parent.parent
TESTDATA = ROOT / "testdata"

LAT0, LON0 = 37.0, -122.0


def _ll(x, y):
    lat, lon = local_to_geodetic(x, y, LAT0, LON0)
    return repr(lat), repr(lon)


def handcrafted_lanelet2() -> str:
    """Two chained lanelets; right way of the first runs reversed; one
    unrelated highway way that importers must drop with a warning."""
    nodes = {}
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="handmade">']

    def node(x, y):
        key = (x, y)
        if key not in nodes:
            nid = str(len(nodes) + 1)
            nodes[key] = nid
            lat, lon = _ll(x, y)
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}"><tag k="ele" v="0.0"/></node>')
        return nodes[key]

    # boundaries of lanelet 1 (x 0..40) and lanelet 2 (x 40..80), width 4
    left1 = [node(x, 2.0) for x in (0.0, 20.0, 40.0)]
    right1_rev = [node(x, -2.0) for x in (40.0, 20.0, 0.0)]  # reversed on purpose
    left2 = [node(x, 2.0) for x in (40.0, 60.0, 80.0)]
    right2 = [node(x, -2.0) for x in (40.0, 60.0, 80.0)]
    stray = [node(0.0, 50.0), node(80.0, 50.0)]

    def way(wid, refs, tags=()):
        lines.append(f'  <way id="{wid}">')
        for r in refs:
            lines.append(f'    <nd ref="{r}"/>')
        for k, v in tags:
            lines.append(f'    <tag k="{k}" v="{v}"/>')
        lines.append("  </way>")

    way("101", left1, [("type", "line_thin"), ("subtype", "dashed")])
    way("102", right1_rev, [("type", "line_thin"), ("subtype", "solid")])
    way("103", left2, [("type", "line_thin"), ("subtype", "dashed")])
    way("104", right2, [("type", "curbstone"), ("subtype", "high")])
    way("105", stray, [("highway", "footway")])

    lines.append(
        '  <relation id="201">'
        '<member type="way" role="left" ref="101"/>'
        '<member type="way" role="right" ref="102"/>'
        '<tag k="type" v="lanelet"/><tag k="speed_limit" v="11.1"/>'
        "</relation>"
    )
    lines.append(
        '  <relation id="202">'
        '<member type="way" role="left" ref="103"/>'
        '<member type="way" role="right" ref="104"/>'
        '<tag k="type" v="lanelet"/><tag k="turn_type" v="right"/>'
        "</relation>"
    )
    lines.append("</osm>")
    return "\n".join(lines) + "\n"


def handcrafted_opendrive() -> str:
    """One road: 100 m line then a 90-degree arc (R=50), a spiral piece that
    must be dropped, two right driving lanes (one polynomial width), one
    left lane, a shoulder lane to drop, and a traffic light."""
    arc_len = 0.5 * math.pi * 50.0
    spiral_s = 100.0 + arc_len
    total = spiral_s + 20.0
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<OpenDRIVE>
  <header revMajor="1" revMinor="4" name="handmade" originLat="{LAT0!r}" originLon="{LON0!r}"/>
  <road name="main" id="1" junction="-1" length="{total!r}">
    <link/>
    <type s="0" type="town"><speed max="50" unit="km/h"/></type>
    <planView>
      <geometry s="0" x="0" y="0" hdg="0" length="100"><line/></geometry>
      <geometry s="100" x="100" y="0" hdg="0" length="{arc_len!r}"><arc curvature="0.02"/></geometry>
      <geometry s="{spiral_s!r}" x="150" y="50" hdg="{math.pi / 2!r}" length="20"><spiral curvStart="0" curvEnd="0.01"/></geometry>
    </planView>
    <lanes>
      <laneSection s="0">
        <left>
          <lane id="1" type="driving" level="false">
            <width sOffset="0" a="3.5" b="0" c="0" d="0"/>
          </lane>
        </left>
        <center><lane id="0" type="none" level="false"/></center>
        <right>
          <lane id="-1" type="driving" level="false">
            <width sOffset="0" a="3.5" b="0" c="0" d="0"/>
          </lane>
          <lane id="-2" type="driving" level="false">
            <width sOffset="0" a="3.0" b="0.01" c="0" d="0"/>
          </lane>
          <lane id="-3" type="shoulder" level="false">
            <width sOffset="0" a="1.0" b="0" c="0" d="0"/>
          </lane>
        </right>
      </laneSection>
    </lanes>
    <signals>
      <signal s="80" t="0" id="42" name="tl_main" dynamic="yes" orientation="+" type="trafficLight" initState="green"/>
    </signals>
  </road>
</OpenDRIVE>
"""


def exported_lanelet2() -> bytes:
    """Chain with a traffic light and a stop sign, via the exporter."""
    m = HdMap(origin_lat=LAT0, origin_lon=LON0)
    width = 3.5
    xs = [0.0, 50.0, 100.0, 150.0]
    for i in range(3):
        pts = [LanePoint(xs[i], 0.0), LanePoint(xs[i + 1], 0.0)]
        m.boundaries[f"L{i}"] = BoundaryLine(
            id=f"L{i}", polyline=[LanePoint(p.x, p.y + width / 2) for p in pts]
        )
        m.boundaries[f"R{i}"] = BoundaryLine(
            id=f"R{i}", polyline=[LanePoint(p.x, p.y - width / 2) for p in pts]
        )
        m.add_lane(
            Lane(
                id=f"lane{i}",
                centerline=pts,
                left_boundary_id=f"L{i}",
                right_boundary_id=f"R{i}",
                speed_limit=13.89,
            )
        )
    link_lanes(m, "lane0", "lane1")
    link_lanes(m, "lane1", "lane2")
    m.signals["tl0"] = TrafficSignal(
        id="tl0",
        stop_line=[LanePoint(45.0, -2.0), LanePoint(45.0, 2.0)],
        controlled_lane_ids=["lane0"],
        initial_state=SignalPhase.RED,
    )
    m.signs["stop0"] = TrafficSign(
        id="stop0",
        kind=SignKind.STOP,
        stop_line=[LanePoint(95.0, -2.0), LanePoint(95.0, 2.0)],
        controlled_lane_ids=["lane1"],
    )
    data, report = export_map(m, "lanelet2")
    assert not report.warnings, report.summary()
    return data


def exported_opendrive() -> bytes:
    """Y-branch (one lane with two successors) via the exporter."""
    m = HdMap(origin_lat=LAT0, origin_lon=LON0)
    m.add_lane(Lane(id="stem", centerline=[LanePoint(0, 0), LanePoint(50, 0), LanePoint(100, 0)]))
    m.add_lane(Lane(id="exit_l", centerline=[LanePoint(100, 0), LanePoint(140, 15)]))
    m.add_lane(Lane(id="exit_r", centerline=[LanePoint(100, 0), LanePoint(140, -15)]))
    link_lanes(m, "stem", "exit_l")
    link_lanes(m, "stem", "exit_r")
    data, _ = export_map(m, "opendrive")
    return data


def main() -> None:
    TESTDATA.mkdir(exist_ok=True)
    (TESTDATA / "golden_two_lanelets.osm").write_text(handcrafted_lanelet2())
    (TESTDATA / "golden_line_arc.xodr").write_text(handcrafted_opendrive())
    (TESTDATA / "golden_signals.osm").write_bytes(exported_lanelet2())
    (TESTDATA / "golden_junction.xodr").write_bytes(exported_opendrive())
    print(f"wrote 4 golden files to {TESTDATA}")


if __name__ == "__main__":
    main()
