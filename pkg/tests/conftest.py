import math

import pytest

from avsim.mapcore import (
    BoundaryLine,
    HdMap,
    Lane,
    LanePoint,
    PedestrianRoute,
    SignalPhase,
    TrafficSignal,
    link_lanes,
)


def straight_lane(lane_id, x0, y0, x1, y1, n=2, z=0.0, **kwargs):
    pts = [
        LanePoint(x0 + (x1 - x0) * i / (n - 1), y0 + (y1 - y0) * i / (n - 1), z)
        for i in range(n)
    ]
    return Lane(id=lane_id, centerline=pts, **kwargs)


@pytest.fixture
def chain_map():
    """Two straight lanes A -> B along +x, 100 m each."""
    m = HdMap(origin_lat=37.4, origin_lon=-122.1)
    m.add_lane(straight_lane("A", 0, 0, 100, 0, n=3))
    m.add_lane(straight_lane("B", 100, 0, 200, 0, n=3))
    link_lanes(m, "A", "B")
    return m


def arc_lane(lane_id, radius, angle, n=200):
    """Quarter-circle style arc starting at origin heading +x, turning left."""
    pts = [
        LanePoint(
            radius * math.sin(angle * i / (n - 1)),
            radius * (1.0 - math.cos(angle * i / (n - 1))),
            0.0,
        )
        for i in range(n)
    ]
    return Lane(id=lane_id, centerline=pts)


def signal_map(stop_x=80.0):
    """One 200 m lane with a signal whose stop line crosses it at stop_x."""
    m = HdMap(origin_lat=0.0, origin_lon=0.0)
    m.add_lane(straight_lane("L", 0, 0, 200, 0, n=5))
    m.signals["sig1"] = TrafficSignal(
        id="sig1",
        stop_line=[LanePoint(stop_x, -3.0), LanePoint(stop_x, 3.0)],
        controlled_lane_ids=["L"],
        initial_state=SignalPhase.RED,
    )
    return m


def ped_route_map():
    m = HdMap()
    m.add_lane(straight_lane("L", 0, 0, 50, 0))
    m.pedestrian_routes["walk"] = PedestrianRoute(
        id="walk", waypoints=[LanePoint(0, 5), LanePoint(10, 5)]
    )
    return m


def boundary(b_id, pts):
    return BoundaryLine(id=b_id, polyline=[LanePoint(*p) for p in pts])
