"""Dynamic agents: ego bicycle dynamics, IDM lane-following NPCs,
waypoint pedestrians, traffic lights, spawning, collision detection.

All updates run inside the world step, sequential in ascending agent id;
nothing here touches system randomness — NPC routing draws come from the
world's named stream "npc.<id>.route".
"""
from __future__ import annotations

import math

import numpy as np

from .errors import SceneError, UnknownElementError
from .geom import quat_from_yaw, quat_yaw, wrap_angle
from .mapcore import HdMap, SignalPhase, lane_polyline, project_to_lane
from .state import (
    DEFAULT_BBOX,
    MAX_EMERGENCY_DECEL,
    AgentKind,
    AgentState,
    BoxShape,
    ChassisCommand,
    EgoController,
    EgoParams,
    IdmParams,
    MeshShape,
    NpcController,
    PlaneShape,
    Pose,
    TrafficLightRuntime,
    WaypointController,
    WorldState,
)

PATH_HORIZON = 60.0  # m of obstruction lookahead along the route
SIGN_SERVICE_TIME = 2.0  # s of full stop a stop sign demands
FULL_STOP_SPEED = 0.1  # m/s counts as stopped
SIGN_ARRIVAL_GAP = 3.0  # m from the line within which waiting counts
NPC_SPAWN_SNAP_RADIUS = 5.0  # m
DEFAULT_WALK_SPEED = 1.4  # m/s
CONTACT_EPS = 1e-9  # closed-interval overlap tolerance


# ---------- ego dynamics (pluggable providers) ----------


def _bicycle_step(state: AgentState, cmd: ChassisCommand, params: EgoParams, dt: float) -> None:
    """Kinematic bicycle, explicit Euler on the old state."""
    v = state.speed
    direction = -1.0 if cmd.reverse else 1.0
    accel = (
        cmd.throttle * params.max_accel
        - cmd.brake * params.max_brake_decel
        - params.drag_decel
    )
    delta = cmd.steering * params.max_steer
    yaw = quat_yaw(state.pose.orientation)
    yaw_rate = direction * (v / params.wheelbase) * math.tan(delta)
    x, y, z = state.pose.position
    x += direction * v * math.cos(yaw) * dt
    y += direction * v * math.sin(yaw) * dt
    new_yaw = yaw + yaw_rate * dt
    new_v = max(0.0, v + accel * dt)
    state.pose = Pose((x, y, z), quat_from_yaw(wrap_angle(new_yaw)))
    state.speed = new_v
    state.yaw_rate = yaw_rate
    state.velocity = (
        direction * new_v * math.cos(new_yaw),
        direction * new_v * math.sin(new_yaw),
        0.0,
    )


DYNAMICS_PROVIDERS = {"bicycle": _bicycle_step}


def register_dynamics(name: str, fn) -> None:
    DYNAMICS_PROVIDERS[name] = fn


def step_ego(state: AgentState, cmd: ChassisCommand, params: EgoParams, dt: float) -> AgentState:
    provider = state.controller.dynamics if isinstance(state.controller, EgoController) else "bicycle"
    DYNAMICS_PROVIDERS[provider](state, cmd, params, dt)
    return state


# ---------- IDM ----------


def idm_accel(v: float, v0: float, gap: float, leader_v: float, p: IdmParams) -> float:
    """Intelligent Driver Model acceleration; gap may be inf (free road)."""
    free = (v / v0) ** p.delta if v0 > 0 else float("inf")
    interact = 0.0
    if math.isfinite(gap):
        dv = v - leader_v
        s_star = max(
            0.0, p.s0 + v * p.t_headway + v * dv / (2.0 * math.sqrt(p.a_max * p.b_comfort))
        )
        interact = (s_star / max(gap, 0.01)) ** 2
    return p.a_max * (1.0 - free - interact)


# ---------- NPC lane following ----------


def _lane_length(hd_map: HdMap, lane_id: str) -> float:
    return lane_polyline(hd_map, lane_id).length


def _route_extend(world: WorldState, agent: AgentState, ctrl: NpcController, upto: int) -> None:
    """Ensure ctrl.route holds >= upto upcoming lanes (while successors exist)."""
    last = ctrl.route[-1] if ctrl.route else ctrl.lane_id
    while len(ctrl.route) < upto:
        succs = world.hd_map.lanes[last].successors
        if not succs:
            return
        if len(succs) == 1:
            choice = succs[0]
        else:
            idx = world.rng.choice_index(f"npc.{agent.id}.route", len(succs))
            choice = succs[idx]
        ctrl.route.append(choice)
        last = choice


def _path_preview(world: WorldState, agent: AgentState, ctrl: NpcController):
    """Lanes along the route within PATH_HORIZON of the agent.

    Returns [(lane_id, base)] where base + s_on_lane = distance ahead of the
    agent (current lane has base = -ctrl.s).
    """
    entries = [(ctrl.lane_id, -ctrl.s)]
    base = -ctrl.s + _lane_length(world.hd_map, ctrl.lane_id)
    hop = 0
    while base < PATH_HORIZON and hop < 8:
        hop += 1
        _route_extend(world, agent, ctrl, hop)
        if len(ctrl.route) < hop:
            break
        lane_id = ctrl.route[hop - 1]
        entries.append((lane_id, base))
        base += _lane_length(world.hd_map, lane_id)
    return entries


def _stop_line_s(hd_map: HdMap, elem_id: str, stop_line, lane_id: str) -> float:
    key = ("stopline", elem_id, lane_id)
    cached = hd_map._polylines.get(key)
    if cached is None:
        mid = [
            0.5 * (stop_line[0].x + stop_line[1].x),
            0.5 * (stop_line[0].y + stop_line[1].y),
            0.5 * (stop_line[0].z + stop_line[1].z),
        ]
        cached, _ = lane_polyline(hd_map, lane_id).project(mid)
        hd_map._polylines[key] = cached
    return cached


def _signals_by_lane(hd_map: HdMap):
    key = ("signals_by_lane",)
    cached = hd_map._polylines.get(key)
    if cached is None:
        cached = {}
        for sig in hd_map.signals.values():
            for lane_id in sig.controlled_lane_ids:
                cached.setdefault(lane_id, []).append(("signal", sig))
        for sign in hd_map.signs.values():
            for lane_id in sign.controlled_lane_ids:
                cached.setdefault(lane_id, []).append(("sign", sign))
        for entries in cached.values():
            entries.sort(key=lambda e: e[1].id)
        hd_map._polylines[key] = cached
    return cached


class VehicleIndex:
    """Per-tick snapshot of vehicle positions keyed by lane."""

    def __init__(self, world: WorldState):
        self.by_lane: dict[str, list] = {}
        for aid in sorted(world.agents):
            a = world.agents[aid]
            if a.kind == AgentKind.PEDESTRIAN:
                continue
            if isinstance(a.controller, NpcController):
                lane_id, s = a.controller.lane_id, a.controller.s
            elif world.hd_map.lanes:
                lane_id, s, d = project_to_lane(world.hd_map, a.pose.position)
                if abs(d) > 4.0:
                    continue  # off-road vehicle obstructs nothing
            else:
                continue
            self.by_lane.setdefault(lane_id, []).append(
                (s, aid, 0.5 * a.bbox_size[0], a.speed)
            )
        for entries in self.by_lane.values():
            entries.sort()


def step_npc(
    agent: AgentState, world: WorldState, vindex: VehicleIndex, dt: float
) -> str | None:
    """Advance one NPC; returns "despawn" when it leaves the lane graph."""
    ctrl: NpcController = agent.controller
    hd_map = world.hd_map
    pl = lane_polyline(hd_map, ctrl.lane_id)
    v = agent.speed
    half_len = 0.5 * agent.bbox_size[0]
    sim_time = world.sim_time

    path = _path_preview(world, agent, ctrl)

    # nearest obstruction: leading vehicle, red/yellow line, unserved stop sign
    gap = math.inf
    leader_v = 0.0

    def consider(dist_ahead: float, speed: float):
        nonlocal gap, leader_v
        if dist_ahead < gap:
            gap = dist_ahead
            leader_v = speed

    for lane_id, base in path:
        for s_other, aid, half_other, v_other in vindex.by_lane.get(lane_id, []):
            if aid == agent.id:
                continue
            ds = base + s_other
            if ds <= 0.0:
                continue
            consider(ds - half_len - half_other, v_other)

    sig_index = _signals_by_lane(hd_map)
    serving_candidate = None  # (gap_to_line, sign id)
    for lane_id, base in path:
        for kind, elem in sig_index.get(lane_id, []):
            line_s = _stop_line_s(hd_map, elem.id, elem.stop_line, lane_id)
            ds = base + line_s
            bumper_gap = ds - half_len
            if kind == "signal":
                if ds <= 0.0:
                    continue
                phase = world.lights[elem.id].phase if elem.id in world.lights else "red"
                if phase == "red":
                    consider(bumper_gap, 0.0)
                elif phase == "yellow":
                    can_stop = v * v / (2.0 * ctrl.idm.b_comfort) <= max(bumper_gap, 0.0)
                    if can_stop:
                        consider(bumper_gap, 0.0)
            else:  # stop / yield sign
                if ctrl.served_sign == elem.id:
                    if ds < -(half_len + 0.5) or ds > SIGN_ARRIVAL_GAP + 10.0:
                        ctrl.served_sign = None  # crossed, or looped back around
                    continue
                if ds <= 0.0:
                    continue
                if elem.kind.value == "yield":
                    continue  # yield only matters with crossing traffic; none modelled
                consider(bumper_gap, 0.0)
                if bumper_gap < SIGN_ARRIVAL_GAP:
                    if serving_candidate is None or bumper_gap < serving_candidate[0]:
                        serving_candidate = (bumper_gap, elem.id)

    # stop-sign service: a full stop held SIGN_SERVICE_TIME clears the sign
    if serving_candidate is not None and v < FULL_STOP_SPEED:
        if ctrl.stop_wait_since is None:
            ctrl.stop_wait_since = sim_time
        elif sim_time - ctrl.stop_wait_since >= SIGN_SERVICE_TIME:
            ctrl.served_sign = serving_candidate[1]
            ctrl.stop_wait_since = None
    elif v >= FULL_STOP_SPEED:
        ctrl.stop_wait_since = None

    lane = hd_map.lanes[ctrl.lane_id]
    v0 = min(ctrl.target_speed, lane.speed_limit)
    accel = idm_accel(v, v0, gap, leader_v, ctrl.idm)
    accel = min(ctrl.idm.a_max, max(-MAX_EMERGENCY_DECEL, accel))

    # pure pursuit toward the lookahead point on the route
    look = ctrl.lookahead
    target = None
    for lane_id, base in path:
        length = _lane_length(hd_map, lane_id)
        if base <= look <= base + length:
            target = lane_polyline(hd_map, lane_id).point_at(look - base)
            break
    if target is None:
        last_id, last_base = path[-1]
        target = lane_polyline(hd_map, last_id).point_at(
            _lane_length(hd_map, last_id)
        )
    x, y, z = agent.pose.position
    yaw = quat_yaw(agent.pose.orientation)
    alpha = wrap_angle(math.atan2(target[1] - y, target[0] - x) - yaw)
    kappa = 2.0 * math.sin(alpha) / look
    yaw_rate = v * kappa

    x += v * math.cos(yaw) * dt
    y += v * math.sin(yaw) * dt
    new_yaw = wrap_angle(yaw + yaw_rate * dt)
    new_v = max(0.0, v + accel * dt)

    s_new, _ = pl.project([x, y, z])
    z = pl.point_at(s_new)[2]
    agent.pose = Pose((x, y, z), quat_from_yaw(new_yaw))
    agent.speed = new_v
    agent.yaw_rate = yaw_rate
    agent.velocity = (new_v * math.cos(new_yaw), new_v * math.sin(new_yaw), 0.0)

    if s_new >= pl.length - 1e-6:
        _route_extend(world, agent, ctrl, 1)
        if not ctrl.route:
            return "despawn"
        ctrl.lane_id = ctrl.route.pop(0)
        next_pl = lane_polyline(hd_map, ctrl.lane_id)
        s_next, _ = next_pl.project([x, y, z])
        ctrl.s = s_next
    else:
        ctrl.s = s_new
    return None


# ---------- pedestrians / scripted waypoint followers ----------


def make_waypoint_controller(
    waypoints, speeds=None, default_speed: float = DEFAULT_WALK_SPEED, loop: bool = False
) -> WaypointController:
    pts = [tuple(float(c) for c in w) for w in waypoints]
    if len(pts) < 2:
        raise SceneError("waypoint route needs at least 2 points")
    seg_speeds = []
    for i in range(1, len(pts)):
        sp = default_speed if speeds is None or speeds[i] is None else float(speeds[i])
        seg_speeds.append(sp)
    if loop:
        first = default_speed if speeds is None or speeds[0] is None else float(speeds[0])
        seg_speeds.append(first)
    return WaypointController(waypoints=pts, seg_speeds=seg_speeds, loop=loop)


def _waypoint_polyline(ctrl: WaypointController):
    pts = list(ctrl.waypoints)
    if ctrl.loop:
        pts.append(ctrl.waypoints[0])
    from .geom import Polyline

    return Polyline(pts)


def step_waypoints(agent: AgentState, dt: float) -> None:
    ctrl: WaypointController = agent.controller
    pl = _waypoint_polyline(ctrl)
    if ctrl.done:
        agent.speed = 0.0
        agent.yaw_rate = 0.0
        agent.velocity = (0.0, 0.0, 0.0)
        return
    t_rem = dt
    s = ctrl.s
    cum = pl.cum
    speed_now = 0.0
    while t_rem > 1e-12:
        seg = min(int(np.searchsorted(cum, s, side="right")) - 1, len(ctrl.seg_speeds) - 1)
        seg = max(seg, 0)
        speed_now = ctrl.seg_speeds[seg]
        seg_end = cum[seg + 1]
        dist_left = seg_end - s
        t_need = dist_left / speed_now if speed_now > 0 else math.inf
        if t_need > t_rem:
            s += speed_now * t_rem
            t_rem = 0.0
        else:
            s = seg_end
            t_rem -= t_need
            if s >= pl.length - 1e-12:
                if ctrl.loop:
                    s = 0.0
                else:
                    ctrl.done = True
                    break
    ctrl.s = min(s, pl.length)
    pos = pl.point_at(ctrl.s)
    heading = pl.heading_at(min(ctrl.s, pl.length - 1e-9))
    speed = 0.0 if ctrl.done else speed_now
    old_yaw = quat_yaw(agent.pose.orientation)
    agent.pose = Pose(tuple(pos), quat_from_yaw(heading))
    agent.yaw_rate = wrap_angle(heading - old_yaw) / dt
    agent.speed = speed
    agent.velocity = (speed * math.cos(heading), speed * math.sin(heading), 0.0)


# ---------- traffic lights ----------


def update_traffic_lights(lights: dict[str, TrafficLightRuntime], sim_time: float) -> dict:
    for key in sorted(lights):
        light = lights[key]
        light.phase = light.phase_at(sim_time)
    return lights


def make_light_runtime(signal_id: str, initial_state: str, cycle=None, offset=0.0):
    cycle = [tuple(e) for e in (cycle or [("green", 10.0), ("yellow", 3.0), ("red", 12.0)])]
    if any(d <= 0 for _, d in cycle):
        raise SceneError(f"signal {signal_id}: cycle durations must be positive")
    # align the cycle so phase(t=0) matches the map's initial state
    start = 0.0
    for phase, dur in cycle:
        if phase == initial_state:
            break
        start += dur
    else:
        start = 0.0
    light = TrafficLightRuntime(signal_id=signal_id, cycle=cycle, offset=start + offset)
    light.phase = light.phase_at(0.0)
    return light


# ---------- spawning ----------


def spawn_agent(world: WorldState, kind: AgentKind, pose: Pose, config: dict | None = None) -> int:
    config = dict(config or {})
    pose.validate()
    bbox = tuple(config.get("bbox_size", DEFAULT_BBOX[kind]))
    speed = float(config.get("speed", 0.0))

    if kind == AgentKind.EGO:
        if not config.get("allow_multiple_ego", False) and any(
            a.kind == AgentKind.EGO for a in world.agents.values()
        ):
            raise SceneError("an ego already exists", code="duplicate_ego")
        params = EgoParams(
            **{
                k: float(config[k])
                for k in ("wheelbase", "max_accel", "max_brake_decel", "max_steer", "drag_decel")
                if k in config
            }
        )
        controller = EgoController(params=params, dynamics=config.get("dynamics", "bicycle"))
    elif kind == AgentKind.NPC_VEHICLE:
        if config.get("waypoints"):
            controller = make_waypoint_controller(
                config["waypoints"],
                speeds=config.get("waypoint_speeds"),
                default_speed=float(config.get("target_speed", 10.0)),
                loop=bool(config.get("loop", False)),
            )
        else:
            if not world.hd_map.lanes:
                raise SceneError("no lane near NPC spawn", code="no_lane_near_spawn")
            lane_id, s, d = project_to_lane(world.hd_map, pose.position)
            if abs(d) > NPC_SPAWN_SNAP_RADIUS:
                raise SceneError(
                    f"no lane within {NPC_SPAWN_SNAP_RADIUS} m of NPC spawn",
                    code="no_lane_near_spawn",
                )
            pl = lane_polyline(world.hd_map, lane_id)
            point = pl.point_at(s)
            pose = Pose(tuple(point), quat_from_yaw(pl.heading_at(s)))
            lane = world.hd_map.lanes[lane_id]
            idm_overrides = {
                k: float(config[k])
                for k in ("a_max", "b_comfort", "s0", "t_headway", "delta")
                if k in config
            }
            controller = NpcController(
                lane_id=lane_id,
                s=s,
                target_speed=float(config.get("target_speed", lane.speed_limit)),
                idm=IdmParams(**idm_overrides),
                lookahead=float(config.get("lookahead", 6.0)),
            )
    elif kind == AgentKind.PEDESTRIAN:
        route_id = config.get("route_id")
        if route_id is not None:
            if route_id not in world.hd_map.pedestrian_routes:
                raise UnknownElementError(f"unknown pedestrian route {route_id!r}")
            route = world.hd_map.pedestrian_routes[route_id]
            waypoints = [(p.x, p.y, p.z) for p in route.waypoints]
        else:
            waypoints = config.get("waypoints")
        if waypoints:
            controller = make_waypoint_controller(
                waypoints,
                speeds=config.get("waypoint_speeds"),
                default_speed=float(config.get("walk_speed", DEFAULT_WALK_SPEED)),
                loop=config.get("policy", "stop") == "loop",
            )
            first = controller.waypoints[0]
            second = controller.waypoints[1]
            heading = math.atan2(second[1] - first[1], second[0] - first[0])
            pose = Pose(first, quat_from_yaw(heading))
        else:
            controller = None
    else:
        raise SceneError(f"unknown agent kind {kind!r}")

    agent_id = world.next_agent_id
    world.next_agent_id += 1
    yaw = pose.yaw
    agent = AgentState(
        id=agent_id,
        kind=kind,
        pose=pose,
        speed=speed,
        velocity=(speed * math.cos(yaw), speed * math.sin(yaw), 0.0),
        bbox_size=bbox,
        controller=controller,
    )
    world.agents[agent_id] = agent
    world.prev_velocity[agent_id] = agent.velocity
    world.emit("spawn", agent_id=agent_id, agent_kind=kind.value)
    return agent_id


def remove_agent(world: WorldState, agent_id: int) -> None:
    if agent_id not in world.agents:
        raise UnknownElementError(f"unknown agent {agent_id}")
    del world.agents[agent_id]
    world.prev_velocity.pop(agent_id, None)
    world.active_contacts = {p for p in world.active_contacts if agent_id not in p}
    world.emit("despawn", agent_id=agent_id, reason="removed")


def follow_waypoints(world: WorldState, agent_id: int, waypoints, speeds=None, loop=False) -> None:
    if agent_id not in world.agents:
        raise UnknownElementError(f"unknown agent {agent_id}")
    agent = world.agents[agent_id]
    default = DEFAULT_WALK_SPEED if agent.kind == AgentKind.PEDESTRIAN else 10.0
    # prepend the current position so motion stays continuous
    pts = [tuple(agent.pose.position)] + [tuple(float(c) for c in w) for w in waypoints]
    padded = None if speeds is None else [None] + list(speeds)
    agent.controller = make_waypoint_controller(pts, padded, default_speed=default, loop=loop)


# ---------- collisions (yaw-aligned OBB overlap) ----------


def _obb_of_agent(agent: AgentState):
    c = agent.bbox_center()
    return (float(c[0]), float(c[1]), float(c[2])), agent.bbox_size, agent.pose.yaw


def _obb_of_static(obj):
    shape = obj.shape
    if isinstance(shape, BoxShape):
        return shape.center, shape.size, shape.yaw
    if isinstance(shape, MeshShape):
        vs = np.array([v for tri in shape.triangles for v in tri], dtype=np.float64)
        lo, hi = vs.min(axis=0), vs.max(axis=0)
        center = 0.5 * (lo + hi)
        return tuple(center), tuple(np.maximum(hi - lo, 1e-9)), 0.0
    return None  # planes (ground) never collide


def obb_overlap(a, b) -> bool:
    """Closed-interval overlap of two yaw-aligned boxes (touch counts)."""
    (ca, sa, ya), (cb, sb, yb) = a, b
    if ca[2] + 0.5 * sa[2] < cb[2] - 0.5 * sb[2] - CONTACT_EPS:
        return False
    if cb[2] + 0.5 * sb[2] < ca[2] - 0.5 * sa[2] - CONTACT_EPS:
        return False
    dx, dy = cb[0] - ca[0], cb[1] - ca[1]
    axes = []
    for yaw in (ya, yb):
        c, s = math.cos(yaw), math.sin(yaw)
        axes += [(c, s), (-s, c)]
    ua = (math.cos(ya), math.sin(ya))
    va = (-math.sin(ya), math.cos(ya))
    ub = (math.cos(yb), math.sin(yb))
    vb = (-math.sin(yb), math.cos(yb))
    for ax, ay_ in axes:
        ra = 0.5 * sa[0] * abs(ax * ua[0] + ay_ * ua[1]) + 0.5 * sa[1] * abs(
            ax * va[0] + ay_ * va[1]
        )
        rb = 0.5 * sb[0] * abs(ax * ub[0] + ay_ * ub[1]) + 0.5 * sb[1] * abs(
            ax * vb[0] + ay_ * vb[1]
        )
        if abs(ax * dx + ay_ * dy) > ra + rb + CONTACT_EPS:
            return False
    return True


def current_overlaps(world: WorldState) -> list[tuple[int, int]]:
    """Sorted id pairs of currently overlapping bodies (agents and statics)."""
    ids = sorted(world.agents)
    boxes = {aid: _obb_of_agent(world.agents[aid]) for aid in ids}
    static_boxes = []
    for obj in world.statics:
        obb = _obb_of_static(obj)
        if obb is not None:
            static_boxes.append((obj.id, obb))
    pairs = []
    for i, aid in enumerate(ids):
        box_a = boxes[aid]
        diag_a = 0.5 * math.hypot(box_a[1][0], box_a[1][1])
        for bid in ids[i + 1 :]:
            box_b = boxes[bid]
            if _prefilter(box_a, box_b, diag_a) and obb_overlap(box_a, box_b):
                pairs.append((aid, bid))
        for sid, box_b in static_boxes:
            if _prefilter(box_a, box_b, diag_a) and obb_overlap(box_a, box_b):
                pairs.append((aid, sid))
    return sorted(pairs)


def _prefilter(a, b, diag_a) -> bool:
    diag_b = 0.5 * math.hypot(b[1][0], b[1][1])
    dx, dy = b[0][0] - a[0][0], b[0][1] - a[0][1]
    return dx * dx + dy * dy <= (diag_a + diag_b + 1e-6) ** 2


def detect_collisions(world: WorldState):
    """Pure query: pairs overlapping right now, deterministic order."""
    from .state import CollisionEvent

    return [CollisionEvent(world.tick, a, b) for a, b in current_overlaps(world)]
