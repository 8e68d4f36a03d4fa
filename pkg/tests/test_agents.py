import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avsim.agents import (
    DEFAULT_WALK_SPEED,
    detect_collisions,
    follow_waypoints,
    idm_accel,
    make_light_runtime,
    obb_overlap,
    spawn_agent,
    step_ego,
    update_traffic_lights,
)
from avsim.errors import SceneError
from avsim.geom import quat_from_yaw, quat_yaw
from avsim.mapcore import HdMap, LanePoint, PedestrianRoute, project_to_lane
from avsim.state import (
    AgentKind,
    AgentState,
    ChassisCommand,
    EgoParams,
    IdmParams,
    Pose,
)
from avsim.world import load_scene, step

from conftest import ped_route_map, signal_map, straight_lane


def ego_state(speed=0.0, yaw=0.0):
    return AgentState(
        id=1,
        kind=AgentKind.EGO,
        pose=Pose((0.0, 0.0, 0.0), quat_from_yaw(yaw)),
        speed=speed,
    )


class TestEgoDynamics:
    def test_straight_line_closed_form(self):
        # drag 0: 1000 steps at constant v=10 must land within 1e-9 of 100 m
        s = ego_state(speed=10.0)
        params = EgoParams(drag_decel=0.0)
        cmd = ChassisCommand()
        for _ in range(1000):
            step_ego(s, cmd, params, 0.01)
        assert abs(s.pose.position[0] - 100.0) < 1e-9
        assert s.pose.position[1] == 0.0
        assert s.speed == 10.0

    def test_yaw_rate_closed_form(self):
        # spec example: delta=0.1, v=5, L=2.5 -> yaw rate 5*tan(0.1)/2.5
        params = EgoParams(wheelbase=2.5, max_steer=0.1, drag_decel=0.0)
        s = ego_state(speed=5.0)
        cmd = ChassisCommand(steering=1.0)  # delta = max_steer = 0.1 exactly
        step_ego(s, cmd, params, 0.01)
        expected = 5.0 * math.tan(0.1) / 2.5
        assert s.yaw_rate == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.2006693, abs=1e-6)

    def test_circle_radius_within_half_percent(self):
        params = EgoParams(wheelbase=2.8, max_steer=0.1, drag_decel=0.0)
        s = ego_state(speed=2.0)
        cmd = ChassisCommand(steering=1.0)
        delta = params.max_steer
        omega = 2.0 * math.tan(delta) / params.wheelbase
        n = round(2.0 * math.pi / (omega * 0.01))
        xs, ys = [], []
        for _ in range(n):
            step_ego(s, cmd, params, 0.01)
            xs.append(s.pose.position[0])
            ys.append(s.pose.position[1])
        cx, cy = np.mean(xs), np.mean(ys)
        radius = np.hypot(np.array(xs) - cx, np.array(ys) - cy).mean()
        expected = params.wheelbase / math.tan(delta)
        assert abs(radius - expected) / expected < 0.005

    def test_full_brake_at_standstill(self):
        s = ego_state(speed=0.0)
        cmd = ChassisCommand(brake=1.0)
        for _ in range(50):
            step_ego(s, cmd, EgoParams(), 0.01)
        assert s.speed == 0.0
        assert s.pose.position == (0.0, 0.0, 0.0)

    def test_reverse_moves_backwards(self):
        s = ego_state(speed=0.0)
        cmd = ChassisCommand(throttle=1.0, reverse=True)
        for _ in range(100):
            step_ego(s, cmd, EgoParams(drag_decel=0.0), 0.01)
        assert s.pose.position[0] < -0.1
        assert s.speed > 0.0

    def test_speed_never_negative(self):
        s = ego_state(speed=0.5)
        cmd = ChassisCommand(brake=1.0)
        for _ in range(200):
            step_ego(s, cmd, EgoParams(), 0.01)
            assert s.speed >= 0.0


class TestIdm:
    def test_free_road_values_exact(self):
        p = IdmParams()
        v0 = 15.0
        assert idm_accel(0.0, v0, math.inf, 0.0, p) == p.a_max
        assert abs(idm_accel(v0, v0, math.inf, 0.0, p)) < 1e-12
        expected = p.a_max * (1.0 - (0.5) ** p.delta)
        assert abs(idm_accel(v0 / 2, v0, math.inf, 0.0, p) - expected) < 1e-12
        assert expected == pytest.approx(0.9375 * p.a_max, abs=1e-15)

    def test_gap_term_brakes(self):
        p = IdmParams()
        a = idm_accel(10.0, 15.0, 5.0, 0.0, p)
        assert a < -p.b_comfort

    @settings(max_examples=20, deadline=None)
    @given(st.floats(5.0, 60.0), st.floats(5.0, 20.0))
    def test_no_rear_end_against_static_leader(self, gap0, v_target):
        # follower spawns at rest behind a parked vehicle; IDM must hold
        # bumper gap > 0 for the whole approach
        m = HdMap()
        m.add_lane(straight_lane("L", 0, 0, 300, 0, speed_limit=30.0))
        scene = {
            "spawns": [
                {"kind": "npc_vehicle", "position": [0, 0, 0], "config": {"target_speed": v_target}},
            ]
        }
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        follower = w.agents[1]
        leader_front = gap0 + follower.bbox_size[0]  # rear bumper at gap0 ahead
        parked = AgentState(
            id=99,
            kind=AgentKind.NPC_VEHICLE,
            pose=Pose((follower.pose.position[0] + leader_front + follower.bbox_size[0] / 2 + 2.25, 0.0, 0.0)),
        )
        w.agents[99] = parked
        w.prev_velocity[99] = (0.0, 0.0, 0.0)
        for _ in range(3000):
            step(w)
            assert follower.speed >= 0.0
            front = follower.pose.position[0] + follower.bbox_size[0] / 2
            rear_of_leader = parked.pose.position[0] - parked.bbox_size[0] / 2
            assert front < rear_of_leader


class TestNpcBehavior:
    def test_npc_accelerates_to_target_speed(self):
        m = HdMap()
        m.add_lane(straight_lane("L", 0, 0, 500, 0, speed_limit=30.0))
        scene = {"spawns": [{"kind": "npc_vehicle", "position": [0, 0, 0], "config": {"target_speed": 10.0}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        for _ in range(2000):
            step(w)
        assert w.agents[1].speed == pytest.approx(10.0, abs=0.2)

    def test_npc_stops_at_red_light(self):
        m = signal_map(stop_x=80.0)
        scene = {
            "spawns": [{"kind": "npc_vehicle", "position": [0, 0, 0], "config": {"target_speed": 12.0}}],
            "traffic_lights": [{"signal_id": "sig1", "cycle": [["red", 3600]]}],
        }
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        for _ in range(3000):
            step(w)
        npc = w.agents[1]
        assert npc.speed < 0.05
        front = npc.pose.position[0] + npc.bbox_size[0] / 2
        assert front <= 80.0

    def test_npc_proceeds_on_green(self):
        m = signal_map(stop_x=80.0)
        scene = {
            "spawns": [{"kind": "npc_vehicle", "position": [40, 0, 0], "config": {"target_speed": 12.0}}],
            "traffic_lights": [{"signal_id": "sig1", "cycle": [["red", 20], ["green", 3600]]}],
        }
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        for _ in range(2000):  # red phase: must stop
            step(w)
        assert w.agents[1].speed < 0.05
        crossed_tick = None
        for _ in range(3000):
            step(w)
            front = w.agents[1].pose.position[0] + w.agents[1].bbox_size[0] / 2
            if front > 80.0:
                crossed_tick = w.tick
                break
        assert crossed_tick is not None
        assert (crossed_tick * 0.01) - 20.0 <= 3.0  # proceeds within 3 s of green

    def test_npc_serves_stop_sign_then_proceeds(self):
        from avsim.mapcore import SignKind, TrafficSign

        m = HdMap()
        m.add_lane(straight_lane("L", 0, 0, 300, 0, speed_limit=20.0))
        m.signs["stop1"] = TrafficSign(
            id="stop1",
            kind=SignKind.STOP,
            stop_line=[LanePoint(100.0, -3.0), LanePoint(100.0, 3.0)],
            controlled_lane_ids=["L"],
        )
        scene = {"spawns": [{"kind": "npc_vehicle", "position": [50, 0, 0], "config": {"target_speed": 10.0}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        stopped_ticks = 0
        crossed = False
        for _ in range(6000):
            step(w)
            npc = w.agents.get(1)
            if npc is None:
                break  # despawned at the end of the lane after crossing
            front = npc.pose.position[0] + npc.bbox_size[0] / 2
            if not crossed and front <= 100.0 and npc.speed < 0.1:
                stopped_ticks += 1
            if front > 100.5:
                crossed = True
                break
        assert crossed
        assert stopped_ticks >= 200  # held the 2 s full stop (200 ticks)

    def test_npc_despawns_at_route_end(self):
        m = HdMap()
        m.add_lane(straight_lane("L", 0, 0, 30, 0, speed_limit=20.0))
        scene = {"spawns": [{"kind": "npc_vehicle", "position": [25, 0, 0], "config": {"target_speed": 10.0}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=1)
        for _ in range(2000):
            step(w)
            if 1 not in w.agents:
                break
        assert 1 not in w.agents
        assert any(e.kind == "despawn" for e in w.events)

    def test_route_choice_depends_only_on_stream(self):
        m = HdMap()
        m.add_lane(straight_lane("A", 0, 0, 40, 0, speed_limit=20.0))
        m.add_lane(straight_lane("Bl", 40, 0, 80, 15, speed_limit=20.0))
        m.add_lane(straight_lane("Br", 40, 0, 80, -15, speed_limit=20.0))
        from avsim.mapcore import link_lanes

        link_lanes(m, "A", "Bl")
        link_lanes(m, "A", "Br")
        scene = {"spawns": [{"kind": "npc_vehicle", "position": [0, 0, 0], "config": {"target_speed": 15.0}}]}

        def final_lane(seed):
            w = load_scene(m, json.dumps(scene).encode(), seed=seed)
            for _ in range(800):
                step(w)
                if 1 not in w.agents:
                    return "gone"
            return w.agents[1].controller.lane_id

        assert final_lane(5) == final_lane(5)
        results = {final_lane(s) for s in range(12)}
        assert {"Bl", "Br"} <= results  # both branches reachable across seeds


class TestPedestrians:
    def test_route_completion_time(self):
        m = ped_route_map()
        scene = {"spawns": [{"kind": "pedestrian", "position": [0, 5, 0], "config": {"route_id": "walk"}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=0)
        done_tick = None
        for _ in range(1000):
            step(w)
            if w.agents[1].controller.done:
                done_tick = w.tick
                break
        assert done_tick is not None
        assert abs(done_tick * 0.01 - 10.0 / DEFAULT_WALK_SPEED) <= 0.01 + 1e-9

    def test_stop_policy_halts(self):
        m = ped_route_map()
        scene = {"spawns": [{"kind": "pedestrian", "position": [0, 5, 0], "config": {"route_id": "walk", "policy": "stop"}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=0)
        for _ in range(900):
            step(w)
        assert w.agents[1].speed == 0.0
        assert w.agents[1].pose.position[0] == pytest.approx(10.0, abs=1e-9)

    def test_loop_policy_continuous(self):
        m = HdMap()
        m.add_lane(straight_lane("L", 0, 0, 50, 0))
        m.pedestrian_routes["sq"] = PedestrianRoute(
            id="sq",
            waypoints=[LanePoint(0, 5), LanePoint(4, 5), LanePoint(4, 9), LanePoint(0, 9)],
        )
        scene = {"spawns": [{"kind": "pedestrian", "position": [0, 5, 0], "config": {"route_id": "sq", "policy": "loop"}}]}
        w = load_scene(m, json.dumps(scene).encode(), seed=0)
        prev = np.array(w.agents[1].pose.position)
        for _ in range(3000):
            step(w)
            cur = np.array(w.agents[1].pose.position)
            assert np.linalg.norm(cur - prev) <= DEFAULT_WALK_SPEED * 0.01 + 1e-9
            prev = cur
        assert w.agents[1].speed > 0.0  # still walking


class TestTrafficLights:
    def test_cumulative_duration_lookup(self):
        light = make_light_runtime("s", "green", cycle=[("green", 10), ("yellow", 3), ("red", 12)])
        assert light.phase_at(0.0) == "green"
        assert light.phase_at(11.0) == "yellow"
        assert light.phase_at(13.5) == "red"
        assert light.phase_at(24.999) == "red"

    def test_initial_state_alignment(self):
        light = make_light_runtime("s", "red", cycle=[("green", 10), ("yellow", 3), ("red", 12)])
        assert light.phase_at(0.0) == "red"

    def test_override_freezes(self):
        light = make_light_runtime("s", "green")
        light.override = "red"
        lights = {"s": light}
        for t in (0.0, 5.0, 11.0, 100.0):
            update_traffic_lights(lights, t)
            assert light.phase == "red"
        light.override = None
        update_traffic_lights(lights, 0.0)
        assert light.phase == "green"

    def test_periodicity_exact(self):
        light = make_light_runtime("s", "green", cycle=[("green", 10.0), ("yellow", 3.0), ("red", 12.0)])
        total = 25.0
        for k in range(100):
            t = 0.25 * k
            assert light.phase_at(t) == light.phase_at(t + total)


class TestSpawn:
    def test_ego_gets_id_1(self):
        w = load_scene(HdMap(), b"{}", seed=0)
        aid = spawn_agent(w, AgentKind.EGO, Pose((0, 0, 0)))
        assert aid == 1

    def test_npc_snaps_to_lane(self, chain_map):
        w = load_scene(chain_map, b"{}", seed=0)
        aid = spawn_agent(w, AgentKind.NPC_VEHICLE, Pose((50.0, 2.0, 0.0)))
        lane_id, s, d = project_to_lane(chain_map, w.agents[aid].pose.position)
        assert lane_id == "A"
        assert abs(d) < 1e-9
        assert s == pytest.approx(50.0, abs=1e-9)

    def test_npc_far_from_lane_errors(self, chain_map):
        w = load_scene(chain_map, b"{}", seed=0)
        with pytest.raises(SceneError) as ei:
            spawn_agent(w, AgentKind.NPC_VEHICLE, Pose((50.0, 100.0, 0.0)))
        assert ei.value.code == "no_lane_near_spawn"

    def test_duplicate_ego_rejected(self):
        w = load_scene(HdMap(), b"{}", seed=0)
        spawn_agent(w, AgentKind.EGO, Pose((0, 0, 0)))
        with pytest.raises(SceneError) as ei:
            spawn_agent(w, AgentKind.EGO, Pose((5, 0, 0)))
        assert ei.value.code == "duplicate_ego"

    def test_follow_waypoints_is_continuous(self):
        w = load_scene(HdMap(), b"{}", seed=0)
        aid = spawn_agent(w, AgentKind.PEDESTRIAN, Pose((3.0, 4.0, 0.0)))
        follow_waypoints(w, aid, [(10.0, 4.0, 0.0)])
        ctrl = w.agents[aid].controller
        assert ctrl.waypoints[0] == (3.0, 4.0, 0.0)
        step(w)
        assert w.agents[aid].pose.position[0] == pytest.approx(3.0 + DEFAULT_WALK_SPEED * 0.01)


class TestCollisions:
    def test_far_apart_no_events(self):
        w = load_scene(HdMap(), b"{}", seed=0)
        spawn_agent(w, AgentKind.EGO, Pose((0, 0, 0)))
        spawn_agent(w, AgentKind.NPC_VEHICLE, Pose((10.0, 0.0, 0.0)), {"waypoints": [(10, 0, 0), (11, 0, 0)]})
        assert detect_collisions(w) == []

    def test_identical_poses_collide_once_while_persisting(self):
        w = load_scene(HdMap(), b"{}", seed=0)
        spawn_agent(w, AgentKind.EGO, Pose((0, 0, 0)))
        spawn_agent(w, AgentKind.NPC_VEHICLE, Pose((0.0, 0.0, 0.0)), {"waypoints": [(0, 0, 0), (0.1, 0, 0)]})
        events = detect_collisions(w)
        assert len(events) == 1 and (events[0].id_a, events[0].id_b) == (1, 2)
        for _ in range(10):
            step(w)
        assert sum(1 for e in w.events if e.kind == "collision") == 1  # deduplicated

    def test_corner_touch_counts(self):
        # unit boxes with faces exactly touching: closed-interval overlap
        a = ((0.0, 0.0, 0.5), (1.0, 1.0, 1.0), 0.0)
        b = ((1.0, 0.0, 0.5), (1.0, 1.0, 1.0), 0.0)
        assert obb_overlap(a, b)
        c = ((1.0 + 1e-6, 0.0, 0.5), (1.0, 1.0, 1.0), 0.0)
        assert not obb_overlap(a, c)

    def test_agent_static_collision(self):
        scene = {"statics": [{"semantic": "building", "shape": {"kind": "box", "center": [3, 0, 1], "size": [2, 2, 2]}}]}
        w = load_scene(HdMap(), json.dumps(scene).encode(), seed=0)
        spawn_agent(w, AgentKind.EGO, Pose((1.0, 0.0, 0.0)))
        events = detect_collisions(w)
        assert len(events) == 1
        assert events[0].id_b >= 1_000_000
