"""World-state containers and their exact dict (de)serialization.

Everything the simulation evolves lives here; geometry math stays in geom,
stepping logic in world/agents. All float fields survive JSON round-trips
exactly (Python float repr), which is what snapshot bit-stability rests on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import IDENTITY_QUAT, Quat, Vec3, quat_norm_error, quat_to_matrix, quat_yaw
from .mapcore import HdMap, map_from_dict, map_to_dict
from .rng import NamedStreams

STATIC_ID_BASE = 1_000_000
MAX_EMERGENCY_DECEL = 10.0  # m/s^2, NPC braking clamp

GROUND_SEMANTIC = "road"


class AgentKind(str, enum.Enum):
    EGO = "ego"
    NPC_VEHICLE = "npc_vehicle"
    PEDESTRIAN = "pedestrian"


DEFAULT_BBOX = {
    AgentKind.EGO: (4.5, 1.8, 1.5),
    AgentKind.NPC_VEHICLE: (4.5, 1.8, 1.5),
    AgentKind.PEDESTRIAN: (0.4, 0.4, 1.75),
}

SEMANTIC_OF_KIND = {
    AgentKind.EGO: "car",
    AgentKind.NPC_VEHICLE: "car",
    AgentKind.PEDESTRIAN: "pedestrian",
}


@dataclass
class Pose:
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = IDENTITY_QUAT

    def validate(self) -> None:
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError("non-finite position")
        if quat_norm_error(self.orientation) > 1e-9:
            raise ValueError("orientation quaternion not unit")

    @property
    def yaw(self) -> float:
        return quat_yaw(self.orientation)

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def transform_point(self, local) -> np.ndarray:
        return self.matrix() @ np.asarray(local, dtype=np.float64) + np.asarray(self.position)

    def to_dict(self) -> dict:
        return {"position": list(self.position), "orientation": list(self.orientation)}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose":
        return cls(tuple(d["position"]), tuple(d["orientation"]))


# ---------- static scene ----------


@dataclass(frozen=True)
class BoxShape:
    center: Vec3
    size: Vec3  # full extents (x, y, z) in the box frame
    yaw: float = 0.0


@dataclass(frozen=True)
class MeshShape:
    triangles: tuple  # ((v0, v1, v2), ...) world-frame vertices


@dataclass(frozen=True)
class PlaneShape:
    z: float = 0.0  # infinite horizontal plane


@dataclass
class StaticObject:
    id: int
    semantic: str
    shape: BoxShape | MeshShape | PlaneShape

    def to_dict(self) -> dict:
        s = self.shape
        if isinstance(s, BoxShape):
            shape = {"kind": "box", "center": list(s.center), "size": list(s.size), "yaw": s.yaw}
        elif isinstance(s, MeshShape):
            shape = {"kind": "mesh", "triangles": [[list(v) for v in t] for t in s.triangles]}
        else:
            shape = {"kind": "plane", "z": s.z}
        return {"id": self.id, "semantic": self.semantic, "shape": shape}

    @classmethod
    def from_dict(cls, d: dict) -> "StaticObject":
        raw = d["shape"]
        if raw["kind"] == "box":
            shape = BoxShape(tuple(raw["center"]), tuple(raw["size"]), float(raw["yaw"]))
        elif raw["kind"] == "mesh":
            shape = MeshShape(tuple(tuple(tuple(v) for v in t) for t in raw["triangles"]))
        elif raw["kind"] == "plane":
            shape = PlaneShape(float(raw["z"]))
        else:
            raise ValueError(f"unknown shape kind {raw['kind']!r}")
        return cls(int(d["id"]), d["semantic"], shape)


@dataclass
class EnvironmentState:
    time_of_day: float = 43200.0  # seconds since midnight
    rain: float = 0.0
    fog: float = 0.0
    wetness: float = 0.0

    def validate(self) -> None:
        if not (0.0 <= self.time_of_day < 86400.0):
            raise ValueError(f"time_of_day {self.time_of_day} outside [0, 86400)")
        for name in ("rain", "fog", "wetness"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} {v} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "time_of_day": self.time_of_day,
            "rain": self.rain,
            "fog": self.fog,
            "wetness": self.wetness,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentState":
        return cls(d["time_of_day"], d["rain"], d["fog"], d["wetness"])


# ---------- agent controllers ----------


@dataclass
class ChassisCommand:
    steering: float = 0.0  # [-1, 1] -> +- max_steer
    throttle: float = 0.0  # [0, 1]
    brake: float = 0.0  # [0, 1]
    reverse: bool = False

    def clamped(self) -> "ChassisCommand":
        return ChassisCommand(
            steering=min(1.0, max(-1.0, self.steering)),
            throttle=min(1.0, max(0.0, self.throttle)),
            brake=min(1.0, max(0.0, self.brake)),
            reverse=bool(self.reverse),
        )

    def to_dict(self) -> dict:
        return {
            "steering": self.steering,
            "throttle": self.throttle,
            "brake": self.brake,
            "reverse": self.reverse,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChassisCommand":
        return cls(d["steering"], d["throttle"], d["brake"], d["reverse"])


@dataclass
class EgoParams:
    wheelbase: float = 2.8
    max_accel: float = 3.0
    max_brake_decel: float = 8.0
    max_steer: float = 0.61
    drag_decel: float = 0.1

    def to_dict(self) -> dict:
        return {
            "wheelbase": self.wheelbase,
            "max_accel": self.max_accel,
            "max_brake_decel": self.max_brake_decel,
            "max_steer": self.max_steer,
            "drag_decel": self.drag_decel,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EgoParams":
        return cls(**d)


@dataclass
class EgoController:
    params: EgoParams = field(default_factory=EgoParams)
    command: ChassisCommand = field(default_factory=ChassisCommand)
    dynamics: str = "bicycle"  # pluggable dynamics provider name

    def to_dict(self) -> dict:
        return {
            "type": "ego",
            "params": self.params.to_dict(),
            "command": self.command.to_dict(),
            "dynamics": self.dynamics,
        }


@dataclass
class IdmParams:
    a_max: float = 1.5
    b_comfort: float = 2.0
    s0: float = 2.0
    t_headway: float = 1.5
    delta: float = 4.0

    def to_dict(self) -> dict:
        return {
            "a_max": self.a_max,
            "b_comfort": self.b_comfort,
            "s0": self.s0,
            "t_headway": self.t_headway,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdmParams":
        return cls(**d)


@dataclass
class NpcController:
    lane_id: str
    s: float
    target_speed: float
    idm: IdmParams = field(default_factory=IdmParams)
    lookahead: float = 6.0
    route: list = field(default_factory=list)  # upcoming lane ids, drawn on demand
    stop_wait_since: float | None = None
    served_sign: str | None = None

    def to_dict(self) -> dict:
        return {
            "type": "npc",
            "lane_id": self.lane_id,
            "s": self.s,
            "target_speed": self.target_speed,
            "idm": self.idm.to_dict(),
            "lookahead": self.lookahead,
            "route": list(self.route),
            "stop_wait_since": self.stop_wait_since,
            "served_sign": self.served_sign,
        }


@dataclass
class WaypointController:
    """Polyline follower used by pedestrians and scripted agents."""

    waypoints: list  # [(x, y, z), ...]
    seg_speeds: list  # one speed per segment (loop closure appends one)
    s: float = 0.0
    loop: bool = False
    done: bool = False

    def to_dict(self) -> dict:
        return {
            "type": "waypoints",
            "waypoints": [list(w) for w in self.waypoints],
            "seg_speeds": list(self.seg_speeds),
            "s": self.s,
            "loop": self.loop,
            "done": self.done,
        }


def controller_from_dict(d: dict | None):
    if d is None:
        return None
    kind = d["type"]
    if kind == "ego":
        return EgoController(
            params=EgoParams.from_dict(d["params"]),
            command=ChassisCommand.from_dict(d["command"]),
            dynamics=d["dynamics"],
        )
    if kind == "npc":
        return NpcController(
            lane_id=d["lane_id"],
            s=d["s"],
            target_speed=d["target_speed"],
            idm=IdmParams.from_dict(d["idm"]),
            lookahead=d["lookahead"],
            route=list(d["route"]),
            stop_wait_since=d["stop_wait_since"],
            served_sign=d["served_sign"],
        )
    if kind == "waypoints":
        return WaypointController(
            waypoints=[tuple(w) for w in d["waypoints"]],
            seg_speeds=list(d["seg_speeds"]),
            s=d["s"],
            loop=d["loop"],
            done=d["done"],
        )
    raise ValueError(f"unknown controller type {kind!r}")


@dataclass
class AgentState:
    id: int
    kind: AgentKind
    pose: Pose
    speed: float = 0.0
    yaw_rate: float = 0.0
    velocity: Vec3 = (0.0, 0.0, 0.0)  # world frame, consistent with motion
    bbox_size: Vec3 = (4.5, 1.8, 1.5)  # (length, width, height)
    controller: EgoController | NpcController | WaypointController | None = None

    @property
    def semantic(self) -> str:
        return SEMANTIC_OF_KIND[self.kind]

    def bbox_center(self) -> np.ndarray:
        x, y, z = self.pose.position
        return np.array([x, y, z + 0.5 * self.bbox_size[2]])

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "pose": self.pose.to_dict(),
            "speed": self.speed,
            "yaw_rate": self.yaw_rate,
            "velocity": list(self.velocity),
            "bbox_size": list(self.bbox_size),
            "controller": self.controller.to_dict() if self.controller else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentState":
        return cls(
            id=int(d["id"]),
            kind=AgentKind(d["kind"]),
            pose=Pose.from_dict(d["pose"]),
            speed=d["speed"],
            yaw_rate=d["yaw_rate"],
            velocity=tuple(d["velocity"]),
            bbox_size=tuple(d["bbox_size"]),
            controller=controller_from_dict(d["controller"]),
        )


# ---------- traffic lights ----------


@dataclass
class TrafficLightRuntime:
    signal_id: str
    cycle: list  # [(phase str, duration s), ...]
    offset: float = 0.0
    override: str | None = None
    phase: str = "red"

    def cycle_length(self) -> float:
        return sum(d for _, d in self.cycle)

    def phase_at(self, sim_time: float) -> str:
        if self.override is not None:
            return self.override
        total = self.cycle_length()
        tau = math.fmod(sim_time + self.offset, total)
        if tau < 0:
            tau += total
        acc = 0.0
        for phase, dur in self.cycle:
            acc += dur
            if tau < acc:
                return phase
        return self.cycle[-1][0]

    def to_dict(self) -> dict:
        return {
            "signal_id": self.signal_id,
            "cycle": [[p, d] for p, d in self.cycle],
            "offset": self.offset,
            "override": self.override,
            "phase": self.phase,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrafficLightRuntime":
        return cls(
            signal_id=d["signal_id"],
            cycle=[(p, dur) for p, dur in d["cycle"]],
            offset=d["offset"],
            override=d["override"],
            phase=d["phase"],
        )


# ---------- events & commands ----------


@dataclass(frozen=True)
class WorldEvent:
    tick: int
    kind: str  # collision | despawn | rejected_command | spawn
    data: tuple  # sorted (key, value) pairs; JSON-safe values only

    def to_dict(self) -> dict:
        return {"tick": self.tick, "kind": self.kind, "data": dict(self.data)}

    @classmethod
    def make(cls, tick: int, kind: str, **data) -> "WorldEvent":
        return cls(tick, kind, tuple(sorted(data.items())))

    @classmethod
    def from_dict(cls, d: dict) -> "WorldEvent":
        return cls(int(d["tick"]), d["kind"], tuple(sorted(d["data"].items())))


@dataclass(frozen=True)
class CollisionEvent:
    tick: int
    id_a: int  # always < id_b
    id_b: int


@dataclass
class Command:
    """One drained inbound command, already deterministically ordered."""

    kind: str  # currently only "chassis"
    agent_id: int | None  # None targets the ego
    chassis: ChassisCommand | None = None


# ---------- the world ----------


@dataclass
class WorldState:
    hd_map: HdMap
    statics: list[StaticObject] = field(default_factory=list)
    agents: dict[int, AgentState] = field(default_factory=dict)
    env: EnvironmentState = field(default_factory=EnvironmentState)
    lights: dict[str, TrafficLightRuntime] = field(default_factory=dict)
    tick: int = 0
    fixed_dt: float = 0.01
    seed: int = 0
    rng: NamedStreams = None
    next_agent_id: int = 1
    next_static_id: int = STATIC_ID_BASE
    events: list[WorldEvent] = field(default_factory=list)
    active_contacts: set = field(default_factory=set)
    prev_velocity: dict[int, Vec3] = field(default_factory=dict)

    def __post_init__(self):
        if self.rng is None:
            self.rng = NamedStreams(self.seed)

    @property
    def sim_time(self) -> float:
        return self.tick * self.fixed_dt  # tick arithmetic, no accumulation

    @property
    def tick_rate(self) -> int:
        return round(1.0 / self.fixed_dt)

    def ego(self) -> AgentState | None:
        for aid in sorted(self.agents):
            if self.agents[aid].kind == AgentKind.EGO:
                return self.agents[aid]
        return None

    def emit(self, kind: str, **data) -> None:
        self.events.append(WorldEvent.make(self.tick, kind, **data))

    def to_dict(self) -> dict:
        return {
            "schema": "avsim.world.v1",
            "map": map_to_dict(self.hd_map),
            "statics": [s.to_dict() for s in self.statics],
            "agents": [self.agents[k].to_dict() for k in sorted(self.agents)],
            "env": self.env.to_dict(),
            "lights": [self.lights[k].to_dict() for k in sorted(self.lights)],
            "tick": self.tick,
            "fixed_dt": self.fixed_dt,
            "seed": self.seed,
            "rng": self.rng.state_dict(),
            "next_agent_id": self.next_agent_id,
            "next_static_id": self.next_static_id,
            "events": [e.to_dict() for e in self.events],
            "active_contacts": sorted(list(p) for p in self.active_contacts),
            "prev_velocity": [[k, list(v)] for k, v in sorted(self.prev_velocity.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldState":
        w = cls(
            hd_map=map_from_dict(d["map"]),
            statics=[StaticObject.from_dict(s) for s in d["statics"]],
            agents={int(a["id"]): AgentState.from_dict(a) for a in d["agents"]},
            env=EnvironmentState.from_dict(d["env"]),
            lights={l["signal_id"]: TrafficLightRuntime.from_dict(l) for l in d["lights"]},
            tick=int(d["tick"]),
            fixed_dt=d["fixed_dt"],
            seed=int(d["seed"]),
            rng=NamedStreams.from_state_dict(d["rng"]),
            next_agent_id=int(d["next_agent_id"]),
            next_static_id=int(d["next_static_id"]),
            events=[WorldEvent.from_dict(e) for e in d["events"]],
            active_contacts={tuple(p) for p in d["active_contacts"]},
            prev_velocity={int(k): tuple(v) for k, v in d["prev_velocity"]},
        )
        return w
