"""Deterministic fixed-timestep world: scene assembly, stepping, snapshots.

The step order is fixed: apply commands, update traffic lights, update
agents in ascending id, track contacts, advance the environment clock,
increment the tick. Nothing else mutates a world between snapshots.
"""
from __future__ import annotations

import hashlib
import json
import zlib

from .errors import MapValidationError, SceneError, SnapshotError
from .geom import quat_from_yaw
from .mapcore import HdMap, validate
from .rng import NamedStreams
from .state import (
    AgentKind,
    AgentState,
    BoxShape,
    Command,
    EgoController,
    EnvironmentState,
    MeshShape,
    NpcController,
    PlaneShape,
    Pose,
    StaticObject,
    WaypointController,
    WorldState,
)
from . import agents as agents_mod

SNAPSHOT_MAGIC = b"AVSNP"
SNAPSHOT_VERSION = 1
GROUND_SEMANTIC = "road"


def _shape_from_dict(raw: dict, where: str):
    try:
        kind = raw["kind"]
        if kind == "box":
            return BoxShape(tuple(raw["center"]), tuple(raw["size"]), float(raw.get("yaw", 0.0)))
        if kind == "mesh":
            return MeshShape(tuple(tuple(tuple(float(c) for c in v) for v in t) for t in raw["triangles"]))
        if kind == "plane":
            return PlaneShape(float(raw.get("z", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"{where}: malformed shape ({exc})") from None
    raise SceneError(f"{where}: unknown shape kind {kind!r}")


def load_scene(hd_map: HdMap, scene_descriptor: bytes, seed: int) -> WorldState:
    """Assemble a world at tick 0 from a map, a scene JSON, and a seed."""
    violations = validate(hd_map)
    if violations:
        raise MapValidationError(violations)
    try:
        doc = json.loads(scene_descriptor.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SceneError(f"malformed scene descriptor: {exc}") from None
    if not isinstance(doc, dict):
        raise SceneError("scene descriptor must be a JSON object")

    env = EnvironmentState()
    for key, value in doc.get("environment", {}).items():
        if not hasattr(env, key):
            raise SceneError(f"environment.{key}: unknown key")
        setattr(env, key, float(value))
    try:
        env.validate()
    except ValueError as exc:
        raise SceneError(f"environment: {exc}") from None

    world = WorldState(hd_map=hd_map, env=env, seed=int(seed), rng=NamedStreams(int(seed)))

    if doc.get("ground_plane", True):
        world.statics.append(
            StaticObject(id=world.next_static_id, semantic=GROUND_SEMANTIC, shape=PlaneShape(0.0))
        )
        world.next_static_id += 1
    for i, raw in enumerate(doc.get("statics", [])):
        where = f"statics[{i}]"
        if "semantic" not in raw:
            raise SceneError(f"{where}: missing semantic")
        shape = _shape_from_dict(raw.get("shape", {}), where)
        world.statics.append(
            StaticObject(id=world.next_static_id, semantic=str(raw["semantic"]), shape=shape)
        )
        world.next_static_id += 1

    light_overrides = {}
    for i, raw in enumerate(doc.get("traffic_lights", [])):
        sid = raw.get("signal_id")
        if sid not in hd_map.signals:
            raise SceneError(f"traffic_lights[{i}]: unknown signal {sid!r}")
        light_overrides[sid] = raw
    for sid in sorted(hd_map.signals):
        raw = light_overrides.get(sid, {})
        world.lights[sid] = agents_mod.make_light_runtime(
            sid,
            hd_map.signals[sid].initial_state.value,
            cycle=raw.get("cycle"),
            offset=float(raw.get("offset", 0.0)),
        )

    for i, raw in enumerate(doc.get("spawns", [])):
        where = f"spawns[{i}]"
        try:
            kind = AgentKind(raw["kind"])
        except (KeyError, ValueError):
            raise SceneError(f"{where}: bad agent kind") from None
        position = tuple(float(c) for c in raw.get("position", (0.0, 0.0, 0.0)))
        pose = Pose(position, quat_from_yaw(float(raw.get("yaw", 0.0))))
        agents_mod.spawn_agent(world, kind, pose, raw.get("config", {}))
    world.events.clear()  # scene assembly is not part of the trace
    return world


def set_environment(world: WorldState, env: EnvironmentState) -> WorldState:
    env.validate()
    world.env = env
    return world


def _apply_command(world: WorldState, cmd: Command) -> None:
    if cmd.kind != "chassis":
        world.emit("rejected_command", reason=f"unknown kind {cmd.kind}")
        return
    target = None
    if cmd.agent_id is not None:
        target = world.agents.get(cmd.agent_id)
    else:
        target = world.ego()
    if target is None or not isinstance(target.controller, EgoController):
        world.emit(
            "rejected_command",
            reason="no ego-controlled agent for chassis command",
            agent_id=-1 if cmd.agent_id is None else cmd.agent_id,
        )
        return
    target.controller.command = cmd.chassis.clamped()


def step(world: WorldState, commands: list[Command] | None = None) -> WorldState:
    """Advance exactly one fixed_dt. Commands must already be ordered."""
    for cmd in commands or []:
        _apply_command(world, cmd)

    agents_mod.update_traffic_lights(world.lights, world.sim_time)

    world.prev_velocity = {aid: world.agents[aid].velocity for aid in world.agents}
    vindex = agents_mod.VehicleIndex(world)
    despawned = []
    for aid in sorted(world.agents):
        agent = world.agents[aid]
        ctrl = agent.controller
        if isinstance(ctrl, EgoController):
            agents_mod.step_ego(agent, ctrl.command, ctrl.params, world.fixed_dt)
        elif isinstance(ctrl, NpcController):
            if agents_mod.step_npc(agent, world, vindex, world.fixed_dt) == "despawn":
                despawned.append(aid)
        elif isinstance(ctrl, WaypointController):
            agents_mod.step_waypoints(agent, world.fixed_dt)
        # controller-less agents stay put
    for aid in despawned:
        del world.agents[aid]
        world.prev_velocity.pop(aid, None)
        world.active_contacts = {p for p in world.active_contacts if aid not in p}
        world.emit("despawn", agent_id=aid, reason="end_of_route")

    overlaps = set(agents_mod.current_overlaps(world))
    for pair in sorted(overlaps - world.active_contacts):
        world.emit("collision", id_a=pair[0], id_b=pair[1])
    world.active_contacts = overlaps

    world.env.time_of_day = (world.env.time_of_day + world.fixed_dt) % 86400.0
    world.tick += 1
    return world


def snapshot(world: WorldState) -> bytes:
    """Canonical binary serialization; bit-stable for equal states."""
    doc = json.dumps(world.to_dict(), sort_keys=True, separators=(",", ":"))
    return SNAPSHOT_MAGIC + bytes([SNAPSHOT_VERSION]) + zlib.compress(doc.encode("utf-8"), 9)


def restore(data: bytes) -> WorldState:
    if len(data) < 6 or data[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise SnapshotError("not an avsim snapshot")
    version = data[len(SNAPSHOT_MAGIC)]
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    try:
        doc = json.loads(zlib.decompress(data[len(SNAPSHOT_MAGIC) + 1 :]).decode("utf-8"))
        return WorldState.from_dict(doc)
    except (zlib.error, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise SnapshotError(f"corrupt snapshot payload: {exc}") from None


def state_digest(world: WorldState) -> str:
    return hashlib.sha256(snapshot(world)).hexdigest()
