"""Shared raycast service: planes, oriented boxes, triangle meshes.

All kernels are vectorized over rays (float64). Objects are folded in
ascending instance id with a strict-improvement rule, so range ties within
1e-12 resolve to the lower instance id regardless of traversal order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import Vec3
from .state import AgentState, BoxShape, MeshShape, PlaneShape, StaticObject, WorldState

RAY_EPS = 1e-9
TIE_EPS = 1e-12


@dataclass(frozen=True)
class RayHit:
    range: float
    point: Vec3
    normal: Vec3
    instance_id: int
    semantic: str


@dataclass
class BatchHits:
    ranges: np.ndarray  # (N,) float64, inf = miss
    points: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3)
    instance: np.ndarray  # (N,) int64, -1 = miss
    semantic_idx: np.ndarray  # (N,) int64 index into semantics, -1 = miss
    semantics: list[str]

    def hit_mask(self) -> np.ndarray:
        return self.instance >= 0


def _plane_hits(origins, dirs, z):
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z - origins[:, 2]) / dz
    t = np.where((np.abs(dz) > 0) & (t > RAY_EPS), t, np.inf)
    normals = np.zeros((len(origins), 3))
    normals[:, 2] = np.where(dz > 0, -1.0, 1.0)
    return t, normals


def _box_hits(origins, dirs, center, size, yaw):
    cy, sy = math.cos(yaw), math.sin(yaw)
    rot = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    lo = (origins - np.asarray(center)) @ rot  # world->local == R^T applied row-wise
    ld = dirs @ rot
    half = 0.5 * np.asarray(size)

    t1 = np.empty_like(lo)
    t2 = np.empty_like(lo)
    for axis in range(3):
        d = ld[:, axis]
        o = lo[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (-half[axis] - o) / d
            b = (half[axis] - o) / d
        near = np.minimum(a, b)
        far = np.maximum(a, b)
        parallel = d == 0
        inside = np.abs(o) <= half[axis]
        t1[:, axis] = np.where(parallel, np.where(inside, -np.inf, np.inf), near)
        t2[:, axis] = np.where(parallel, np.where(inside, np.inf, -np.inf), far)
    tnear = t1.max(axis=1)
    tfar = t2.min(axis=1)
    near_axis = t1.argmax(axis=1)
    far_axis = t2.argmin(axis=1)

    hit_outside = (tnear > RAY_EPS) & (tnear <= tfar)
    hit_inside = (tnear <= RAY_EPS) & (tfar > RAY_EPS)
    t = np.where(hit_outside, tnear, np.where(hit_inside, tfar, np.inf))

    axis_sel = np.where(hit_outside, near_axis, far_axis)
    rows = np.arange(len(dirs))
    axis_dir = ld[rows, axis_sel]
    # entering face normal opposes the ray; exit face normal follows it
    sign = np.where(hit_outside, -np.sign(axis_dir), np.sign(axis_dir))
    normals_local = np.zeros((len(dirs), 3))
    normals_local[rows, axis_sel] = np.where(sign == 0, 1.0, sign)
    normals = normals_local @ rot.T
    return t, normals


def _triangle_hits(origins, dirs, tri):
    """Moller-Trumbore, vectorized over rays for one triangle."""
    v0, v1, v2 = (np.asarray(v, dtype=np.float64) for v in tri)
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(dirs, e2)
    det = pvec @ e1
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvec = origins - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        v = np.einsum("ij,ij->i", dirs, qvec) * inv
        t = (qvec @ e2) * inv
    valid = (
        (np.abs(det) > 1e-12)
        & (u >= -1e-12)
        & (v >= -1e-12)
        & (u + v <= 1.0 + 1e-12)
        & (t > RAY_EPS)
    )
    t = np.where(valid, t, np.inf)
    n = np.cross(e1, e2)
    norm = np.linalg.norm(n)
    n = n / norm if norm > 0 else np.array([0.0, 0.0, 1.0])
    normals = np.broadcast_to(n, dirs.shape).copy()
    flip = dirs @ n > 0
    normals[flip] = -n
    return t, normals


def scene_objects(world: WorldState):
    """Raycastable objects (statics + agent boxes), ascending instance id."""
    objs = []
    for agent in world.agents.values():
        cx, cy, cz = agent.bbox_center()
        objs.append(
            (
                agent.id,
                agent.semantic,
                BoxShape((cx, cy, cz), tuple(agent.bbox_size), agent.pose.yaw),
            )
        )
    for s in world.statics:
        objs.append((s.id, s.semantic, s.shape))
    objs.sort(key=lambda o: o[0])
    return objs


def raycast_batch(
    objects, origins, dirs, max_range: float, exclude_ids: frozenset = frozenset()
) -> BatchHits:
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    n = len(dirs)
    best_t = np.full(n, np.inf)
    best_normals = np.zeros((n, 3))
    best_instance = np.full(n, -1, dtype=np.int64)
    best_sem = np.full(n, -1, dtype=np.int64)
    semantics: list[str] = []
    sem_index: dict[str, int] = {}

    for instance_id, semantic, shape in objects:
        if instance_id in exclude_ids:
            continue
        if isinstance(shape, PlaneShape):
            t, normals = _plane_hits(origins, dirs, shape.z)
        elif isinstance(shape, BoxShape):
            t, normals = _box_hits(origins, dirs, shape.center, shape.size, shape.yaw)
        elif isinstance(shape, MeshShape):
            t = np.full(n, np.inf)
            normals = np.zeros((n, 3))
            for tri in shape.triangles:
                tt, tn = _triangle_hits(origins, dirs, tri)
                closer = tt < t
                t = np.where(closer, tt, t)
                normals[closer] = tn[closer]
        else:
            raise TypeError(f"unsupported shape {type(shape)}")
        t = np.where(t <= max_range, t, np.inf)
        better = t < best_t - TIE_EPS
        if not better.any():
            continue
        if semantic not in sem_index:
            sem_index[semantic] = len(semantics)
            semantics.append(semantic)
        best_t[better] = t[better]
        best_normals[better] = normals[better]
        best_instance[better] = instance_id
        best_sem[better] = sem_index[semantic]

    finite = np.isfinite(best_t)
    points = np.where(
        finite[:, None], origins + dirs * np.where(finite, best_t, 0.0)[:, None], 0.0
    )
    return BatchHits(best_t, points, best_normals, best_instance, best_sem, semantics)


def raycast(
    world: WorldState, origin, direction, max_range: float, exclude_ids: frozenset = frozenset()
) -> RayHit | None:
    """Nearest hit among statics and agent boxes; None on miss."""
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be unit length")
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    hits = raycast_batch(
        scene_objects(world), np.asarray([origin]), d[None, :], max_range, exclude_ids
    )
    if hits.instance[0] < 0:
        return None
    return RayHit(
        range=float(hits.ranges[0]),
        point=tuple(hits.points[0]),
        normal=tuple(hits.normals[0]),
        instance_id=int(hits.instance[0]),
        semantic=hits.semantics[hits.semantic_idx[0]],
    )
