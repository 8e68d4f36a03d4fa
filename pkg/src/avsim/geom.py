"""Shared geometry: angles, quaternions, and polyline queries.

Conventions: right-handed east-north-up frame, z up, yaw measured CCW from
+x (atan2 convention). Quaternions are (w, x, y, z) tuples of floats.
"""
from __future__ import annotations

import math

import numpy as np

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


def wrap_angle(a: float) -> float:
    """Wrap an angle into [-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a < 0:
        a += 2.0 * math.pi
    return a - math.pi


def quat_from_yaw(yaw: float) -> Quat:
    h = 0.5 * yaw
    return (math.cos(h), 0.0, 0.0, math.sin(h))


def quat_from_euler(roll: float, pitch: float, yaw: float) -> Quat:
    """Intrinsic z-y'-x'' (yaw, pitch, roll) to quaternion."""
    cy, sy = math.cos(yaw * 0.5), math.sin(yaw * 0.5)
    cp, sp = math.cos(pitch * 0.5), math.sin(pitch * 0.5)
    cr, sr = math.cos(roll * 0.5), math.sin(roll * 0.5)
    return (
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def quat_multiply(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q: Quat) -> Quat:
    w, x, y, z = q
    return (w, -x, -y, -z)


def quat_normalize(q: Quat) -> Quat:
    n = math.sqrt(sum(c * c for c in q))
    if n == 0.0:
        raise ValueError("zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_norm_error(q: Quat) -> float:
    return abs(math.sqrt(sum(c * c for c in q)) - 1.0)


def quat_to_matrix(q: Quat) -> np.ndarray:
    """3x3 rotation matrix; q must be unit."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_rotate(q: Quat, v) -> np.ndarray:
    return quat_to_matrix(q) @ np.asarray(v, dtype=np.float64)


def quat_yaw(q: Quat) -> float:
    w, x, y, z = q
    return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


class Polyline:
    """Immutable 3D polyline with arc-length queries.

    Arc length runs along the 3D polyline; the lateral offset sign is taken
    in the XY plane (positive left of travel direction).
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 3:
            raise ValueError("polyline needs at least 2 3D points")
        self.points = pts
        seg = np.diff(pts, axis=0)
        self.seg_lengths = np.linalg.norm(seg, axis=1)
        self.cum = np.concatenate(([0.0], np.cumsum(self.seg_lengths)))
        self.length = float(self.cum[-1])

    def point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(i, len(self.seg_lengths) - 1)
        seg_len = self.seg_lengths[i]
        t = 0.0 if seg_len == 0.0 else (s - self.cum[i]) / seg_len
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def heading_at(self, s: float) -> float:
        """Tangent direction (radians) of the segment containing s."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(max(i, 0), len(self.seg_lengths) - 1)
        d = self.points[i + 1] - self.points[i]
        return math.atan2(d[1], d[0])

    def project(self, point) -> tuple[float, float]:
        """Project a point; returns (s, signed lateral offset d).

        d magnitude is the 3D point-to-polyline distance, its sign comes
        from the XY cross product (positive left of travel).
        """
        p = np.asarray(point, dtype=np.float64)
        a = self.points[:-1]
        d = self.points[1:] - a
        seg_sq = np.einsum("ij,ij->i", d, d)
        seg_sq_safe = np.where(seg_sq == 0.0, 1.0, seg_sq)
        t = np.clip(np.einsum("ij,ij->i", p - a, d) / seg_sq_safe, 0.0, 1.0)
        feet = a + t[:, None] * d
        dist = np.linalg.norm(p - feet, axis=1)
        i = int(np.argmin(dist))
        s = float(self.cum[i] + t[i] * self.seg_lengths[i])
        cross = d[i, 0] * (p[1] - a[i, 1]) - d[i, 1] * (p[0] - a[i, 0])
        sign = 1.0 if cross > 0 else (-1.0 if cross < 0 else 0.0)
        return s, sign * float(dist[i])

    def distance_to(self, point) -> float:
        return abs(self.project(point)[1])

    def resample(self, spacing: float) -> list[tuple[np.ndarray, float]]:
        """Arc-length-uniform resample including both endpoints.

        Consecutive samples are spaced length/ceil(length/spacing) apart,
        which never exceeds ``spacing``.
        """
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        n = max(1, math.ceil(self.length / spacing - 1e-12))
        out = []
        for i in range(n + 1):
            s = self.length * i / n
            out.append((self.point_at(s), self.heading_at(s)))
        return out


def resample_to_count(points, count: int) -> np.ndarray:
    """Resample a polyline to exactly ``count`` arc-length-uniform points."""
    pl = Polyline(points)
    if count < 2:
        raise ValueError("count must be >= 2")
    return np.array([pl.point_at(pl.length * i / (count - 1)) for i in range(count)])
