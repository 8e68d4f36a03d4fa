"""Local tangent plane <-> geodetic conversion.

Spherical earth, exactly invertible:

    x = (lon - lon0) * cos(lat0) * R * pi / 180
    y = (lat - lat0) * R * pi / 180

with R = 6371000 m. Adequate at map scale (sub-micrometre round-trip error
inside a 10 km map).
"""
from __future__ import annotations

import math

EARTH_RADIUS = 6371000.0
_DEG = EARTH_RADIUS * math.pi / 180.0


def geodetic_to_local(lat: float, lon: float, lat0: float, lon0: float) -> tuple[float, float]:
    x = (lon - lon0) * math.cos(math.radians(lat0)) * _DEG
    y = (lat - lat0) * _DEG
    return x, y


def local_to_geodetic(x: float, y: float, lat0: float, lon0: float) -> tuple[float, float]:
    lat = lat0 + y / _DEG
    lon = lon0 + x / (math.cos(math.radians(lat0)) * _DEG)
    return lat, lon
