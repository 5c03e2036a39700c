"""Spherical geometry on persisted-precision coordinates.

All distances use the haversine great-circle formula with the mean Earth
radius. Point-to-polyline distances run the foot-point search in a local
equirectangular projection (error well under a centimeter at the 15 m scales
we attribute at) and report the final distance with haversine so the number
matches what every other part of the system would measure.
"""

from __future__ import annotations

import math

EARTH_RADIUS_M = 6_371_000.0

COORD_DECIMALS = 5  # persisted precision, ~1.1 m quantum


def round_coord(value: float) -> float:
    return round(value, COORD_DECIMALS)


def haversine_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between (lat, lon) points in degrees."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return EARTH_RADIUS_M * 2 * math.asin(min(1.0, math.sqrt(h)))


def polyline_length_m(vertices: list[tuple[float, float]]) -> float:
    """Sum of haversine leg lengths over consecutive vertices."""
    return sum(haversine_m(vertices[i], vertices[i + 1]) for i in range(len(vertices) - 1))


def _to_local_m(point: tuple[float, float], origin: tuple[float, float]) -> tuple[float, float]:
    # Equirectangular projection centered at `origin`: x east, y north, meters.
    lat0 = math.radians(origin[0])
    x = math.radians(point[1] - origin[1]) * math.cos(lat0) * EARTH_RADIUS_M
    y = math.radians(point[0] - origin[0]) * EARTH_RADIUS_M
    return x, y


def _from_local_m(xy: tuple[float, float], origin: tuple[float, float]) -> tuple[float, float]:
    lat0 = math.radians(origin[0])
    lat = origin[0] + math.degrees(xy[1] / EARTH_RADIUS_M)
    lon = origin[1] + math.degrees(xy[0] / (EARTH_RADIUS_M * math.cos(lat0)))
    return lat, lon


def point_to_leg_m(
    point: tuple[float, float],
    leg_start: tuple[float, float],
    leg_end: tuple[float, float],
) -> tuple[float, tuple[float, float]]:
    """Distance from a point to one polyline leg, plus the foot point.

    The projection parameter is found in a local planar frame centered at the
    point; the returned distance is haversine to the (clamped) foot point.
    """
    ax, ay = _to_local_m(leg_start, point)
    bx, by = _to_local_m(leg_end, point)
    dx, dy = bx - ax, by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        foot = leg_start
    else:
        # Point is the local origin, so the projection of -A onto (B-A).
        t = (-(ax * dx) - (ay * dy)) / seg_len_sq
        t = max(0.0, min(1.0, t))
        foot = _from_local_m((ax + t * dx, ay + t * dy), point)
    return haversine_m(point, foot), foot


def point_to_polyline_m(point: tuple[float, float], vertices: list[tuple[float, float]]) -> float:
    """Minimum distance from a point to a polyline, in meters."""
    if len(vertices) == 1:
        return haversine_m(point, vertices[0])
    best = math.inf
    for i in range(len(vertices) - 1):
        dist, _ = point_to_leg_m(point, vertices[i], vertices[i + 1])
        if dist < best:
            best = dist
    return best
