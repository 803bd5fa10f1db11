"""Planar primitives: normal-form lines, intersections, convex hulls, areas.

Points are carried as float64 numpy arrays of shape (2,) or (n, 2); `Vec2`
and `LineNF` are light named tuples for the public surface.
"""
from __future__ import annotations

import math

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .errors import DegenerateCluster, DegeneratePolygon

# Build-time constants.
DUPLICATE_TOL = 1e-9   # m
TURN_EPS = 1e-12       # m^2, cross-product threshold for a strict left turn
PARALLEL_EPS = 1e-12
RAY_EPS = 1e-12        # sine of the angle below which two pivot rays are one ray
FILTER_DIRECTIONS = 16
FILTER_MIN_POINTS = 64


class Vec2(NamedTuple):
    x: float
    y: float


class LineNF(NamedTuple):
    """The line {p : a*p.x + b*p.y = c} with (a, b) a unit normal."""

    a: float
    b: float
    c: float

    @classmethod
    def through(cls, p, q) -> "LineNF":
        px, py = float(p[0]), float(p[1])
        dx, dy = float(q[0]) - px, float(q[1]) - py
        n = np.hypot(dx, dy)
        if n == 0.0:
            raise ValueError("line through coincident points")
        a, b = -dy / n, dx / n
        return cls(a, b, a * px + b * py)

    @property
    def direction(self) -> Vec2:
        return Vec2(self.b, -self.a)


@dataclass(frozen=True)
class Hull:
    """Counter-clockwise, strictly convex vertex ring (2 vertices when degenerate)."""

    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.points[i % len(self.points)]

    @property
    def is_degenerate(self) -> bool:
        return len(self.points) < 3

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hull):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    __hash__ = None


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {pts.shape}")
    pts = pts[:, :2]
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    return pts


def signed_distance(p, line: LineNF) -> float:
    a, b, c = line
    return a * p[0] + b * p[1] - c


def line_intersection(l1: LineNF, l2: LineNF) -> Optional[Vec2]:
    det = l1.a * l2.b - l2.a * l1.b
    if abs(det) < PARALLEL_EPS:
        return None
    x = (l1.c * l2.b - l2.c * l1.b) / det
    y = (l1.a * l2.c - l2.a * l1.c) / det
    return Vec2(x, y)


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=np.float64)
    if len(v) < 3:
        raise DegeneratePolygon(f"need at least 3 vertices, got {len(v)}")
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


@njit(cache=True)
def _graham_scan(pts, eps):
    # pts[0] is the pivot; the rest are sorted by polar angle, then distance.
    # Collinear runs may still arrive out of distance order because their
    # atan2 values differ in the last bits, so collinear triples keep the
    # point farther from the anchor instead of trusting the sort.
    n = pts.shape[0]
    stack = np.empty((n, 2))
    top = 0
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        skip = False
        while top >= 2:
            ox = stack[top - 2, 0]
            oy = stack[top - 2, 1]
            ax = stack[top - 1, 0] - ox
            ay = stack[top - 1, 1] - oy
            bx = px - ox
            by = py - oy
            cr = ax * by - ay * bx
            if cr > eps:
                break
            if cr >= -eps and bx * bx + by * by <= ax * ax + ay * ay:
                skip = True
                break
            top -= 1
        if not skip:
            stack[top, 0] = px
            stack[top, 1] = py
            top += 1
    return stack[:top].copy()


@njit(cache=True)
def _drop_interior(pts, ndir, eps):
    """Discard points strictly inside the polygon of extreme points along
    `ndir` evenly spaced directions; none of them can be a hull vertex."""
    n = pts.shape[0]
    poly = np.empty((ndir, 2))
    m = 0
    for k in range(ndir):
        c = math.cos(2 * math.pi * k / ndir)
        s = math.sin(2 * math.pi * k / ndir)
        best = -np.inf
        bi = 0
        for i in range(n):
            v = pts[i, 0] * c + pts[i, 1] * s
            if v > best:
                best = v
                bi = i
        if m == 0 or pts[bi, 0] != poly[m - 1, 0] or pts[bi, 1] != poly[m - 1, 1]:
            poly[m, 0] = pts[bi, 0]
            poly[m, 1] = pts[bi, 1]
            m += 1
    while m > 1 and poly[m - 1, 0] == poly[0, 0] and poly[m - 1, 1] == poly[0, 1]:
        m -= 1
    if m < 3:
        return pts.copy()
    out = np.empty_like(pts)
    cnt = 0
    for i in range(n):
        inside = True
        for k in range(m):
            ax = poly[k, 0]
            ay = poly[k, 1]
            bx = poly[(k + 1) % m, 0]
            by = poly[(k + 1) % m, 1]
            if (bx - ax) * (pts[i, 1] - ay) - (by - ay) * (pts[i, 0] - ax) <= eps:
                inside = False
                break
        if not inside:
            out[cnt, 0] = pts[i, 0]
            out[cnt, 1] = pts[i, 1]
            cnt += 1
    return out[:cnt].copy()


@njit(cache=True)
def _before(d, pts, i, j):
    # distance from the pivot, then coordinates, so the order never depends on input order
    di = d[i, 0] ** 2 + d[i, 1] ** 2
    dj = d[j, 0] ** 2 + d[j, 1] ** 2
    if di != dj:
        return di < dj
    if pts[i, 0] != pts[j, 0]:
        return pts[i, 0] < pts[j, 0]
    return pts[i, 1] < pts[j, 1]


@njit(cache=True)
def _ray_order(d, pts, order, eps):
    # atan2 does not order points collinear with the pivot reliably; treat
    # sorted neighbours at a vanishing angle as one ray and sort that run by
    # distance from the pivot. The test is relative so that a point next to
    # the pivot does not join unrelated rays.
    n = order.shape[0]
    out = order.copy()
    start = 0
    while start < n:
        stop = start + 1
        while stop < n:
            a = out[stop - 1]
            b = out[stop]
            cross = d[a, 0] * d[b, 1] - d[a, 1] * d[b, 0]
            if abs(cross) > eps * math.hypot(d[a, 0], d[a, 1]) * math.hypot(d[b, 0], d[b, 1]):
                break
            stop += 1
        if stop - start > 1:
            run = out[start:stop].copy()
            dist = np.empty(run.shape[0])
            for k in range(run.shape[0]):
                dist[k] = d[run[k], 0] ** 2 + d[run[k], 1] ** 2
            idx = np.argsort(dist)
            for k in range(run.shape[0]):
                out[start + k] = run[idx[k]]
            # insertion pass settles distance ties; linear when there are none
            for k in range(start + 1, stop):
                v = out[k]
                m = k
                while m > start and _before(d, pts, v, out[m - 1]):
                    out[m] = out[m - 1]
                    m -= 1
                out[m] = v
        start = stop
    return out


def _graham(pts: np.ndarray) -> np.ndarray:
    if len(pts) >= FILTER_MIN_POINTS:
        pts = _drop_interior(pts, FILTER_DIRECTIONS, TURN_EPS)
    # pivot: lowest y, ties broken by lowest x; exact duplicates sort adjacent
    # and are popped by the scan as zero turns
    low = np.flatnonzero(pts[:, 1] == pts[:, 1].min())
    p = low[np.argmin(pts[low, 0])]
    pivot = pts[p]
    rest = np.delete(pts, p, axis=0)
    d = rest - pivot
    # copies of the pivot would read as collinear with every ray
    keep = (d[:, 0] != 0) | (d[:, 1] != 0)
    rest, d = rest[keep], d[keep]
    order = np.argsort(np.arctan2(d[:, 1], d[:, 0]))
    order = _ray_order(d, rest, order, RAY_EPS)
    return _graham_scan(np.vstack([pivot[None, :], rest[order]]), TURN_EPS)


def convex_hull(points) -> Hull:
    """Graham-scan hull of a planar point set.

    Collinear input collapses to its two extreme points. Raises
    DegenerateCluster for fewer than two distinct points.
    """
    pts = _as_points(points)
    if len(pts) < 2 or np.all(pts == pts[0]):
        raise DegenerateCluster("need at least 2 distinct points")
    hull = _graham(pts)
    while len(hull) > 1:
        # drop a vertex that nearly duplicates its predecessor, then rescan;
        # the pivot at index 0 always survives, so a last vertex close to it goes
        close = np.hypot(*(hull - np.roll(hull, 1, axis=0)).T) <= DUPLICATE_TOL
        close[-1] |= close[0]
        close[0] = False
        if not close.any():
            break
        hull = hull[~close]
        if len(hull) < 2:
            break
        hull = _graham(hull)
    if len(hull) < 2:
        raise DegenerateCluster("all points within the duplicate tolerance")
    return Hull(hull)
