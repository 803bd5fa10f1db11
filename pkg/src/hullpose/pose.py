"""Minimum-occlusion-area pose search over a convex hull.

The cluster is projected to the ground plane and reduced to its hull. For
each candidate heading on a [0, pi/2) grid the min/max support lines along
the heading and its normal give a rectangle. Each of the two extreme-azimuth
hull vertices is joined to the sensor by a ray; the rectangle edge that ray
enters through is the projection edge for that side. Walking the hull's
sensor-facing chain from each side, every chord and the projection edge
bound a trapezoid, and the summed trapezoid area is the space the rectangle
claims in front of the observed contour. The heading with the least such
area wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import _kernels as K
from .errors import DegenerateCluster, EstimationFailed, NoVisibleEdge, OriginInsideHull
from .geometry import TURN_EPS, Hull, LineNF, Vec2, convex_hull

DEFAULT_DELTA = math.radians(0.5)
HALF_PI = math.pi / 2

Side = Literal["left", "right"]


@dataclass(frozen=True)
class Cluster2D:
    points: np.ndarray   # (n, 2)
    z_min: float
    z_max: float


@dataclass(frozen=True)
class OrientedRectFrame:
    theta: float
    edges: np.ndarray      # (4, 3) rows (a, b, c)
    vertices: np.ndarray   # (4, 2), vertex i = edges i and i+1

    def line(self, i: int) -> LineNF:
        a, b, c = self.edges[i % 4]
        return LineNF(float(a), float(b), float(c))

    @property
    def lines(self) -> list[LineNF]:
        return [self.line(i) for i in range(4)]

    @property
    def extent_e1(self) -> float:
        return float(self.edges[2, 2] - self.edges[0, 2])

    @property
    def extent_e2(self) -> float:
        return float(self.edges[3, 2] - self.edges[1, 2])

    @property
    def area(self) -> float:
        return self.extent_e1 * self.extent_e2

    def contains(self, p, tol: float = 1e-9) -> bool:
        a, b, c = self.edges.T
        s = a * p[0] + b * p[1] - c
        return bool(np.all(s[:2] >= -tol) and np.all(s[2:] <= tol))


@dataclass(frozen=True)
class VisibleWedge:
    vl_idx_l: int            # min azimuth
    vl_idx_r: int            # max azimuth
    ray_l: LineNF
    ray_r: LineNF
    point_l: Vec2
    point_r: Vec2
    center_azimuth: float    # azimuths below are measured relative to this
    azimuth_l: float
    azimuth_r: float


@dataclass(frozen=True)
class Box3D:
    center: tuple[float, float, float]
    extent_e1: float
    extent_e2: float
    height: float
    yaw: float

    def footprint(self) -> np.ndarray:
        """Footprint corners, CCW, starting at the (-e1, -e2) corner."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        e1 = np.array([c, s])
        e2 = np.array([-s, c])
        h1, h2 = self.extent_e1 / 2, self.extent_e2 / 2
        ctr = np.array(self.center[:2])
        return np.array([ctr - h1 * e1 - h2 * e2, ctr + h1 * e1 - h2 * e2,
                         ctr + h1 * e1 + h2 * e2, ctr - h1 * e1 + h2 * e2])


@dataclass(frozen=True)
class FitResult:
    theta_star: float
    thetas: np.ndarray
    scores: np.ndarray
    box: Box3D
    hull: Optional[Hull] = field(default=None, compare=False, repr=False)

    @property
    def score_curve(self) -> list[tuple[float, float]]:
        return list(zip(self.thetas.tolist(), self.scores.tolist()))

    def same_as(self, other: "FitResult") -> bool:
        return (self.theta_star == other.theta_star
                and np.array_equal(self.thetas, other.thetas)
                and np.array_equal(self.scores, other.scores)
                and self.box == other.box)


def project_to_plane(cluster) -> Cluster2D:
    pts = np.asarray(cluster, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 3:
        raise ValueError(f"expected an (n, 3) cluster, got shape {pts.shape}")
    if len(pts) < 2:
        raise DegenerateCluster(f"need at least 2 points, got {len(pts)}")
    if not np.all(np.isfinite(pts[:, :3])):
        raise ValueError("non-finite coordinates")
    z = pts[:, 2]
    return Cluster2D(pts[:, :2].copy(), float(z.min()), float(z.max()))


def theta_grid(delta: float = DEFAULT_DELTA) -> np.ndarray:
    if not delta > 0:
        raise ValueError("delta must be positive")
    n = math.ceil(HALF_PI / delta - 1e-9)
    return np.arange(n) * delta


def rect_from_theta(hull: Hull, theta: float) -> OrientedRectFrame:
    edges = np.empty((4, 3))
    verts = np.empty((4, 2))
    K.rect_from_theta(hull.points, float(theta), edges, verts)
    return OrientedRectFrame(float(theta), edges, verts)


def _origin_in_hull(pts: np.ndarray) -> bool:
    d = np.roll(pts, -1, axis=0) - pts
    cross = d[:, 0] * (-pts[:, 1]) - d[:, 1] * (-pts[:, 0])
    if len(pts) >= 3:
        return bool(np.all(cross >= -TURN_EPS))
    # segment: collinear with the origin and between the endpoints
    a, b = pts
    on_line = abs(cross[0]) <= TURN_EPS * max(1.0, float(np.hypot(*d[0])))
    return bool(on_line and np.dot(-a, b - a) >= 0 and np.dot(-b, a - b) >= 0)


def _ray(p) -> LineNF:
    return LineNF.through((0.0, 0.0), p)


def _recentered_azimuth(pts: np.ndarray, phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    x = pts[..., 0] * c + pts[..., 1] * s
    y = -pts[..., 0] * s + pts[..., 1] * c
    return np.arctan2(y, x)


def boundary_points(hull: Hull) -> VisibleWedge:
    """Hull vertices of extreme azimuth as seen from the sensor at the origin.

    Azimuths are measured after rotating the hull centroid onto the +x axis,
    so clusters behind the sensor across the +-pi cut are handled. Ties go
    to the vertex nearer the sensor.
    """
    pts = hull.points
    if _origin_in_hull(pts):
        raise OriginInsideHull("sensor origin lies inside or on the hull")
    cx, cy = pts.mean(axis=0)
    phi = math.atan2(cy, cx)
    az = _recentered_azimuth(pts, phi)
    dist = np.hypot(pts[:, 0], pts[:, 1])
    il = int(np.lexsort((dist, az))[0])
    ir = int(np.lexsort((dist, -az))[0])
    if az[il] == az[ir]:
        raise DegenerateCluster("cluster has no angular extent as seen from the sensor")
    pl, pr = pts[il], pts[ir]
    return VisibleWedge(il, ir, _ray(pl), _ray(pr), Vec2(*map(float, pl)), Vec2(*map(float, pr)),
                        phi, float(az[il]), float(az[ir]))


def is_visible(p, wedge: VisibleWedge) -> bool:
    az = float(_recentered_azimuth(np.asarray(p, dtype=np.float64), wedge.center_azimuth))
    return wedge.azimuth_l <= az <= wedge.azimuth_r


def select_projection_edge(rect: OrientedRectFrame, wedge: VisibleWedge, side: Side) -> int:
    if side == "left":
        p, s = wedge.point_l, K.SIDE_LEFT
    elif side == "right":
        p, s = wedge.point_r, K.SIDE_RIGHT
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    e = int(K.select_edge(rect.edges, rect.vertices, p.x, p.y, s))
    if e < 0:
        raise NoVisibleEdge(f"no rectangle edge crosses the {side} boundary ray at theta={rect.theta}")
    return e


def occlusion_area(hull: Hull, rect: OrientedRectFrame, wedge: VisibleWedge,
                   proj_l: int, proj_r: int) -> float:
    return float(K.occlusion_area(hull.points, rect.edges, wedge.vl_idx_l, wedge.vl_idx_r,
                                  int(proj_l), int(proj_r)))


def assemble_box3d(rect: OrientedRectFrame, z_min: float, z_max: float) -> Box3D:
    cx, cy = rect.vertices.mean(axis=0)
    return Box3D((float(cx), float(cy), (z_max + z_min) / 2), rect.extent_e1, rect.extent_e2,
                 z_max - z_min, rect.theta)


def fit_from_scores(hull: Hull, flat: Cluster2D, thetas: np.ndarray, scores: np.ndarray) -> FitResult:
    """Pick the grid minimum (first occurrence wins ties) and build its box."""
    if not np.isfinite(scores).any():
        raise EstimationFailed("no candidate orientation produced a finite score")
    k = int(np.argmin(scores))
    rect = rect_from_theta(hull, thetas[k])
    return FitResult(float(thetas[k]), thetas, scores, assemble_box3d(rect, flat.z_min, flat.z_max), hull)


def estimate_pose(cluster, delta: float = DEFAULT_DELTA) -> FitResult:
    flat = project_to_plane(cluster)
    hull = convex_hull(flat.points)
    wedge = boundary_points(hull)
    thetas = theta_grid(delta)
    scores = K.score_curve(hull.points, thetas, wedge.vl_idx_l, wedge.vl_idx_r)
    return fit_from_scores(hull, flat, thetas, scores)
