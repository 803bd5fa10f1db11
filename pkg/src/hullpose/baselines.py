"""Classical rectangle-fitting criteria searched over the same heading grid.

Area minimisation scores the hull's bounding rectangle; closeness and
variance consume every projected point. `occlusion_min` delegates to
`pose.estimate_pose` unchanged.
"""
from __future__ import annotations

import enum

import numpy as np

from .geometry import Hull, convex_hull
from .pose import (DEFAULT_DELTA, Cluster2D, FitResult, OrientedRectFrame, estimate_pose,
                   fit_from_scores, project_to_plane, rect_from_theta, theta_grid)

CLOSENESS_D0 = 0.01  # m
TIE_TOL = 1e-12      # m; corner points (d1 = d2 up to rounding) join the e1 group


class Criterion(str, enum.Enum):
    AREA_MIN = "area_min"
    CLOSENESS_MAX = "closeness_max"
    VARIANCE_MIN = "variance_min"
    OCCLUSION_MIN = "occlusion_min"


def _edge_distances(points: np.ndarray, rect: OrientedRectFrame):
    """Distance of each point to the nearer e1-side and nearer e2-side line."""
    a, b, c = rect.edges.T
    proj1 = points @ np.array([a[0], b[0]])
    proj2 = points @ np.array([a[1], b[1]])
    d1 = np.minimum(proj1 - c[0], c[2] - proj1)
    d2 = np.minimum(proj2 - c[1], c[3] - proj2)
    return d1, d2


def _points_of(points) -> np.ndarray:
    if isinstance(points, Cluster2D):
        return points.points
    return np.asarray(points, dtype=np.float64)[:, :2]


def score_area(hull: Hull, rect: OrientedRectFrame) -> float:
    return rect.extent_e1 * rect.extent_e2


def score_closeness(points, rect: OrientedRectFrame, d0: float = CLOSENESS_D0) -> float:
    """Negated closeness: -sum 1/max(d, d0) with d the distance to the nearest side."""
    d1, d2 = _edge_distances(_points_of(points), rect)
    d = np.minimum(d1, d2)
    return -float(np.sum(1.0 / np.maximum(d, d0)))


def score_variance(points, rect: OrientedRectFrame) -> float:
    d1, d2 = _edge_distances(_points_of(points), rect)
    near1 = d1 <= d2 + TIE_TOL
    total = 0.0
    for group in (d1[near1], d2[~near1]):
        if len(group) > 1:
            total += float(np.var(group, ddof=1))
    return total


def search_fit(cluster, criterion: Criterion | str, delta: float = DEFAULT_DELTA) -> FitResult:
    criterion = Criterion(criterion)
    if criterion is Criterion.OCCLUSION_MIN:
        return estimate_pose(cluster, delta)
    flat = project_to_plane(cluster)
    hull = convex_hull(flat.points)
    thetas = theta_grid(delta)
    scores = np.empty(len(thetas))
    for k, theta in enumerate(thetas):
        rect = rect_from_theta(hull, theta)
        if criterion is Criterion.AREA_MIN:
            scores[k] = score_area(hull, rect)
        elif criterion is Criterion.CLOSENESS_MAX:
            scores[k] = score_closeness(flat.points, rect)
        else:
            scores[k] = score_variance(flat.points, rect)
    return fit_from_scores(hull, flat, thetas, scores)
