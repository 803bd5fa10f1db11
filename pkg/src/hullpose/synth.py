"""Simulated single-sensor scans of rectangular vehicles, plus a Monte-Carlo
estimate of the occlusion region used to cross-check the trapezoid sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyScan, HullposeError
from .geometry import Hull, convex_hull
from .kitti import CalibMatrices, ClusterSample, LabelRecord, canonicalize_yaw, format_calib, format_label, write_scan
from .pose import (OrientedRectFrame, VisibleWedge, boundary_points, occlusion_area, rect_from_theta,
                   select_projection_edge, theta_grid)

Z_BAND = (0.0, 1.5)


@dataclass(frozen=True)
class VehicleSpec:
    length: float
    width: float
    center: tuple[float, float]
    yaw: float   # heading of the length axis, any real value

    def __post_init__(self):
        if not self.length >= self.width > 0:
            raise ValueError("need length >= width > 0")

    def corners(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        e1 = np.array([c, s]) * self.length / 2
        e2 = np.array([-s, c]) * self.width / 2
        ctr = np.asarray(self.center, dtype=np.float64)
        return np.array([ctr - e1 - e2, ctr + e1 - e2, ctr + e1 + e2, ctr - e1 + e2])

    def visible_faces(self) -> int:
        """How many sides face the sensor at the origin (0 if it is inside)."""
        c = self.corners()
        d = np.roll(c, -1, axis=0) - c
        # CCW corners: a side faces the origin when the origin is to its right
        outside = d[:, 0] * (-c[:, 1]) - d[:, 1] * (-c[:, 0]) < 0
        return int(outside.sum())


@dataclass(frozen=True)
class ScanConfig:
    angular_resolution: float = math.radians(0.2)
    noise_sigma: float = 0.0
    dropout: float = 0.0
    seed: int = 42

    def __post_init__(self):
        if not self.angular_resolution > 0:
            raise ValueError("angular_resolution must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")


def _first_hits(corners: np.ndarray, az: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Range along each azimuth to the first rectangle side hit (inf on a miss),
    and the index of that side (-1 on a miss)."""
    u = np.stack([np.cos(az), np.sin(az)], axis=1)
    best = np.full(len(az), np.inf)
    face = np.full(len(az), -1)
    for i in range(4):
        p = corners[i]
        d = corners[(i + 1) % 4] - p
        # solve t*u = p + s*d
        den = u[:, 0] * (-d[1]) - u[:, 1] * (-d[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (p[0] * (-d[1]) - p[1] * (-d[0])) / den
            s = (u[:, 0] * p[1] - u[:, 1] * p[0]) / den
        ok = (np.abs(den) > 1e-15) & (t > 0) & (s >= 0) & (s <= 1)
        closer = ok & (t < best)
        best = np.where(closer, t, best)
        face = np.where(closer, i, face)
    return best, face


def cast_rays(spec: VehicleSpec, config: ScanConfig = ScanConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Scan points (n, 3) and the index of the side each one came from."""
    if spec.visible_faces() == 0:
        raise ValueError("sensor lies inside the vehicle footprint")
    rng = np.random.default_rng(config.seed)
    corners = spec.corners()
    phi = math.atan2(spec.center[1], spec.center[0])
    rel = np.arctan2(np.sin(np.arctan2(corners[:, 1], corners[:, 0]) - phi),
                     np.cos(np.arctan2(corners[:, 1], corners[:, 0]) - phi))
    lo, hi = phi + rel.min(), phi + rel.max()
    res = config.angular_resolution
    # fixed azimuth lattice k*res, like a spinning sensor
    az = np.arange(math.ceil(lo / res), math.floor(hi / res) + 1) * res
    r, face = _first_hits(corners, az)
    hit = np.isfinite(r)
    az, r, face = az[hit], r[hit], face[hit]
    if config.noise_sigma > 0:
        r = r + rng.normal(0.0, config.noise_sigma, len(r))
    if config.dropout > 0:
        keep = rng.random(len(r)) >= config.dropout
        az, r, face = az[keep], r[keep], face[keep]
    if len(r) == 0:
        raise EmptyScan("no ray returned a point")
    z = rng.uniform(*Z_BAND, len(r))
    return np.column_stack([r * np.cos(az), r * np.sin(az), z]), face


def simulate_scan(spec: VehicleSpec, config: ScanConfig = ScanConfig(), frame_id: str = "synth") -> ClusterSample:
    pts, _ = cast_rays(spec, config)
    return ClusterSample(frame_id, 0, pts, canonicalize_yaw(spec.yaw))


def stacked_scan(spec: VehicleSpec, config: ScanConfig, rings: int) -> ClusterSample:
    """Several scan lines of one vehicle, each with its own noise draw.

    Mimics a multi-beam sensor: ring k sits at a fixed height inside the
    z band and uses seed ``config.seed + k``.
    """
    if rings < 1:
        raise ValueError("need at least one ring")
    parts = []
    for k in range(rings):
        try:
            pts, _ = cast_rays(spec, replace(config, seed=config.seed + k))
        except EmptyScan:
            continue
        pts[:, 2] = Z_BAND[0] + (Z_BAND[1] - Z_BAND[0]) * (k + 0.5) / rings
        parts.append(pts)
    if not parts:
        raise EmptyScan("no ring returned a point")
    return ClusterSample("stacked", 0, np.vstack(parts), canonicalize_yaw(spec.yaw))


# 64-beam roof sensor: 0.17 deg azimuth step, about 0.4 deg between beams
DENSE_RESOLUTION = math.radians(0.17)
DENSE_BEAM_SPACING = math.radians(0.4)
DENSE_NOISE = 0.02  # m


def dense_scan(spec: VehicleSpec, seed: int = 0) -> ClusterSample:
    """Multi-beam scan whose ring count follows the vehicle's vertical angular size."""
    r = float(np.hypot(*spec.center))
    rings = max(1, int((Z_BAND[1] - Z_BAND[0]) / r / DENSE_BEAM_SPACING))
    return stacked_scan(spec, ScanConfig(DENSE_RESOLUTION, DENSE_NOISE, 0.0, seed=seed), rings)


def random_two_sided_spec(rng: np.random.Generator, r_range=(5.0, 30.0)) -> VehicleSpec:
    """A car-sized rectangle placed so that exactly two of its sides face the sensor."""
    while True:
        length = rng.uniform(3.8, 5.2)
        width = rng.uniform(1.6, 2.0)
        rad = rng.uniform(*r_range)
        bearing = rng.uniform(-math.pi, math.pi)
        spec = VehicleSpec(length, width, (rad * math.cos(bearing), rad * math.sin(bearing)),
                           rng.uniform(-math.pi, math.pi))
        if spec.visible_faces() == 2:
            return spec


def two_sided_scene(rng: np.random.Generator, config: ScanConfig = ScanConfig(), min_face_returns: int = 2,
                    frame_id: str = "synth") -> tuple[VehicleSpec, ClusterSample]:
    """Draw vehicles until both sensor-facing sides show up in the scan.

    A side counts as observed only with at least ``min_face_returns`` points;
    a single grazing return carries no direction. Each scan's noise seed is
    drawn from ``rng``, so the whole scene sequence follows from one seed.
    """
    while True:
        spec = random_two_sided_spec(rng)
        seed = int(rng.integers(2**31))
        try:
            pts, face = cast_rays(spec, replace(config, seed=seed))
        except EmptyScan:
            continue
        if np.sort(np.bincount(face, minlength=4))[-2] >= min_face_returns:
            return spec, ClusterSample(frame_id, 0, pts, canonicalize_yaw(spec.yaw))


def occlusion_area_oracle(hull: Hull, rect: OrientedRectFrame, wedge: VisibleWedge,
                          samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo area of the rectangle region in front of the observed contour.

    A sample q counts when it lies inside the viewing wedge, outside the
    hull, and the ray from the sensor through q first meets the hull beyond
    q. Returns (estimate, standard error).
    """
    if samples < 10_000:
        raise ValueError("use at least 1e4 samples")
    rng = np.random.default_rng(seed)
    area = rect.area
    if area <= 0:
        return 0.0, 0.0
    theta = rect.theta
    e1 = np.array([math.cos(theta), math.sin(theta)])
    e2 = np.array([-math.sin(theta), math.cos(theta)])
    u = rng.uniform(rect.edges[0, 2], rect.edges[2, 2], samples)
    v = rng.uniform(rect.edges[1, 2], rect.edges[3, 2], samples)
    q = u[:, None] * e1 + v[:, None] * e2

    pl = np.asarray(wedge.point_l)
    pr = np.asarray(wedge.point_r)
    in_wedge = ((pl[0] * q[:, 1] - pl[1] * q[:, 0]) >= 0) & ((q[:, 0] * pr[1] - q[:, 1] * pr[0]) >= 0)

    # Cyrus-Beck clip of the sensor ray through q against the hull half-planes
    pts = hull.points
    if len(pts) < 3:
        # a segment has no interior: the ray hits it where it crosses the segment
        a, b = pts
        d = b - a
        den = q[:, 0] * d[1] - q[:, 1] * d[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (a[0] * d[1] - a[1] * d[0]) / den   # ray parameter in units of |q|
            s = (q[:, 0] * a[1] - q[:, 1] * a[0]) / den
        hit = (np.abs(den) > 1e-15) & (s >= 0) & (s <= 1)
        front = in_wedge & hit & (t > 1.0)
    else:
        d = np.roll(pts, -1, axis=0) - pts
        normal = np.stack([d[:, 1], -d[:, 0]], axis=1)   # outward for CCW
        offset = np.sum(normal * pts, axis=1)
        nq = q @ normal.T                                 # (samples, edges)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = offset[None, :] / nq                      # ray p = t*q
        t_in = np.where(nq < 0, t, -np.inf).max(axis=1)
        t_out = np.where(nq > 0, t, np.inf).min(axis=1)
        inside_hull = np.all(nq <= offset[None, :], axis=1)
        front = in_wedge & ~inside_hull & (t_in <= t_out) & (t_in > 1.0)
    p = float(front.mean())
    return p * area, area * math.sqrt(p * (1 - p) / samples)


@dataclass(frozen=True)
class OracleTrial:
    theta: float
    analytic: float
    estimate: float
    std_error: float
    rect_area: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.analytic - self.estimate)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass(frozen=True)
class OracleSummary:
    trials: tuple[OracleTrial, ...]
    skipped: int

    @property
    def failures(self) -> int:
        return sum(not t.passed for t in self.trials)

    @property
    def max_deviation(self) -> float:
        return max((t.deviation for t in self.trials), default=0.0)

    @property
    def max_relative_deviation(self) -> float:
        """Largest deviation as a fraction of its rectangle's area."""
        return max((t.deviation / t.rect_area for t in self.trials if t.rect_area > 0), default=0.0)


def random_observed_hull(rng: np.random.Generator) -> Hull:
    """Hull of a noisy, partially dropped scan of a random two-sided vehicle."""
    while True:
        spec = random_two_sided_spec(rng)
        config = ScanConfig(noise_sigma=float(rng.uniform(0.0, 0.05)), dropout=float(rng.uniform(0.0, 0.3)),
                            seed=int(rng.integers(2**31)))
        try:
            pts, _ = cast_rays(spec, config)
            hull = convex_hull(pts[:, :2])
            boundary_points(hull)
        except HullposeError:
            continue
        return hull


def oracle_check(trials: int = 500, samples: int = 100_000, seed: int = 42, tolerance_scale: float = 1.0,
                 delta: float = math.radians(0.5)) -> OracleSummary:
    """Compare the trapezoid occlusion area with the Monte-Carlo region estimate.

    Each trial draws an observed hull and a grid heading. The tolerance is
    max(2% of the rectangle area, 3 standard errors), times ``tolerance_scale``.
    """
    rng = np.random.default_rng(seed)
    grid = theta_grid(delta)
    out, skipped = [], 0
    for _ in range(trials):
        hull = random_observed_hull(rng)
        theta = float(grid[rng.integers(len(grid))])
        mc_seed = int(rng.integers(2**31))
        rect = rect_from_theta(hull, theta)
        wedge = boundary_points(hull)
        try:
            el = select_projection_edge(rect, wedge, "left")
            er = select_projection_edge(rect, wedge, "right")
        except HullposeError:
            skipped += 1
            continue
        analytic = occlusion_area(hull, rect, wedge, el, er)
        est, se = occlusion_area_oracle(hull, rect, wedge, samples, mc_seed)
        tol = tolerance_scale * max(0.02 * rect.area, 3 * se)
        out.append(OracleTrial(theta, analytic, est, se, rect.area, tol))
    return OracleSummary(tuple(out), skipped)


def export_kitti(samples: list[tuple[VehicleSpec, ClusterSample]], root: Path) -> Path:
    """Write synthetic scenes in KITTI layout (one vehicle per frame).

    The calibration is the plain axis permutation between sensor and camera
    frames. Exported box dimensions are padded by 1 mm so that surface
    returns survive float32 storage.
    """
    root = Path(root)
    for sub in ("velodyne", "label_2", "calib"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    calib = CalibMatrices(np.array([[0.0, -1, 0, 0], [0, 0, -1, 0], [1, 0, 0, 0]]), np.eye(3))
    for i, (spec, sample) in enumerate(samples):
        fid = f"{i:06d}"
        pts = np.column_stack([sample.cluster, np.zeros(len(sample.cluster))])
        (root / "velodyne" / f"{fid}.bin").write_bytes(write_scan(pts))
        cx, cy = spec.center
        ry = -spec.yaw - math.pi / 2
        ry = math.atan2(math.sin(ry), math.cos(ry))
        pad = 1e-3
        rec = LabelRecord("Car", 0.0, 0, 0.0, (0.0, 0.0, 0.0, 0.0),
                          (Z_BAND[1] - Z_BAND[0] + pad, spec.width + pad, spec.length + pad),
                          (-cy, -Z_BAND[0] + pad / 2, cx), ry)
        (root / "label_2" / f"{fid}.txt").write_text(format_label(rec) + "\n")
        (root / "calib" / f"{fid}.txt").write_text(format_calib(calib))
    return root
