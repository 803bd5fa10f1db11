"""KITTI object-detection ingestion: velodyne scans, labels, calibration.

Directory layout is the public one: ``velodyne/NNNNNN.bin``,
``label_2/NNNNNN.txt``, ``calib/NNNNNN.txt`` (optionally under ``training/``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError

VEHICLE_CLASSES = ("Car", "Van", "Truck")
MIN_POINTS = 5
BOX_TOL = 1e-6  # m, faces are inclusive up to this


@dataclass(frozen=True)
class LabelRecord:
    object_type: str
    truncated: float
    occluded: int
    alpha: float
    bbox2d: tuple[float, float, float, float]
    dims: tuple[float, float, float]       # h, w, l
    location: tuple[float, float, float]   # bottom centre, rectified camera frame
    rotation_y: float

    @property
    def dont_care(self) -> bool:
        return self.object_type == "DontCare"


@dataclass(frozen=True)
class CalibMatrices:
    velo_to_cam: np.ndarray    # (3, 4)
    rect_rotation: np.ndarray  # (3, 3)

    def velo_to_rect(self, xyz: np.ndarray) -> np.ndarray:
        cam = xyz @ self.velo_to_cam[:, :3].T + self.velo_to_cam[:, 3]
        return cam @ self.rect_rotation.T

    def rect_to_velo_rotation(self) -> np.ndarray:
        return np.linalg.inv(self.rect_rotation @ self.velo_to_cam[:, :3])


@dataclass(frozen=True)
class ClusterSample:
    frame_id: str
    object_index: int
    cluster: np.ndarray        # (n, 3) sensor frame
    gt_yaw_canonical: float


@dataclass
class ExtractionStats:
    labels: int = 0
    vehicles: int = 0
    empty: int = 0
    too_sparse: int = 0
    kept: int = 0

    def merge(self, other: "ExtractionStats") -> None:
        for k in vars(self):
            setattr(self, k, getattr(self, k) + getattr(other, k))


def read_scan(blob: bytes) -> np.ndarray:
    """Decode little-endian float32 (x, y, z, reflectance) records."""
    if len(blob) % 16:
        raise FormatError(f"scan length {len(blob)} is not a multiple of 16 bytes")
    return np.frombuffer(blob, dtype="<f4").reshape(-1, 4)


def write_scan(points: np.ndarray) -> bytes:
    pts = np.asarray(points, dtype="<f4")
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValueError("expected (n, 4) points")
    return pts.tobytes()


def parse_labels(text: str | Iterable[str]) -> list[LabelRecord]:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    out = []
    for lineno, line in enumerate(lines, 1):
        f = line.split()
        if not f:
            continue
        if len(f) != 15:
            raise FormatError(f"label line {lineno}: expected 15 fields, got {len(f)}")
        try:
            v = [float(x) for x in f[1:]]
        except ValueError as exc:
            raise FormatError(f"label line {lineno}: {exc}") from None
        out.append(LabelRecord(f[0], v[0], int(v[1]), v[2], tuple(v[3:7]), tuple(v[7:10]),
                               tuple(v[10:13]), v[13]))
    return out


def parse_calib(text: str | Iterable[str]) -> CalibMatrices:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    entries = {}
    for line in lines:
        key, sep, rest = line.partition(":")
        if not sep:
            continue
        try:
            entries[key.strip()] = np.array([float(x) for x in rest.split()])
        except ValueError:
            raise FormatError(f"calib entry {key.strip()!r} is not numeric") from None
    for key, n in (("Tr_velo_to_cam", 12), ("R0_rect", 9)):
        if key not in entries:
            raise FormatError(f"calib is missing {key}")
        if entries[key].size != n:
            raise FormatError(f"calib {key} has {entries[key].size} values, expected {n}")
    return CalibMatrices(entries["Tr_velo_to_cam"].reshape(3, 4), entries["R0_rect"].reshape(3, 3))


def format_calib(calib: CalibMatrices) -> str:
    def row(m):
        return " ".join(f"{x:.12e}" for x in np.ravel(m))
    return f"R0_rect: {row(calib.rect_rotation)}\nTr_velo_to_cam: {row(calib.velo_to_cam)}\n"


def format_label(rec: LabelRecord) -> str:
    vals = [rec.truncated, rec.occluded, rec.alpha, *rec.bbox2d, *rec.dims, *rec.location, rec.rotation_y]
    return rec.object_type + " " + " ".join(f"{x:.6f}" if isinstance(x, float) else str(x) for x in vals)


def canonicalize_yaw(ry: float) -> float:
    """Map an angle into [0, pi/2); headings one quarter turn apart are identified."""
    q = math.pi / 2
    r = math.fmod(ry, q)
    if r < 0:
        r += q
    return 0.0 if r >= q else r


def label_yaw_in_sensor(rec: LabelRecord, calib: CalibMatrices) -> float:
    """Heading angle of the label's length axis in the sensor x-y plane."""
    heading_rect = np.array([math.cos(rec.rotation_y), 0.0, -math.sin(rec.rotation_y)])
    h = calib.rect_to_velo_rotation() @ heading_rect
    return math.atan2(h[1], h[0])


def points_in_box(points_rect: np.ndarray, rec: LabelRecord, tol: float = BOX_TOL) -> np.ndarray:
    """Boolean mask of rectified-camera points inside the label's 3D box."""
    h, w, l = rec.dims
    c, s = math.cos(rec.rotation_y), math.sin(rec.rotation_y)
    d = points_rect - np.asarray(rec.location)
    # inverse of the rotation about camera y by rotation_y
    x = c * d[:, 0] - s * d[:, 2]
    z = s * d[:, 0] + c * d[:, 2]
    y = d[:, 1]
    return ((np.abs(x) <= l / 2 + tol) & (np.abs(z) <= w / 2 + tol)
            & (y <= tol) & (y >= -h - tol))


def extract_clusters(scan: np.ndarray, labels: Sequence[LabelRecord], calib: CalibMatrices,
                     frame_id: str = "", classes: Sequence[str] = VEHICLE_CLASSES,
                     min_points: int = MIN_POINTS) -> tuple[list[ClusterSample], ExtractionStats]:
    xyz = np.asarray(scan[:, :3], dtype=np.float64)
    rect = calib.velo_to_rect(xyz)
    stats = ExtractionStats(labels=len(labels))
    out = []
    for i, rec in enumerate(labels):
        if rec.object_type not in classes:
            continue
        stats.vehicles += 1
        mask = points_in_box(rect, rec)
        n = int(mask.sum())
        if n == 0:
            stats.empty += 1
            continue
        if n < min_points:
            stats.too_sparse += 1
            continue
        stats.kept += 1
        out.append(ClusterSample(frame_id, i, xyz[mask], canonicalize_yaw(label_yaw_in_sensor(rec, calib))))
    return out, stats


def split_dir(root: Path) -> Path:
    root = Path(root)
    if (root / "training" / "velodyne").is_dir():
        return root / "training"
    return root


def list_frames(root: Path) -> list[str]:
    velo = split_dir(root) / "velodyne"
    if not velo.is_dir():
        return []
    return sorted(p.stem for p in velo.glob("*.bin"))


def load_frame(root: Path, frame_id: str, classes: Sequence[str] = VEHICLE_CLASSES,
               min_points: int = MIN_POINTS) -> tuple[list[ClusterSample], ExtractionStats]:
    base = split_dir(root)
    try:
        scan = read_scan((base / "velodyne" / f"{frame_id}.bin").read_bytes())
        labels = parse_labels((base / "label_2" / f"{frame_id}.txt").read_text())
        calib = parse_calib((base / "calib" / f"{frame_id}.txt").read_text())
    except OSError as exc:
        raise FormatError(f"frame {frame_id}: {exc}") from None
    return extract_clusters(scan, labels, calib, frame_id, classes, min_points)
