"""Command-line entry point: ``hullpose {fit,bench-kitti,bench-synth,oracle-check}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import Criterion, search_fit
from .errors import FormatError, HullposeError
from .evaluation import emit_report, make_report, run_benchmark
from .kitti import MIN_POINTS, ExtractionStats, list_frames, load_frame, read_scan
from .synth import ScanConfig, oracle_check, two_sided_scene

log = logging.getLogger("hullpose")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_FIT = 0, 1, 2, 3
ALL_METHODS = ",".join(c.value for c in Criterion)


@dataclass
class RunConfig:
    command: str
    method: list[str] = field(default_factory=lambda: [Criterion.OCCLUSION_MIN.value])
    delta_deg: float = 0.5
    dataset_root: Optional[Path] = None
    classes: list[str] = field(default_factory=lambda: ["Car", "Van", "Truck"])
    min_points: int = MIN_POINTS
    output: Optional[Path] = None
    format: str = "csv"
    seed: int = 42

    def __post_init__(self):
        if not 0 < self.delta_deg < 90:
            raise ValueError("delta must lie in (0, 90) degrees")
        if self.min_points < 2:
            raise ValueError("min-points must be at least 2")
        for m in self.method:
            Criterion(m)

    @property
    def delta(self) -> float:
        return math.radians(self.delta_deg)

    def echo(self) -> dict:
        # the report's own destination is not part of what produced it
        d = asdict(self)
        d.pop("output")
        return {k: (str(v) if isinstance(v, Path) else v) for k, v in d.items() if v is not None}


def _tokens(text: str) -> list[str]:
    out = [t.strip() for t in text.split(",") if t.strip()]
    if not out:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return out


def _methods(text: str) -> list[str]:
    out = _tokens(text)
    valid = {c.value for c in Criterion}
    for m in out:
        if m not in valid:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {sorted(valid)}")
    return out


def parse_frames(text: str) -> list[str]:
    """'0-99' (inclusive) or '7,12,000031' to zero-padded frame ids."""
    ids: list[str] = []
    for tok in _tokens(text):
        lo, sep, hi = tok.partition("-")
        try:
            if sep:
                ids.extend(f"{i:06d}" for i in range(int(lo), int(hi) + 1))
            else:
                ids.append(f"{int(tok):06d}")
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad frame token {tok!r}") from None
    return ids


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="hullpose", formatter_class=fmt,
                                     description="Vehicle heading from LiDAR clusters by occlusion-area search.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--delta-deg", type=float, default=0.5, help="heading grid step in degrees")
    common.add_argument("--seed", type=int, default=42, help="seed for every random draw")

    bench = argparse.ArgumentParser(add_help=False)
    bench.add_argument("--method", type=_methods, default=ALL_METHODS,
                       help="comma-separated criteria; repeats are allowed")
    bench.add_argument("--output", type=Path, default=None, help="report path (stdout if omitted)")
    bench.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")
    bench.add_argument("--timing", action=argparse.BooleanOptionalAction, default=True,
                       help="record per-fit runtime; switch off for byte-stable reports")

    p = sub.add_parser("fit", parents=[common], formatter_class=fmt,
                       help="fit one cluster file (CSV x,y,z rows or a velodyne .bin)")
    p.add_argument("input", type=Path, help="cluster file")
    p.add_argument("--method", choices=[c.value for c in Criterion], default=Criterion.OCCLUSION_MIN.value,
                   help="fitting criterion")

    p = sub.add_parser("bench-kitti", parents=[common, bench], formatter_class=fmt,
                       help="benchmark on a KITTI-layout directory")
    p.add_argument("--dataset-root", type=Path, required=True, help="KITTI root (with or without training/)")
    p.add_argument("--classes", type=_tokens, default="Car,Van,Truck", help="object types to evaluate")
    p.add_argument("--min-points", type=int, default=MIN_POINTS, help="skip clusters with fewer points")
    p.add_argument("--frames", type=parse_frames, default=None,
                   help="frame range '0-99' or list '3,7,12' (all frames if omitted)")

    p = sub.add_parser("bench-synth", parents=[common, bench], formatter_class=fmt,
                       help="benchmark on seeded synthetic two-sided scans")
    p.add_argument("--trials", type=int, default=1000, help="number of scenes")
    p.add_argument("--noise-sigma", type=float, default=0.0, help="radial range noise, metres")
    p.add_argument("--dropout", type=float, default=0.0, help="per-ray drop probability")
    p.add_argument("--resolution-deg", type=float, default=0.2, help="azimuth step between rays")
    p.add_argument("--min-face-returns", type=int, default=2,
                   help="returns each facing side needs for a scene to count as two-sided")

    p = sub.add_parser("oracle-check", parents=[common], formatter_class=fmt,
                       help="compare trapezoid areas against the Monte-Carlo region estimate")
    p.add_argument("--trials", type=int, default=500, help="random (hull, heading) pairs")
    p.add_argument("--mc-samples", type=int, default=100_000, help="Monte-Carlo samples per trial")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiplier on max(2%% of rectangle area, 3 standard errors)")
    return parser


def read_cluster_file(path: Path) -> np.ndarray:
    """Load an (n, 3) cluster. Raises FormatError on anything unreadable."""
    try:
        if path.suffix == ".bin":
            return np.asarray(read_scan(path.read_bytes())[:, :3], dtype=np.float64)
        rows = []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    vals = [float(v) for v in row]
                except ValueError:
                    if lineno == 1 and not rows:
                        continue  # header
                    raise FormatError(f"{path}:{lineno}: non-numeric value") from None
                if len(vals) < 3:
                    raise FormatError(f"{path}:{lineno}: expected x,y,z")
                rows.append(vals[:3])
    except OSError as exc:
        raise FormatError(str(exc)) from None
    return np.asarray(rows, dtype=np.float64).reshape(-1, 3)


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")


def cmd_fit(args) -> int:
    try:
        cluster = read_cluster_file(args.input)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        fit = search_fit(cluster, args.method, math.radians(args.delta_deg))
    except HullposeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FIT
    finite = fit.scores[np.isfinite(fit.scores)]
    box = fit.box
    out = {
        "method": args.method,
        "theta_star_deg": math.degrees(fit.theta_star),
        "box": {"center": list(box.center), "extent_e1": box.extent_e1, "extent_e2": box.extent_e2,
                "height": box.height, "yaw_deg": math.degrees(box.yaw)},
        "score_curve": {"n": int(len(fit.scores)), "finite": int(len(finite)),
                        "min": float(finite.min()), "max": float(finite.max()),
                        "argmin": int(np.argmin(fit.scores))},
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _bench(args, samples, config: RunConfig, extra: dict) -> int:
    run = run_benchmark(samples, config.method, config.delta, timing=args.timing)
    echo = config.echo()
    echo.update(extra, skipped_fit_failures=run.skipped, timing=args.timing)
    if not run.samples:
        print("error: no cluster could be fitted", file=sys.stderr)
        return EXIT_INPUT
    report = make_report(run, args.timing, echo)
    _write(emit_report(report, config.format), config.output)
    for m in report.methods:
        log.info("%s: mean |err| %.4f deg over %d clusters", m.method, m.absolute.mean, m.absolute.count)
    return EXIT_OK


def cmd_bench_kitti(args) -> int:
    try:
        config = RunConfig("bench-kitti", args.method, args.delta_deg, args.dataset_root, args.classes,
                           args.min_points, args.output, args.format, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not args.dataset_root.is_dir():
        print(f"error: dataset root {args.dataset_root} does not exist", file=sys.stderr)
        return EXIT_INPUT
    frames = args.frames if args.frames is not None else list_frames(args.dataset_root)
    if not frames:
        print(f"error: no frames selected under {args.dataset_root} (expected velodyne/*.bin)", file=sys.stderr)
        return EXIT_INPUT
    samples, stats = [], ExtractionStats()
    for fid in frames:
        try:
            got, st = load_frame(args.dataset_root, fid, config.classes, config.min_points)
        except FormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        samples.extend(got)
        stats.merge(st)
    log.info("frames %d, vehicles %d, empty %d, too sparse %d, kept %d",
             len(frames), stats.vehicles, stats.empty, stats.too_sparse, stats.kept)
    if not samples:
        print("error: no cluster passed extraction", file=sys.stderr)
        return EXIT_INPUT
    extra = {"frames": len(frames), **{f"extraction_{k}": v for k, v in vars(stats).items()}}
    return _bench(args, samples, config, extra)


def synth_samples(trials: int, seed: int, scan: ScanConfig, min_face_returns: int = 2):
    rng = np.random.default_rng(seed)
    return [two_sided_scene(rng, scan, min_face_returns, f"synth{i:06d}")[1] for i in range(trials)]


def cmd_bench_synth(args) -> int:
    try:
        config = RunConfig("bench-synth", args.method, args.delta_deg, None, [], MIN_POINTS,
                           args.output, args.format, args.seed)
        scan = ScanConfig(math.radians(args.resolution_deg), args.noise_sigma, args.dropout)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    samples = synth_samples(args.trials, args.seed, scan, args.min_face_returns)
    extra = {"trials": args.trials, "noise_sigma": args.noise_sigma, "dropout": args.dropout,
             "resolution_deg": args.resolution_deg, "min_face_returns": args.min_face_returns}
    return _bench(args, samples, config, extra)


def cmd_oracle_check(args) -> int:
    if args.mc_samples < 10_000:
        print("error: --mc-samples must be at least 10000", file=sys.stderr)
        return EXIT_INPUT
    summary = oracle_check(args.trials, args.mc_samples, args.seed, args.tolerance_scale,
                           math.radians(args.delta_deg))
    print(f"trials: {len(summary.trials)}")
    print(f"skipped: {summary.skipped}")
    print(f"max_deviation_m2: {summary.max_deviation:.6f}")
    print(f"max_deviation_frac_of_rect: {summary.max_relative_deviation:.6f}")
    print(f"failures: {summary.failures}")
    print("PASS" if summary.failures == 0 else "FAIL")
    return EXIT_OK if summary.failures == 0 else EXIT_FAIL


COMMANDS = {"fit": cmd_fit, "bench-kitti": cmd_bench_kitti, "bench-synth": cmd_bench_synth,
            "oracle-check": cmd_oracle_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
