"""Orientation-error metrics, aggregation, fit timing and report files.

Conventions (echoed in every emitted report):

* signed error wraps into the half-open interval (-45, 45] degrees, since a
  rectangle's canonical yaw has a 90 degree period;
* spread is the population standard deviation (divide by n);
* the absolute-error histogram uses 1 degree bins over [0, 45], with 45
  itself falling in the last bin.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .baselines import Criterion, search_fit
from .errors import EmptyInput, HullposeError
from .kitti import ClusterSample
from .pose import DEFAULT_DELTA

QUARTER = math.pi / 2
HIST_EDGES = tuple(range(0, 46))
WARMUP_FITS = 10
CONVENTIONS = {"std": "population", "signed_error_interval_deg": "(-45, 45]",
               "histogram": "1 deg bins over [0, 45], last bin closed"}
METRICS = ("signed_error_deg", "abs_error_deg", "runtime_ms")


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class MethodReport:
    method: str
    signed: ErrorStats
    absolute: ErrorStats
    runtime: Optional[ErrorStats]      # None when timing was switched off
    histogram: tuple[int, ...]         # len(HIST_EDGES) - 1 counts

    def stats(self, metric: str) -> Optional[ErrorStats]:
        return {"signed_error_deg": self.signed, "abs_error_deg": self.absolute,
                "runtime_ms": self.runtime}[metric]


@dataclass(frozen=True)
class BenchmarkReport:
    methods: tuple[MethodReport, ...]
    config: dict = field(default_factory=dict)

    def method(self, name: str) -> MethodReport:
        for m in self.methods:
            if m.method == name:
                return m
        raise KeyError(name)


def signed_orientation_error(est: float, gt: float) -> float:
    """Difference est - gt in degrees, wrapped into (-45, 45]."""
    d = est - gt
    # q/2 - ((q/2 - d) mod q) lands in (-q/2, q/2]
    r = math.fmod(QUARTER / 2 - d, QUARTER)
    if r < 0:
        r += QUARTER
    return math.degrees(QUARTER / 2 - r)


def aggregate(errors: Iterable[float]) -> ErrorStats:
    """Mean and population std. Uses exactly rounded sums, so order never matters."""
    xs = [float(x) for x in errors]
    if not xs:
        raise EmptyInput("cannot aggregate an empty error list")
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / n
    return ErrorStats(mean, math.sqrt(var), n)


def histogram(abs_errors: Sequence[float]) -> tuple[int, ...]:
    counts, _ = np.histogram(np.asarray(abs_errors, dtype=np.float64), bins=np.asarray(HIST_EDGES, dtype=float))
    return tuple(int(c) for c in counts)


def _fitter(method: Criterion | str, delta: float) -> Callable:
    crit = Criterion(method)
    return lambda cluster: search_fit(cluster, crit, delta)


def time_fit(cluster, method: Criterion | str = Criterion.OCCLUSION_MIN, delta: float = DEFAULT_DELTA,
             warmup: int = WARMUP_FITS) -> float:
    """Milliseconds for one fit, after ``warmup`` discarded fits of the same cluster."""
    fit = _fitter(method, delta)
    for _ in range(warmup):
        fit(cluster)
    t0 = time.perf_counter()
    fit(cluster)
    return (time.perf_counter() - t0) * 1e3


def build_method_report(method: str, signed_errors: Sequence[float],
                        runtimes_ms: Optional[Sequence[float]] = None) -> MethodReport:
    absolute = [abs(e) for e in signed_errors]
    return MethodReport(method, aggregate(signed_errors), aggregate(absolute),
                        aggregate(runtimes_ms) if runtimes_ms is not None else None,
                        histogram(absolute))


@dataclass
class BenchmarkRun:
    """Raw per-cluster outcome of `run_benchmark`, kept for paired comparisons."""
    methods: list[str]
    samples: list[ClusterSample]
    signed: dict[str, list[float]]
    runtimes: dict[str, list[float]]
    skipped: int = 0


def run_benchmark(samples: Sequence[ClusterSample], methods: Sequence[str], delta: float = DEFAULT_DELTA,
                  timing: bool = True) -> BenchmarkRun:
    """Fit every method on every cluster, serially.

    A cluster on which any method raises is dropped for all methods, so the
    per-method statistics always cover the same clusters. When timing, each
    method first gets WARMUP_FITS discarded fits and then every fit is timed.
    """
    unique = list(dict.fromkeys(str(Criterion(m).value) for m in methods))
    fitters = {m: _fitter(m, delta) for m in unique}
    signed = {m: [] for m in unique}
    runtimes = {m: [] for m in unique}
    kept: list[ClusterSample] = []
    warm = not timing
    skipped = 0
    for s in samples:
        if not warm:
            try:
                for m in unique:
                    time_fit(s.cluster, m, delta, WARMUP_FITS)
                warm = True
            except HullposeError:
                pass
        row, times = {}, {}
        try:
            for m in unique:
                t0 = time.perf_counter()
                fit = fitters[m](s.cluster)
                times[m] = (time.perf_counter() - t0) * 1e3
                row[m] = signed_orientation_error(fit.theta_star, s.gt_yaw_canonical)
        except HullposeError:
            skipped += 1
            continue
        kept.append(s)
        for m in unique:
            signed[m].append(row[m])
            runtimes[m].append(times[m])
    return BenchmarkRun([str(Criterion(m).value) for m in methods], kept, signed, runtimes, skipped)


def make_report(run: BenchmarkRun, timing: bool = True, config: Optional[dict] = None) -> BenchmarkReport:
    """Summarise a run; repeated method names yield repeated (identical) entries."""
    if not run.samples:
        raise EmptyInput("no cluster survived fitting")
    return BenchmarkReport(tuple(build_method_report(m, run.signed[m], run.runtimes[m] if timing else None)
                                 for m in run.methods),
                           dict(config or {}))


def _num(x: float) -> str:
    return repr(float(x))


def emit_report(report: BenchmarkReport, fmt: str = "csv") -> str:
    """Serialise a report. Output depends only on the report's contents."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    for k, v in sorted(CONVENTIONS.items()):
        buf.write(f"# {k}: {v}\n")
    for k, v in sorted(report.config.items()):
        buf.write(f"# config.{k}: {json.dumps(v, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "metric", "mean", "std", "count"])
    for m in report.methods:
        for metric in METRICS:
            st = m.stats(metric)
            if st is None:
                w.writerow([m.method, metric, "", "", 0])
            else:
                w.writerow([m.method, metric, _num(st.mean), _num(st.std), st.count])
    buf.write("\n")
    w.writerow(["method", "bin_lo_deg", "bin_hi_deg", "count"])
    for m in report.methods:
        for lo, hi, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], m.histogram):
            w.writerow([m.method, lo, hi, c])
    return buf.getvalue()


def write_report(report: BenchmarkReport, path, fmt: str = "csv") -> None:
    text = emit_report(report, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _stats_dict(metric: str, st: Optional[ErrorStats]) -> dict:
    if st is None:
        return {"metric": metric, "mean": None, "std": None, "count": 0}
    return {"metric": metric, "mean": st.mean, "std": st.std, "count": st.count}


def report_to_dict(report: BenchmarkReport) -> dict:
    return {
        "conventions": dict(CONVENTIONS),
        "config": report.config,
        "methods": [
            {"method": m.method,
             "metrics": [_stats_dict(metric, m.stats(metric)) for metric in METRICS],
             "histogram": [{"bin_lo_deg": lo, "bin_hi_deg": hi, "count": c}
                           for lo, hi, c in zip(HIST_EDGES[:-1], HIST_EDGES[1:], m.histogram)]}
            for m in report.methods
        ],
    }


def parse_report_json(text: str) -> BenchmarkReport:
    data = json.loads(text)
    methods = []
    for entry in data["methods"]:
        by_metric = {}
        for row in entry["metrics"]:
            by_metric[row["metric"]] = (None if row["count"] == 0
                                        else ErrorStats(row["mean"], row["std"], row["count"]))
        hist = tuple(b["count"] for b in entry["histogram"])
        methods.append(MethodReport(entry["method"], by_metric["signed_error_deg"],
                                    by_metric["abs_error_deg"], by_metric["runtime_ms"], hist))
    return BenchmarkReport(tuple(methods), data.get("config", {}))
