"""Per-fit latency of each criterion on simulated multi-beam clusters.

Fits are timed with the warm-up protocol of `hullpose.evaluation.time_fit`.
Clusters come from a KITTI root when one is given.

    python scripts/fit_timing.py --clusters 500
    python scripts/fit_timing.py --kitti-root /data/kitti --clusters 1000
"""
import argparse
import math
from pathlib import Path

import numpy as np

from hullpose.baselines import Criterion
from hullpose.evaluation import time_fit
from hullpose.kitti import list_frames, load_frame
from hullpose.synth import dense_scan, random_two_sided_spec


def kitti_clusters(root, limit):
    out = []
    for fid in list_frames(root):
        got, _ = load_frame(root, fid, ("Car",), 5)
        out.extend(s.cluster for s in got)
        if len(out) >= limit:
            break
    return out[:limit]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--clusters", type=int, default=300)
    ap.add_argument("--kitti-root", type=Path, default=None)
    ap.add_argument("--delta-deg", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if args.kitti_root:
        clusters = kitti_clusters(args.kitti_root, args.clusters)
    else:
        rng = np.random.default_rng(args.seed)
        clusters = [dense_scan(random_two_sided_spec(rng, (5.0, 50.0)), seed=i).cluster
                    for i in range(args.clusters)]
    sizes = np.array([len(c) for c in clusters])
    print(f"{len(clusters)} clusters, points: median {int(np.median(sizes))}, mean {sizes.mean():.0f}, "
          f"max {sizes.max()}")
    delta = math.radians(args.delta_deg)
    print(f"{'method':<15}{'mean ms':>10}{'median ms':>11}{'p95 ms':>9}")
    for c in Criterion:
        t = np.array([time_fit(cl, c, delta) for cl in clusters])
        print(f"{c.value:<15}{t.mean():>10.4f}{np.median(t):>11.4f}{np.percentile(t, 95):>9.4f}")


if __name__ == "__main__":
    main()
