"""Coarse grid search for the default controller gains.

Scores each gain set by the mean closed-loop tracking RMSE (gf-like
estimator, a few seeds) over the chosen scenarios at the three table
speeds.  With ``--loop-mode open`` the score is the controller-only error,
which mostly reflects epsilon.  DEFAULT_FLAT / DEFAULT_TRACKING in
clbench.harness come from this search.

    python3 tools/tune_gains.py --scenarios s1,m2 --top 5
"""
import argparse
import itertools
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from clbench.controller import FlatGains, TrackingGains  # noqa: E402
from clbench.errors import BenchError  # noqa: E402
from clbench.harness import DEFAULT_SCENARIOS, DEFAULT_SPEEDS, RunConfig, run_case  # noqa: E402

GRID = {
    "epsilon": [0.01, 0.02, 0.05],
    "lambda0": [0.03, 0.1, 0.3],
    "k_x": [1.0, 1.5, 2.0],
    "k_y": [1.0, 2.0, 4.0],
    "k_theta": [2.0, 3.0, 5.0],
}


def score(flat, track, scenarios, speeds, loop_mode, seeds):
    vals = []
    for s in scenarios:
        for v in speeds:
            for seed in seeds:
                cfg = RunConfig(scenario=s, v_des=v, flat_gains=flat, tracking_gains=track,
                                loop_mode=loop_mode, seed=seed)
                try:
                    vals.append(run_case(cfg).metrics.rmse_trans)
                except BenchError:
                    return float("inf")
    return float(np.mean(vals))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", default=",".join(DEFAULT_SCENARIOS[:2]))
    ap.add_argument("--speeds", default=",".join(str(v) for v in DEFAULT_SPEEDS))
    ap.add_argument("--top", type=int, default=10)
    ap.add_argument("--loop-mode", choices=("open", "closed"), default="closed")
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()
    scenarios = args.scenarios.split(",")
    speeds = [float(v) for v in args.speeds.split(",")]

    results = []
    keys = list(GRID)
    for combo in itertools.product(*GRID.values()):
        p = dict(zip(keys, combo))
        if p["lambda0"] <= p["epsilon"]:
            continue
        flat = replace(FlatGains(), epsilon=p["epsilon"], lambda0=p["lambda0"])
        track = TrackingGains(p["k_x"], p["k_y"], p["k_theta"])
        results.append((score(flat, track, scenarios, speeds, args.loop_mode, range(args.seeds)), p))
    results.sort(key=lambda r: r[0])
    for rmse, p in results[: args.top]:
        print(f"{rmse:.5f}  " + "  ".join(f"{k}={v:g}" for k, v in p.items()))


if __name__ == "__main__":
    main()
