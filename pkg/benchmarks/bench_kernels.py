"""Compiled vs pure-Python simulation kernels: wall time and bit-for-bit agreement.

    python3 benchmarks/bench_kernels.py [--scenarios s1,m1] [--repeat 3]
"""
import argparse
import json
import time

import numpy as np

from clbench import kernels
from clbench.harness import RunConfig, _reference, build_inputs


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(scenario, v_des, repeat):
    cfg = RunConfig(scenario=scenario, v_des=v_des, estimator="vins-like", imu="mpu6000", seed=1)
    row = {"scenario": scenario, "v_des": v_des}
    refs = {}
    for name in kernels.available():
        _reference.cache_clear()
        t, (traj, g0, ref) = _time(lambda: _reference(cfg.scenario, cfg.v_des, cfg.traj_limits, cfg.flat_gains,
                                                      cfg.vehicle, cfg.control_rate, cfg.ref_substeps,
                                                      cfg.ref_tail, name), 1)
        inp = build_inputs(cfg, ref, g0)
        k = kernels.get(name)
        ts, (log, _, _) = _time(lambda: k.simulate(inp.params, inp.iparams, inp.ref, inp.err, inp.cap,
                                                   inp.avail, inp.dz, inp.fn), repeat)
        row[name] = {"reference_s": round(t, 4), "simulate_s": round(ts, 4), "ticks": int(inp.iparams[0])}
        refs[name] = (ref.as_array(), np.asarray(log))
    if len(refs) == 2:
        (ra, la), (rb, lb) = refs["compiled"], refs["python"]
        row["identical"] = bool(np.array_equal(ra, rb) and np.array_equal(la, lb))
        row["speedup"] = round(row["python"]["simulate_s"] / row["compiled"]["simulate_s"], 1)
    return row


def main():
    ap = argparse.ArgumentParser(description="kernel backend benchmark")
    ap.add_argument("--scenarios", default="s1,m1")
    ap.add_argument("--speed", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()
    if "compiled" not in kernels.available():
        print("compiled backend not built; only timing the Python kernels")
    rows = [bench(s, args.speed, args.repeat) for s in args.scenarios.split(",")]
    for r in rows:
        parts = [f"{r['scenario']} @ {r['v_des']:g} m/s"]
        for name in kernels.available():
            parts.append(f"{name}: ref {r[name]['reference_s']:.3f}s sim {r[name]['simulate_s']:.3f}s")
        if "speedup" in r:
            parts.append(f"speedup x{r['speedup']}  identical={r['identical']}")
        print("  ".join(parts))
    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2)


if __name__ == "__main__":
    main()
