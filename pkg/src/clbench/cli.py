"""Command line entry point: ``clbench {run,suite,sweep,eval,plot,list}``.

Every subcommand writes ``summary.json`` into ``--out`` (also on failure, with
``status: error``) and exits nonzero on any error.  Summaries hold no wall
clock values so that reruns with the same seed are byte-identical.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import kernels
from .config import BenchConfig, from_dict, load_config
from .errors import BenchError
from .estimator import list_estimators, load_estimator
from .export import (read_trajectory, run_stem, sweep_csv, write_json, write_run, write_svg, write_table_csv,
                     write_text)
from .harness import run_case, run_suite, sweep
from .metrics import ate, tracking_rmse
from .sensors import list_imus, load_imu
from .trajectory import list_scenarios

log = logging.getLogger("clbench")


def _csv_list(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def _float_list(s: str) -> list[float]:
    return [float(x) for x in _csv_list(s)]


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _load(args) -> BenchConfig:
    cfg = load_config(args.config) if args.config else from_dict({})
    base = cfg.base
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    if args.loop_mode is not None:
        base = replace(base, loop_mode=args.loop_mode)
    cfg.base = base
    if getattr(args, "repeats", None) is not None:
        if args.repeats < 1:
            raise BenchError("--repeats must be >= 1")
        cfg.repeats = args.repeats
    return cfg


def cmd_run(args, out: Path) -> dict:
    cfg = _load(args)
    base = cfg.base
    if args.scenario:
        base = replace(base, scenario=args.scenario)
    if args.speed is not None:
        base = replace(base, v_des=args.speed)
    if args.estimator:
        base = replace(base, estimator=load_estimator(args.estimator))
    if args.imu:
        base = replace(base, imu=load_imu(args.imu))
    res = run_case(base, args.backend)
    stem = run_stem(base)
    files = write_run(res, out, stem)
    files["svg"] = str(write_svg(res.desired, [(stem, base.estimator.name, res.actual)],
                                 out / f"{stem}.svg", title=stem))
    s = res.summary()
    print(f"{stem}: tracking RMSE {s['tracking']['rmse_trans']:.4f} m, ATE {s['ate']['rmse_trans']:.4f} m"
          f"{'  FAILED' if s['tracking']['failed'] else ''}")
    return {"result": s, "config": base.to_dict(), "files": files}


def cmd_suite(args, out: Path) -> dict:
    cfg = _load(args)
    for k in ("scenarios", "estimators", "imus"):
        v = getattr(args, k)
        if v:
            setattr(cfg, k, tuple(_csv_list(v)))
    if args.speeds:
        cfg.speeds = tuple(_float_list(args.speeds))
    res = run_suite(cfg.base, cfg.scenarios, cfg.speeds, cfg.estimators, cfg.imus, cfg.repeats,
                    workers=args.workers, backend=args.backend)
    files = {}
    for name, table in res.tables.items():
        print(table.render())
        print()
        files[f"table_{name}"] = str(write_table_csv(table, out / f"table_{name}.csv"))
    files["runs"] = str(write_json({"runs": res.runs}, out / "runs.json"))
    n_err = sum("error" in r for r in res.runs)
    return {"tables": {k: t.to_dict() for k, t in res.tables.items()}, "n_runs": len(res.runs),
            "n_errors": n_err, "config": cfg.resolved(), "files": files}


def cmd_sweep(args, out: Path) -> dict:
    cfg = _load(args)
    base = cfg.base
    if args.estimator:
        base = replace(base, estimator=load_estimator(args.estimator))
    if args.scenario:
        base = replace(base, scenario=args.scenario)
    if args.speed is not None:
        base = replace(base, v_des=args.speed)
    axis = args.axis or cfg.sweep_axis
    values = _float_list(args.values) if args.values else list(cfg.sweep_values)
    repeats = args.repeats if args.repeats is not None else 20
    res = sweep(base, axis, values, repeats=repeats, workers=args.workers, backend=args.backend)
    for v, m, se in zip(res.values, res.mean, res.stderr):
        print(f"{axis}={v:g}: RMSE {m:.4f} +- {se:.4f} m")
    files = {"csv": str(write_text(out / "sweep.csv", sweep_csv(res)))}
    cfg.base = base
    return {"sweep": res.to_dict(), "config": cfg.resolved(), "files": files}


def cmd_eval(args, out: Path) -> dict:
    actual = read_trajectory(args.actual)
    result = {}
    if args.desired:
        result["tracking"] = tracking_rmse(read_trajectory(args.desired), actual).to_dict()
        print(f"tracking RMSE {result['tracking']['rmse_trans']:.6f} m")
    if args.estimated:
        result["ate"] = ate(read_trajectory(args.estimated), actual, align=not args.no_align).to_dict()
        print(f"ATE {result['ate']['rmse_trans']:.6f} m")
    if not result:
        raise BenchError("eval needs --desired and/or --estimated")
    return {"result": result, "inputs": {"actual": args.actual, "desired": args.desired,
                                         "estimated": args.estimated, "align": not args.no_align}}


def cmd_plot(args, out: Path) -> dict:
    desired = read_trajectory(args.desired)
    runs = [(Path(p).name, Path(p).name if not args.group else args.group, read_trajectory(p))
            for p in args.runs]
    target = Path(args.svg) if args.svg else out / "plot.svg"
    path = write_svg(desired, runs, target, title=args.title or "")
    print(f"wrote {path}")
    return {"files": {"svg": str(path)}, "n_runs": len(runs)}


def cmd_list(args, out: Path) -> dict:
    d = {"scenarios": list_scenarios(), "estimators": list_estimators(), "imus": list_imus(),
         "backends": kernels.available()}
    what = args.what
    for k, v in d.items():
        if what in (None, k):
            print(f"{k}: {', '.join(v)}")
    if what == "estimators" or args.verbose:
        for e in d["estimators"]:
            print(f"  {e}: {load_estimator(e).to_dict()}")
    if what == "imus" or args.verbose:
        for i in d["imus"]:
            print(f"  {i}: {asdict(load_imu(i))}")
    return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clbench", description="Closed-loop tracking benchmark for "
                                "a differential-drive robot with visual-inertial estimator surrogates.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, repeats=False):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--seed", type=_u64, default=None)
        sp.add_argument("--out", default="results", help="output directory (default: results)")
        sp.add_argument("--loop-mode", choices=("open", "closed"), default=None)
        sp.add_argument("--backend", choices=("python", "compiled"), default=None)
        if repeats:
            sp.add_argument("--repeats", type=int, default=None)
            sp.add_argument("--workers", type=int, default=1, help="parallel processes")

    sp = sub.add_parser("run", help="simulate a single case")
    common(sp)
    sp.add_argument("--scenario")
    sp.add_argument("--speed", type=float)
    sp.add_argument("--estimator", help="preset name or YAML file")
    sp.add_argument("--imu", help="preset name or YAML file")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("suite", help="scenario x speed x estimator x IMU matrix")
    common(sp, repeats=True)
    sp.add_argument("--scenarios", help="comma separated")
    sp.add_argument("--speeds", help="comma separated m/s")
    sp.add_argument("--estimators", help="comma separated")
    sp.add_argument("--imus", help="comma separated")
    sp.set_defaults(func=cmd_suite)

    sp = sub.add_parser("sweep", help="vary one estimator parameter over seeds")
    common(sp, repeats=True)
    sp.add_argument("--axis", choices=("latency", "drift_rate_trans", "drift_rate_rot", "fix_noise_trans"))
    sp.add_argument("--values", help="comma separated, ascending")
    sp.add_argument("--scenario")
    sp.add_argument("--speed", type=float)
    sp.add_argument("--estimator")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("eval", help="metrics on trajectory files")
    sp.add_argument("--actual", required=True)
    sp.add_argument("--desired")
    sp.add_argument("--estimated")
    sp.add_argument("--no-align", action="store_true", help="ATE without rigid alignment")
    sp.add_argument("--out", default="results")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("plot", help="SVG overlay from trajectory files")
    sp.add_argument("--desired", required=True)
    sp.add_argument("runs", nargs="+", help="actual trajectory files")
    sp.add_argument("--group", help="color group for all runs (default: one per file)")
    sp.add_argument("--title")
    sp.add_argument("--svg", help="output file (default: <out>/plot.svg)")
    sp.add_argument("--out", default="results")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("list", help="available scenarios and presets")
    sp.add_argument("what", nargs="?", choices=("scenarios", "estimators", "imus", "backends"))
    sp.add_argument("--out", default="results")
    sp.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    summary = {"command": args.command, "backend": getattr(args, "backend", None) or kernels.BACKEND}
    t0 = time.perf_counter()
    code = 0
    try:
        summary.update(args.func(args, out))
        summary["status"] = "ok"
    except (BenchError, ValueError, OSError) as e:
        log.debug("command failed", exc_info=True)
        summary.update(status="error", error=f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        code = 1
    try:
        write_json(summary, out / "summary.json")
    except BenchError as e:
        print(f"error: {e}", file=sys.stderr)
        code = code or 1
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
