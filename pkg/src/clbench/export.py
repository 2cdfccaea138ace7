"""Writers for result tables, trajectory files and SVG overlays.

All writers are deterministic: the same input object produces the same
bytes, which is what the reproducibility checks compare.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import IoError
from .metrics import TimedPath

TRAJ_HEADER = "# t x y theta"

# one color per estimator preset, in table order; extras cycle
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _clean(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, no NaN, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    return path


def write_json(obj, path) -> Path:
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    return write_text(path, dumps(obj))


# -- trajectories ------------------------------------------------------------------

def format_trajectory(p: TimedPath) -> str:
    lines = [TRAJ_HEADER]
    for row in p.as_array():
        lines.append(" ".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def write_trajectory(p: TimedPath, path) -> Path:
    return write_text(path, format_trajectory(p))


def read_trajectory(path) -> TimedPath:
    """Parse a ``t x y theta`` file; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 4:
            raise IoError(f"{path}:{n}: expected 4 columns, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as e:
            raise IoError(f"{path}:{n}: {e}") from e
    if len(rows) < 2:
        raise IoError(f"{path}: fewer than 2 samples")
    return TimedPath.from_array(np.array(rows))


def write_run(result, out_dir, stem: str | None = None) -> dict:
    """Desired, actual and estimated trajectory files for one RunResult."""
    out_dir = Path(out_dir)
    stem = stem or run_stem(result.config)
    files = {}
    for kind in ("desired", "actual", "estimated"):
        files[kind] = str(write_trajectory(getattr(result, kind), out_dir / f"{stem}.{kind}.txt"))
    return files


def run_stem(cfg) -> str:
    return f"{Path(str(cfg.scenario)).stem}_v{cfg.v_des:g}_{cfg.estimator.name}_{cfg.imu.name}_s{cfg.seed}"


# -- tables ------------------------------------------------------------------------

def table_csv(table) -> str:
    """One row per scenario plus the two summary rows; one column per (speed, estimator)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario"] + [f"{e}@{v:g}" for v, e in table.columns()])
    for row in table.rows():
        w.writerow(row)
    return buf.getvalue()


def write_table_csv(table, path) -> Path:
    return write_text(path, table_csv(table))


def sweep_csv(res) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([res.axis, "mean_rmse", "stderr"] + [f"seed_{s}" for s in res.seeds])
    for v, m, se, row in zip(res.values, res.mean, res.stderr, res.rmse):
        w.writerow([repr(v), repr(m), repr(se)] + [repr(x) for x in row])
    return buf.getvalue()


# -- SVG ---------------------------------------------------------------------------

def _bounds(paths, pad=0.05):
    xs = np.concatenate([p.x for p in paths])
    ys = np.concatenate([p.y for p in paths])
    x0, x1, y0, y1 = float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())
    span = max(x1 - x0, y1 - y0, 1e-6)
    return x0 - pad * span, x1 + pad * span, y0 - pad * span, y1 + pad * span


def _points(p: TimedPath, tf, step: int) -> str:
    idx = np.arange(0, len(p), step)
    if idx[-1] != len(p) - 1:
        idx = np.append(idx, len(p) - 1)
    return " ".join(f"{tf(p.x[i], p.y[i])[0]:.2f},{tf(p.x[i], p.y[i])[1]:.2f}" for i in idx)


def svg_overlay(desired: TimedPath, runs, width: int = 640, title: str = "", max_points: int = 2000) -> str:
    """Desired path dashed, one solid polyline per run.

    ``runs`` is a sequence of ``(label, group, TimedPath)``; runs sharing a
    group (normally the estimator) share a color.
    """
    runs = list(runs)
    x0, x1, y0, y1 = _bounds([desired] + [r[2] for r in runs])
    scale = width / (x1 - x0)
    height = int(math.ceil((y1 - y0) * scale)) + 30
    top = 30

    def tf(x, y):
        return (x - x0) * scale, top + (y1 - y) * scale  # y up

    groups = list(dict.fromkeys(g for _, g, _ in runs))
    color = {g: PALETTE[i % len(PALETTE)] for i, g in enumerate(groups)}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="8" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    step = max(1, len(desired) // max_points)
    out.append(f'<polyline class="desired" fill="none" stroke="black" stroke-width="1.5" '
               f'stroke-dasharray="6,4" points="{_points(desired, tf, step)}"><title>desired</title></polyline>')
    for label, g, p in runs:
        step = max(1, len(p) // max_points)
        out.append(f'<polyline class="run" fill="none" stroke="{color[g]}" stroke-width="1" '
                   f'points="{_points(p, tf, step)}"><title>{escape(str(label))}</title></polyline>')
    # legend
    lx = width - 150
    for i, g in enumerate(groups):
        y = top + 16 * i + 10
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{color[g]}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{y + 4}" font-family="sans-serif" font-size="11">'
                   f'{escape(str(g))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(desired: TimedPath, runs, path, **kw) -> Path:
    return write_text(path, svg_overlay(desired, runs, **kw))


def export(result, fmt: str, path):
    """Write ``result`` (RunResult, ResultTable, SuiteResult or SweepResult) as ``fmt``.

    ``traj`` writes into the directory ``path``; every other format writes one file.
    """
    from .harness import ResultTable, RunResult, SuiteResult, SweepResult

    if fmt == "json":
        if isinstance(result, RunResult):
            return write_json(result.summary(), path)
        return write_json(result, path)
    if fmt == "csv":
        if isinstance(result, ResultTable):
            return write_table_csv(result, path)
        if isinstance(result, SweepResult):
            return write_text(path, sweep_csv(result))
        if isinstance(result, SuiteResult):
            path = Path(path)
            return [write_table_csv(t, path.with_name(f"{path.stem}_{k}{path.suffix}"))
                    for k, t in result.tables.items()]
    if fmt == "traj" and isinstance(result, RunResult):
        return write_run(result, path)
    if fmt == "svg" and isinstance(result, RunResult):
        label = run_stem(result.config)
        return write_svg(result.desired, [(label, result.config.estimator.name, result.actual)], path,
                         title=label)
    raise ValueError(f"cannot export {type(result).__name__} as {fmt!r}")
