import csv
import io
import json
import math
import re

import numpy as np
import pytest

from clbench.errors import IoError
from clbench.export import (dumps, export, format_trajectory, read_trajectory, run_stem, svg_overlay, sweep_csv,
                            table_csv, write_run, write_svg, write_trajectory)
from clbench.harness import RunConfig, run_case, run_suite, sweep
from clbench.metrics import TimedPath, tracking_rmse

QUICK = dict(warmup=0.2, scenario="s1", v_des=1.0)


@pytest.fixture(scope="module")
def result():
    return run_case(RunConfig(seed=8, estimator="orb-like", **QUICK))


def test_trajectory_round_trip(result, tmp_path):
    files = write_run(result, tmp_path, "r")
    desired = read_trajectory(files["desired"])
    actual = read_trajectory(files["actual"])
    a = tracking_rmse(result.desired, result.actual)
    b = tracking_rmse(desired, actual)
    assert b.rmse_trans == pytest.approx(a.rmse_trans, abs=1e-9)
    assert len(read_trajectory(files["estimated"])) == len(result.estimated)


def test_trajectory_format():
    p = TimedPath([0.0, 0.02], [1.0, 1.0 / 3.0], [0.0, -2.5], [0.1, math.pi])
    text = format_trajectory(p)
    lines = text.splitlines()
    assert lines[0] == "# t x y theta"
    assert lines[2] == "0.02 0.333333333 -2.5 3.14159265"
    assert text.endswith("\n")


def test_read_trajectory_tolerates_comments_and_commas(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# hi\n\n0, 0, 0, 0\n1 1 0 0.5\n")
    p = read_trajectory(f)
    assert p.x.tolist() == [0.0, 1.0]


@pytest.mark.parametrize("text", ["0 0 0\n1 1 1\n", "0 0 0 0\n", "0 0 0 x\n1 1 1 1\n"])
def test_read_trajectory_rejects(tmp_path, text):
    f = tmp_path / "p.txt"
    f.write_text(text)
    with pytest.raises(IoError):
        read_trajectory(f)


def test_missing_file_and_unwritable_path(tmp_path):
    with pytest.raises(IoError):
        read_trajectory(tmp_path / "nope.txt")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoError):
        write_trajectory(TimedPath([0, 1], [0, 0], [0, 0], [0, 0]), blocker / "sub" / "x.txt")


def test_dumps_is_canonical():
    a = dumps({"b": np.float64(1.5), "a": [np.int64(2), float("nan")], "c": np.bool_(True)})
    assert a == '{\n  "a": [\n    2,\n    null\n  ],\n  "b": 1.5,\n  "c": true\n}\n'
    assert json.loads(a)["a"] == [2, None]


def test_run_stem(result):
    assert run_stem(result.config) == "s1_v1_orb-like_adis16448_s8"


@pytest.fixture(scope="module")
def suite():
    return run_suite(RunConfig(**QUICK), ["s1", "s2"], [1.0], ["svo-like", "gf-like", "vins-like"],
                     ["adis16448"], repeats=2)


def test_table_csv_layout(suite):
    t = suite.tables["adis16448"]
    rows = list(csv.reader(io.StringIO(table_csv(t))))
    assert rows[0] == ["scenario", "svo-like@1", "gf-like@1", "vins-like@1"]
    assert [r[0] for r in rows[1:]] == ["s1", "s2", "Avg. RMS", "Avg. Latency"]
    assert all(len(r) == 4 for r in rows)
    assert all(re.fullmatch(r"\d+\.\d\d|--", c) for r in rows[1:3] for c in r[1:])


def test_table_csv_dash_for_failures(suite):
    t = suite.tables["adis16448"]
    key = ("s1", 1.0, "svo-like")
    c = t.cells[key]
    t.cells[key] = type(c)(tuple(50.0 for _ in c.rmse), tuple(True for _ in c.failed), c.latency_ms)
    try:
        rows = list(csv.reader(io.StringIO(table_csv(t))))
        assert rows[1][1] == "--"
    finally:
        t.cells[key] = c


def test_svg_structure(result):
    runs = [("a", "svo", result.actual), ("b", "svo", result.actual), ("c", "gf", result.estimated)]
    svg = svg_overlay(result.desired, runs, title="x < y")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count('class="desired"') == 1
    assert svg.count('class="run"') == 3
    assert "stroke-dasharray" in svg
    colors = re.findall(r'class="run" fill="none" stroke="(#[0-9a-f]{6})"', svg)
    assert colors[0] == colors[1] != colors[2]
    assert "x &lt; y" in svg


def test_svg_decimates_long_paths(result, tmp_path):
    svg = svg_overlay(result.desired, [("a", "g", result.actual)], max_points=50)
    pts = re.findall(r'class="run"[^>]*points="([^"]*)"', svg)[0].split()
    assert len(pts) <= 52
    assert write_svg(result.desired, [], tmp_path / "d.svg").read_text().count("<polyline") == 1


def test_export_dispatch(result, suite, tmp_path):
    assert json.loads(export(result, "json", tmp_path / "r.json").read_text())["seed"] == 8
    assert export(suite.tables["adis16448"], "csv", tmp_path / "t.csv").exists()
    assert len(export(suite, "csv", tmp_path / "s.csv")) == 1
    assert set(export(result, "traj", tmp_path / "traj")) == {"desired", "actual", "estimated"}
    assert export(result, "svg", tmp_path / "r.svg").read_text().count('class="run"') == 1
    with pytest.raises(ValueError):
        export(result, "xlsx", tmp_path / "r.xlsx")


def test_sweep_csv():
    res = sweep(RunConfig(**QUICK), "latency", [0.0, 0.05], repeats=2)
    rows = list(csv.reader(io.StringIO(sweep_csv(res))))
    assert rows[0][:3] == ["latency", "mean_rmse", "stderr"] and len(rows[0]) == 5
    assert float(rows[2][0]) == 0.05 and float(rows[2][1]) == res.mean[1]
