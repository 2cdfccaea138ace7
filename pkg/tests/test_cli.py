import json
import subprocess
import sys
from pathlib import Path

import pytest

from clbench.cli import main


def summary(out):
    return json.loads((out / "summary.json").read_text())


@pytest.fixture
def cfg_file(tmp_path):
    f = tmp_path / "quick.yaml"
    f.write_text("base: {warmup: 0.2}\nrun: {scenario: s1, v_des: 1.0}\n")
    return f


def test_run_writes_files_and_summary(tmp_path, cfg_file, capsys):
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_file), "--seed", "3", "--out", str(out)]) == 0
    s = summary(out)
    assert s["status"] == "ok" and s["command"] == "run"
    assert s["result"]["seed"] == 3
    assert s["config"]["warmup"] == 0.2
    for kind in ("desired", "actual", "estimated", "svg"):
        assert Path(s["files"][kind]).exists()
    assert "tracking RMSE" in capsys.readouterr().out


def test_run_open_loop_flag(tmp_path, cfg_file):
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_file), "--loop-mode", "open", "--estimator", "vins-like",
                 "--out", str(out)]) == 0
    s = summary(out)
    assert s["result"]["loop_mode"] == "open"
    assert s["result"]["tracking"]["rmse_trans"] < 0.05


def test_error_exit_still_writes_summary(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--scenario", "nowhere", "--out", str(out)]) == 1
    s = summary(out)
    assert s["status"] == "error" and "ConfigError" in s["error"]


def test_bad_config_exit(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("bogus: 1\n")
    out = tmp_path / "o"
    assert main(["suite", "--config", str(f), "--out", str(out)]) == 1
    assert summary(out)["status"] == "error"


def test_argparse_errors_exit_nonzero(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["run", "--loop-mode", "sideways"])
    assert e.value.code != 0
    with pytest.raises(SystemExit) as e:
        main(["run", "--seed", str(2 ** 64)])
    assert e.value.code != 0


def test_suite_tables(tmp_path, cfg_file, capsys):
    out = tmp_path / "o"
    assert main(["suite", "--config", str(cfg_file), "--scenarios", "s1,s2", "--speeds", "1.0",
                 "--estimators", "svo-like,gf-like", "--imus", "mpu6000", "--repeats", "2", "--out", str(out)]) == 0
    s = summary(out)
    assert s["n_runs"] == 8 and s["n_errors"] == 0
    assert (out / "table_mpu6000.csv").read_text().splitlines()[0] == "scenario,svo-like@1,gf-like@1"
    assert "Avg. Latency" in capsys.readouterr().out


def test_sweep(tmp_path, cfg_file):
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg_file), "--axis", "latency", "--values", "0.01,0.1",
                 "--repeats", "2", "--out", str(out)]) == 0
    s = summary(out)
    assert s["sweep"]["values"] == [0.01, 0.1] and len(s["sweep"]["seeds"]) == 2
    assert (out / "sweep.csv").exists()


def test_sweep_rejects_unsorted(tmp_path, cfg_file):
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg_file), "--values", "0.1,0.01", "--repeats", "1",
                 "--out", str(out)]) == 1


def test_eval_and_plot(tmp_path, cfg_file):
    out = tmp_path / "o"
    main(["run", "--config", str(cfg_file), "--out", str(out)])
    files = summary(out)["files"]
    ev = tmp_path / "ev"
    assert main(["eval", "--desired", files["desired"], "--actual", files["actual"], "--estimated",
                 files["estimated"], "--out", str(ev)]) == 0
    res = summary(ev)["result"]
    run_res = summary(out)["result"]
    assert res["tracking"]["rmse_trans"] == pytest.approx(run_res["tracking"]["rmse_trans"], abs=1e-8)
    assert "ate" in res
    pl = tmp_path / "pl"
    assert main(["plot", "--desired", files["desired"], files["actual"], files["estimated"], "--out", str(pl)]) == 0
    assert (pl / "plot.svg").read_text().count('class="run"') == 2


def test_eval_needs_input(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("0 0 0 0\n1 1 0 0\n")
    assert main(["eval", "--actual", str(f), "--out", str(tmp_path / "o")]) == 1


def test_list(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["list", "--out", str(out)]) == 0
    s = summary(out)
    assert s["scenarios"] == ["l1", "l2", "line50", "m1", "m2", "s1", "s2"]
    assert "python" in s["backends"]
    assert "svo-like" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "clbench", "list", "imus", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "adis16448" in r.stdout
