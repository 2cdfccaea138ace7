import pytest

from clbench.config import from_dict, load_config, run_config_from_dict
from clbench.errors import ConfigError
from clbench.harness import RunConfig


def test_empty_config_gives_defaults():
    cfg = from_dict({})
    assert cfg.base == RunConfig()
    assert cfg.repeats == 5
    assert len(cfg.scenarios) == 6 and len(cfg.estimators) == 5


def test_example_document(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("""
seed: 7
repeats: 3
loop_mode: open
base:
  warmup: 2.0
  flat_gains: {epsilon: 0.02}
  rates: {control: 25, camera: 15}
run: {scenario: m1, v_des: 0.5, estimator: orb-like, imu: mpu6000}
suite:
  scenarios: [s1, m1]
  speeds: [1]
  estimators: [svo-like, {preset: gf-like, latency: 0.1, name: gf-slow}]
sweep: {axis: drift_rate_trans, values: [0.0, 0.01]}
""")
    cfg = load_config(f)
    b = cfg.base
    assert (b.seed, b.loop_mode, b.warmup, b.scenario, b.v_des) == (7, "open", 2.0, "m1", 0.5)
    assert b.flat_gains.epsilon == 0.02 and b.flat_gains.c_p == 2.0
    assert b.control_rate == 25.0 and b.camera.rate == 15.0
    assert (b.estimator.name, b.imu.name) == ("orb-like", "mpu6000")
    assert cfg.repeats == 3 and cfg.speeds == (1.0,)
    assert cfg.sweep_axis == "drift_rate_trans" and cfg.sweep_values == (0.0, 0.01)
    r = cfg.resolved()
    assert r["suite"]["estimators"][1]["name"] == "gf-slow"
    assert r["suite"]["estimators"][1]["latency"] == 0.1
    assert r["run"]["flat_gains"]["lambda0"] == 0.03
    assert r["source"] == str(f)


def test_imu_rate_override():
    cfg = run_config_from_dict({"rates": {"imu": 400}})
    assert cfg.imu.rate == 400.0


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"base": {"nope": 1}},
    {"base": {"flat_gains": {"zeta": 1.0}}},
    {"base": {"rates": {"gps": 10}}},
    {"run": {"estimator": "unknown-like"}},
    {"run": {"imu": "unknown-imu"}},
    {"seed": -1},
    {"seed": "abc"},
    {"repeats": 0},
    {"loop_mode": "half"},
    {"suite": {"speeds": []}},
    {"suite": {"colors": [1]}},
    {"suite": {"estimators": ["nope"]}},
    {"sweep": {"axis": "speed"}},
    {"sweep": {"values": [1], "extra": 2}},
    {"base": {"vehicle": {"v_max": -1.0}}},
])
def test_bad_documents(doc):
    with pytest.raises(ConfigError):
        from_dict(doc)


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    f = tmp_path / "bad.yaml"
    f.write_text("seed: [1\n")
    with pytest.raises(ConfigError):
        load_config(f)
    f.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(f)
    f.write_text("")
    assert load_config(f).base == RunConfig()
