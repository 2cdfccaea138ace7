import math
from dataclasses import replace

import numpy as np
import pytest
from conftest import assert_pose
from object_loop import object_loop

from clbench.errors import ConfigError, StaleFix
from clbench.estimator import (DriftState, EstimatorConfig, EstimatorMode, EstimatorState, TruthHistory, VisualFix,
                               buffer_span, calibrate, correct, ideal, list_estimators, load_estimator, make_fix,
                               output, output_times, propagate)
from clbench.harness import RunConfig, run_case
from clbench.se2 import BodyVelocity, Pose2, compose, twist_increment
from clbench.sensors import ImuBias, ImuReading
from clbench.vehicle import VehicleLimits, VehicleState, step

T = 0.005
FAST = VehicleLimits(v_max=5.0, omega_max=5.0, a_max=50.0, alpha_max=50.0)


def drive(cmds, g0=Pose2(), dt=T):
    """Vehicle states under a command sequence; limits wide enough to be inactive."""
    s = VehicleState(g0)
    out = [s]
    for k, c in enumerate(cmds):
        s = step(s, c, FAST, dt)
        s = VehicleState(s.pose, s.vel, (k + 1) * dt)
        out.append(s)
    return out


def readings(states, bias=ImuBias()):
    out = []
    for a, b in zip(states, states[1:]):
        dt = b.t - a.t
        out.append(ImuReading(b.t, ((b.vel.nu - a.vel.nu) / dt + bias.accel_x, b.vel.nu * b.vel.omega + bias.accel_y),
                              b.vel.omega + bias.gyro, dt))
    return out


def dead_reckon(st, rs):
    traj = [st]
    for r in rs:
        st = propagate(st, r)
        traj.append(st)
    return traj


def wavy(n):
    return [BodyVelocity(1.0 + 0.3 * math.sin(0.01 * k), 0.5 * math.cos(0.007 * k)) for k in range(n)]


# -- dead reckoning ------------------------------------------------------------------

def test_exact_readings_reproduce_truth():
    states = drive(wavy(2000))  # 10 s
    st = EstimatorState(pose_est=states[0].pose, buffer_span=0.2)
    traj = dead_reckon(st, readings(states))
    worst = max(max(abs(e.pose_est.x - s.pose.x), abs(e.pose_est.y - s.pose.y)) for e, s in zip(traj, states))
    assert worst < 1e-6
    assert traj[-1].vel_xy[1] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("b,t_end,expect", [(0.02, 1.0, 0.01), (0.02, 2.0, 0.04), (0.1, 1.0, 0.05)])
def test_accel_bias_gives_half_b_t_squared(b, t_end, expect):
    n = int(round(t_end / T))
    states = drive([BodyVelocity(0.0, 0.0)] * n)
    traj = dead_reckon(EstimatorState(), readings(states, ImuBias(accel_x=b)))
    err = traj[-1].pose_est.x
    # the explicit integrator lands half a tick later than the continuous value
    assert err == pytest.approx(0.5 * b * t_end * (t_end + T), rel=1e-9)
    assert err == pytest.approx(expect, rel=2 * T / t_end)


def test_gyro_bias_integrates_linearly():
    states = drive([BodyVelocity(0.0, 0.0)] * 200)
    traj = dead_reckon(EstimatorState(), readings(states, ImuBias(gyro=0.01)))
    assert traj[-1].pose_est.theta == pytest.approx(0.01, rel=1e-9)


def test_propagate_rejects_time_going_back():
    st = propagate(EstimatorState(), ImuReading(0.01, (0.0, 0.0), 0.0, T))
    with pytest.raises(ValueError):
        propagate(st, ImuReading(0.005, (0.0, 0.0), 0.0, T))


def test_buffer_is_trimmed_to_span():
    states = drive([BodyVelocity(0.5, 0.0)] * 400)
    st = dead_reckon(EstimatorState(buffer_span=0.1), readings(states))[-1]
    assert 0.1 <= st.t - (st.imu_buffer[0].t - T) <= 0.1 + T + 1e-12


def test_calibrate_is_reading_mean():
    rs = [ImuReading(k * T, (0.1 + k, -0.2), 0.03, T) for k in range(5)]
    b = calibrate(rs)
    assert (b.accel_x, b.accel_y, b.gyro) == pytest.approx((2.1, -0.2, 0.03))


# -- visual fixes --------------------------------------------------------------------

def straight(length=100.0, v=1.0, dt=0.05):
    return TruthHistory.from_states(drive([BodyVelocity(v, 0.0)] * int(round(length / (v * dt))), dt=dt))


def test_fix_without_errors_is_truth():
    truth = TruthHistory.from_states(drive(wavy(400)))
    cfg = ideal(latency=0.05)
    fix, d = make_fix(truth, cfg, DriftState(), np.random.default_rng(0), 1.234)
    assert_pose(fix.pose_meas, truth.at(1.234)[0], 1e-12)
    assert fix.t_available == pytest.approx(1.284)
    assert d.odometer == pytest.approx(truth.distance(1.234))


def test_drift_spread_after_100m():
    # drift_rate 0.01 m/sqrt(m) over 100 m: the random walk ends with std 0.1 m per axis
    truth = straight()
    cfg = EstimatorConfig(drift_rate_trans=0.01, fix_noise_trans=0.0, fix_noise_rot=0.0)
    ends = []
    for seed in range(500):
        rng = np.random.default_rng(seed)
        d = DriftState()
        for t in np.arange(1, 11) * 10.0:
            fix, d = make_fix(truth, cfg, d, rng, float(t))
        ends.append(fix.pose_meas.x - truth.at(100.0)[0].x)
    assert np.std(ends) == pytest.approx(0.1, rel=0.15)
    assert abs(np.mean(ends)) < 4 * 0.1 / math.sqrt(500)


def test_drift_is_zero_when_standing_still():
    truth = TruthHistory.from_states(drive([BodyVelocity(0.0, 0.0)] * 100))
    cfg = EstimatorConfig(drift_rate_trans=1.0, drift_rate_rot=1.0, fix_noise_trans=0.0, fix_noise_rot=0.0)
    fix, d = make_fix(truth, cfg, DriftState(), np.random.default_rng(1), 0.4)
    assert_pose(fix.pose_meas, (0.0, 0.0, 0.0))


def test_drift_increment_is_applied_at_the_robot():
    # pure rotational drift leaves the measured position of the robot untouched
    truth = straight(20.0)
    cfg = EstimatorConfig(drift_rate_rot=0.1, fix_noise_trans=0.0, fix_noise_rot=0.0)
    fix, _ = make_fix(truth, cfg, DriftState(), np.random.default_rng(2), 15.0)
    assert (fix.pose_meas.x, fix.pose_meas.y) == pytest.approx((15.0, 0.0), abs=1e-12)
    assert fix.pose_meas.theta != 0.0


def _setup(latency, n=100):
    states = drive(wavy(n))
    truth = TruthHistory.from_states(states)
    cfg = ideal(latency=latency)
    st = dead_reckon(EstimatorState(pose_est=states[0].pose, buffer_span=buffer_span(cfg, 30.0)),
                     readings(states))[-1]
    return states, truth, cfg, st


def test_fix_is_held_until_available():
    states, truth, cfg, st = _setup(0.05)
    fix, _ = make_fix(truth, cfg, DriftState(), np.random.default_rng(0), 0.44)
    with pytest.raises(ValueError):
        correct(st, fix, fix.t_available - 1e-3)
    correct(st, fix, fix.t_available)


def test_correct_with_exact_fix_keeps_exact_estimate():
    states, truth, cfg, st = _setup(0.03)
    fix, _ = make_fix(truth, cfg, DriftState(), np.random.default_rng(0), 0.4633)
    out = correct(st, fix, 0.5)
    assert_pose(out.pose_est, states[-1].pose, 1e-9)


def test_correct_replays_from_capture():
    # a fix offset by g replays to (offset) * (motion since capture) for a zero-error IMU
    states, truth, cfg, st = _setup(0.06)
    g_c = truth.at(0.41)[0]
    off = Pose2(0.1, -0.2, 0.05)
    fix = VisualFix(0.41, 0.47, compose(off, g_c), truth.at(0.41)[1])
    out = correct(st, fix, 0.5)
    rel = compose(off, states[-1].pose)
    assert_pose(out.pose_est, rel, 1e-9)


def test_correct_then_propagate_equals_late_correct():
    states, truth, cfg, _ = _setup(0.03, n=200)
    rs = readings(states)
    fix = VisualFix(0.5, 0.53, compose(Pose2(0.05, 0.0, 0.01), truth.at(0.5)[0]), truth.at(0.5)[1])
    st0 = EstimatorState(pose_est=states[0].pose, buffer_span=0.5)
    early = dead_reckon(st0, rs[:120])[-1]
    early = dead_reckon(correct(early, fix, 0.6), rs[120:])[-1]
    late = correct(dead_reckon(st0, rs)[-1], fix, 1.0)
    assert_pose(early.pose_est, late.pose_est, 1e-12)


def test_stale_fix_raises():
    states, truth, cfg, st = _setup(0.0, n=400)
    fix, _ = make_fix(truth, cfg, DriftState(), np.random.default_rng(0), 0.5)
    with pytest.raises(StaleFix):
        correct(st, fix, 2.0)


def test_bias_sawtooth_bounded_by_window():
    # with a constant accel bias the error regrows after each fix; just after a
    # correction it is the replay residual 1/2 b L^2, at worst 1/2 b (L + frame)^2
    b, lat, rate = 0.05, 0.06, 30.0
    states = drive([BodyVelocity(0.0, 0.0)] * 400)
    truth = TruthHistory.from_states(states)
    cfg = ideal(latency=lat)
    st = EstimatorState(buffer_span=buffer_span(cfg, rate))
    pending, errs_after, errs_all = [], [], []
    caps = list(np.arange(1, 60) / rate)
    for r in readings(states, ImuBias(accel_x=b)):
        st = propagate(st, r)
        while caps and caps[0] <= r.t:
            pending.append(make_fix(truth, cfg, DriftState(), np.random.default_rng(0), caps.pop(0))[0])
        ready = [f for f in pending if f.t_available <= r.t]
        if ready:
            st = correct(st, ready[-1], r.t)
            pending = [f for f in pending if f.t_available > r.t]
            errs_after.append(st.pose_est.x)
        errs_all.append(st.pose_est.x)
    late = errs_all[100:]
    assert max(late) <= 0.5 * b * (lat + 1 / rate + T) ** 2
    assert np.median(errs_after[5:]) == pytest.approx(0.5 * b * lat * (lat + T), rel=0.2)


# -- output --------------------------------------------------------------------------

def test_output_modes():
    st = EstimatorState(pose_est=Pose2(1.0, 2.0, 0.3))
    truth = Pose2(1.1, 2.0, 0.3)
    assert output(st, ideal(), 0.0, truth) == st.pose_est
    gt = EstimatorConfig(mode="ground_truth")
    assert gt.mode is EstimatorMode.GROUND_TRUTH
    assert output(st, gt, 0.0, truth) == truth
    with pytest.raises(ValueError):
        output(st, gt, 0.0)


@pytest.mark.parametrize("rate,horizon,n", [(200.0, 1.0, 201), (30.0, 1.0, 31), (20.0, 0.99, 20)])
def test_output_times(rate, horizon, n):
    ts = output_times(EstimatorConfig(output_rate=rate), horizon)
    assert len(ts) == n
    assert np.allclose(np.diff(ts), 1 / rate)


# -- presets and validation ----------------------------------------------------------

def test_presets_ordering():
    names = list_estimators()
    assert names == ["svo-like", "msc-like", "gf-like", "orb-like", "vins-like"]
    lat = [load_estimator(n).latency for n in names]
    assert lat == sorted(lat)
    drift = {n: load_estimator(n).drift_rate_trans for n in names}
    assert sorted(drift, key=drift.get) == ["gf-like", "orb-like", "msc-like", "svo-like", "vins-like"]


def test_load_estimator_forms(tmp_path):
    base = load_estimator("orb-like")
    assert load_estimator({"preset": "orb-like", "latency": 0.2}) == replace(base, latency=0.2)
    p = tmp_path / "e.yaml"
    p.write_text("name: mine\nlatency: 0.04\ndrift_rate_trans: 0.001\n")
    e = load_estimator(str(p))
    assert (e.name, e.latency, e.drift_rate_trans) == ("mine", 0.04, 0.001)


@pytest.mark.parametrize("bad", ["nope", {"latency": -1.0}, {"bogus": 1}, {"latency_jitter": 1.0}, 3,
                                 {"output_rate": 0.0}, {"fix_noise_rot": -0.1}])
def test_load_estimator_rejects(bad):
    with pytest.raises(ConfigError):
        load_estimator(bad)


def test_truth_history_bounds():
    truth = straight(2.0)
    with pytest.raises(ValueError):
        truth.at(5.0)
    assert truth.distance(1.0) == pytest.approx(1.0)
    g, v = truth.at(0.0)
    assert (g.x, v.nu) == (0.0, 1.0)


# -- kernels against the object API --------------------------------------------------

@pytest.mark.parametrize("loop_mode", ["closed", "open"])
def test_kernels_match_object_loop(loop_mode):
    cfg = RunConfig(scenario="s1", v_des=1.0, warmup=1.0, loop_mode=loop_mode, imu="mpu6000", seed=3,
                    estimator={"preset": "svo-like", "drift_rate_trans": 0.05})
    ref = object_loop(cfg)
    for backend in ("python", "compiled"):
        log = run_case(cfg, backend).log
        assert log.shape[0] == ref.shape[0]
        assert np.abs(log[:, :7] - ref).max() < 1e-9


def test_ideal_estimator_in_loop_is_exact():
    cfg = RunConfig(scenario="s2", v_des=0.5, warmup=0.2, estimator=ideal(), imu="adis16448",
                    imu_bias=(0.0, 0.0, 0.0))
    cfg = replace(cfg, imu=replace(cfg.imu, accel_noise_density=0.0, gyro_noise_density=0.0,
                                   accel_bias_rw=0.0, gyro_bias_rw=0.0))
    res = run_case(cfg)
    assert res.ate.rmse_trans < 1e-9
    assert np.abs(res.log[:, 1:4] - res.log[:, 4:7]).max() < 1e-9


def test_ground_truth_mode_in_loop():
    est = replace(load_estimator("vins-like"), mode=EstimatorMode.GROUND_TRUTH)
    res = run_case(RunConfig(scenario="s1", warmup=0.2, estimator=est, imu="mpu6000"))
    assert np.abs(res.log[:, 1:4] - res.log[:, 4:7]).max() < 1e-9
