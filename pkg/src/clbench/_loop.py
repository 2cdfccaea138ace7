"""Pure-Python simulation kernels.

These are the reference implementations of the two hot loops: integrating
the virtual flat system into a reference trajectory, and the closed-loop
run itself.  ``_core.pyx`` is a line-by-line typed transcription; both must
perform the same floating point operations in the same order so that the
two backends agree bit for bit.

Everything here works on plain floats and flat numpy arrays, never on the
``Pose2`` objects, which keeps the per-tick overhead predictable.
"""
import math

import numpy as np

from .se2 import twist_xy, wrap_angle

# columns of the per-control-tick log written by ``simulate``
LOG_COLUMNS = ("t", "x", "y", "theta", "est_x", "est_y", "est_theta", "cmd_nu", "cmd_omega", "nu", "omega")
# slots of the integer counter array
N_SATURATED, N_APPLIED, N_DROPPED, N_STALE, DIVERGED = range(5)

DIVERGE_RADIUS = 1.0e4


def flat_accel(x, y, th, nu, om, lam, lam_dot, dx, dy, vx, vy, ax, ay, cp, cd, cl):
    """Scalar evaluation of the offset-point tracking law.

    ``(ax, ay)`` is the feedforward acceleration of the target; pass zeros
    for the law without feedforward.
    """
    c = math.cos(th)
    s = math.sin(th)
    ex = dx - x - lam * c
    ey = dy - y - lam * s
    bx = c * ex + s * ey
    by = (-s * ex + c * ey) / lam
    wx = c * vx + s * vy
    wy = (-s * vx + c * vy) / lam
    fx = c * ax + s * ay
    fy = (-s * ax + c * ay) / lam
    u1 = cp * bx + cd * (wx - nu) - cd * lam_dot + lam * om * om + cl * lam_dot + fx
    u2 = cp * by + cd * (wy - om) - (om * nu / lam + lam_dot * om / lam) - lam_dot * om / lam + fy
    return u1, u2


def _clamp(v, lim):
    if v > lim:
        return lim
    if v < -lim:
        return -lim
    return v


def integrate_reference(d, dv, da, g0, gains, limits, h, stride):
    """Integrate the virtual robot driven by the flat law.

    ``d, dv, da`` hold the target and its derivatives at ``t = i*h``.
    Returns ``(samples, status)`` where ``samples`` has one row
    ``(x, y, theta, nu, omega)`` every ``stride`` steps and ``status`` is the
    step index at which the divergence watchdog fired, or -1.
    """
    cp, cd, cl, eps, lam0 = gains[0], gains[1], gains[2], gains[3], gains[4]
    vmax, wmax, amax, alpha = limits[0], limits[1], limits[2], limits[3]
    n = d.shape[0] - 1
    out = np.empty((n // stride + 1, 5))
    x, y, th = float(g0[0]), float(g0[1]), float(g0[2])
    nu = om = 0.0
    lam = lam0
    decay = math.exp(-cl * h)
    ex0 = d[0, 0] - x
    ey0 = d[0, 1] - y
    e0 = math.sqrt(ex0 * ex0 + ey0 * ey0)
    bound = 10.0 * max(e0, 0.1)
    over = 0.0
    row = 0
    for i in range(n):
        if i % stride == 0:
            out[row, 0] = x
            out[row, 1] = y
            out[row, 2] = th
            out[row, 3] = nu
            out[row, 4] = om
            row += 1
        lam_dot = -cl * (lam - eps)
        u1, u2 = flat_accel(x, y, th, nu, om, lam, lam_dot,
                            d[i, 0], d[i, 1], dv[i, 0], dv[i, 1], da[i, 0], da[i, 1], cp, cd, cl)
        nu = _clamp(nu + _clamp(u1, amax) * h, vmax)
        om = _clamp(om + _clamp(u2, alpha) * h, wmax)
        ix, iy, ith = twist_xy(nu, 0.0, om, h)
        c = math.cos(th)
        s = math.sin(th)
        x = x + c * ix - s * iy
        y = y + s * ix + c * iy
        th = wrap_angle(th + ith)
        lam = eps + (lam - eps) * decay
        ex0 = d[i + 1, 0] - x
        ey0 = d[i + 1, 1] - y
        err = math.sqrt(ex0 * ex0 + ey0 * ey0)
        if err > bound:
            over += h
            if over > 2.0:
                return out[:row], i
        else:
            over = 0.0
    if n % stride == 0:
        out[row, 0] = x
        out[row, 1] = y
        out[row, 2] = th
        out[row, 3] = nu
        out[row, 4] = om
        row += 1
    return out[:row], -1


def _err_step(st, th_t, nu, om, ea, eay, eg, h, full):
    """Advance the estimator error state over one truth interval.

    ``st`` is ``[dx, dy, dth, dvx, dvy]``: world position error, heading
    error and body velocity error of the estimate.  The estimate mechanizes
    the biased readings exactly as a strapdown integrator would; only the
    bookkeeping is relative to the truth.  ``full=False`` marks the partial
    interval after a capture, where the velocity was already reset.
    """
    g = om + eg
    dvx = st[3]
    dvy = st[4]
    if full:
        dvx = dvx + (ea + g * dvy) * h
        dvy = dvy + (eay - om * dvx - eg * (nu + dvx)) * h
    ex, ey, eth = twist_xy(nu + dvx, dvy, g, h)
    tx, ty, tth = twist_xy(nu, 0.0, om, h)
    the = th_t + st[2]
    ce = math.cos(the)
    se = math.sin(the)
    ct = math.cos(th_t)
    stt = math.sin(th_t)
    st[0] = st[0] + ((ce * ex - se * ey) - (ct * tx - stt * ty))
    st[1] = st[1] + ((se * ex + ce * ey) - (stt * tx + ct * ty))
    st[2] = st[2] + (eth - tth)
    st[3] = dvx
    st[4] = dvy


def simulate(params, iparams, ref, err, cap, avail, dz, fn):
    """Run one closed-loop (or open-loop) simulation on the IMU tick grid.

    Per tick the order is: vehicle step, estimator propagation, camera
    captures inside the tick, delayed corrections that became available,
    estimator output, control.  See ``harness.run_case`` for how the inputs
    are assembled.
    """
    T = params[0]
    kx, ky, kth = params[1], params[2], params[3]
    vmax, wmax, amax, alpha = params[4], params[5], params[6], params[7]
    x, y, th = params[8], params[9], params[10]
    n_ticks, warm, ctrl_div, out_div, open_loop, buf_ticks = (
        int(iparams[0]), int(iparams[1]), int(iparams[2]), int(iparams[3]), int(iparams[4]), int(iparams[5]))
    n_ref = ref.shape[0]
    m_fix = cap.shape[0]

    pth = np.empty(n_ticks + 1)
    tnu = np.empty(n_ticks)
    tom = np.empty(n_ticks)
    pth[0] = th
    log = np.zeros((n_ticks // ctrl_div + 1, len(LOG_COLUMNS)))
    counters = np.zeros(5, dtype=np.int64)
    applied = np.zeros(m_fix, dtype=np.int8)
    # error state at capture, interval index and remaining partial time
    fix_err = np.zeros((m_fix, 3))
    fix_k = np.zeros(m_fix, dtype=np.int64)
    fix_tau = np.zeros(m_fix)
    fix_th = np.zeros(m_fix)

    st = [0.0, 0.0, 0.0, 0.0, 0.0]
    nu = om = 0.0
    odo = 0.0
    odo_fix = 0.0
    Dx = Dy = Dth = 0.0
    ox, oy, oth = x, y, th
    cnu = com = 0.0
    j = 0
    q = 0

    log[0, 0] = 0.0
    log[0, 1] = x
    log[0, 2] = y
    log[0, 3] = th
    log[0, 4] = ox
    log[0, 5] = oy
    log[0, 6] = oth
    n_log = 1

    for k in range(n_ticks):
        t1 = (k + 1) * T
        # vehicle: rate limit, clamp, exact twist
        sat = 0
        lim = amax * T
        dv = cnu - nu
        if dv > lim:
            nu = nu + lim
            sat = 1
        elif dv < -lim:
            nu = nu - lim
            sat = 1
        else:
            nu = cnu
        lim = alpha * T
        dw = com - om
        if dw > lim:
            om = om + lim
            sat = 1
        elif dw < -lim:
            om = om - lim
            sat = 1
        else:
            om = com
        if nu > vmax:
            nu = vmax
            sat = 1
        elif nu < -vmax:
            nu = -vmax
            sat = 1
        if om > wmax:
            om = wmax
            sat = 1
        elif om < -wmax:
            om = -wmax
            sat = 1
        counters[N_SATURATED] += sat
        tnu[k] = nu
        tom[k] = om
        ix, iy, ith = twist_xy(nu, 0.0, om, T)
        c = math.cos(th)
        s = math.sin(th)
        th0 = th
        x0 = x
        y0 = y
        x = x0 + c * ix - s * iy
        y = y0 + s * ix + c * iy
        th = wrap_angle(th0 + ith)
        pth[k + 1] = th
        odo0 = odo
        odo = odo + abs(nu) * T
        if not (abs(x) < DIVERGE_RADIUS and abs(y) < DIVERGE_RADIUS):
            counters[DIVERGED] = 1
            break

        # estimator dead reckoning over this tick
        _err_step(st, th0, nu, om, err[k, 0], err[k, 1], err[k, 2], T, True)

        # camera captures inside (t_k, t_k+1]
        while j < m_fix and cap[j] <= t1:
            tau = cap[j] - k * T
            cx, cy, cth = twist_xy(nu, 0.0, om, tau)
            tcx = x0 + c * cx - s * cy
            tcy = y0 + s * cx + c * cy
            tct = wrap_angle(th0 + cth)
            oc = odo0 + abs(nu) * tau
            sq = math.sqrt(max(oc - odo_fix, 0.0))
            odo_fix = oc
            # drift increment, expressed at the current truth pose
            ddx = dz[j, 0] * sq
            ddy = dz[j, 1] * sq
            ddt = dz[j, 2] * sq
            cc = math.cos(tct)
            ss = math.sin(tct)
            # conj = Tc * delta * Tc^-1
            wx = cc * ddx - ss * ddy
            wy = ss * ddx + cc * ddy
            cd_ = math.cos(ddt)
            sd_ = math.sin(ddt)
            kx_ = tcx - (cd_ * tcx - sd_ * tcy)
            ky_ = tcy - (sd_ * tcx + cd_ * tcy)
            conj_x = wx + kx_
            conj_y = wy + ky_
            cD = math.cos(Dth)
            sD = math.sin(Dth)
            Dx, Dy, Dth = Dx + cD * conj_x - sD * conj_y, Dy + sD * conj_x + cD * conj_y, wrap_angle(Dth + ddt)
            # measurement = D * Tc * noise
            mx = tcx + cc * fn[j, 0] - ss * fn[j, 1]
            my = tcy + ss * fn[j, 0] + cc * fn[j, 1]
            mt = wrap_angle(tct + fn[j, 2])
            cD = math.cos(Dth)
            sD = math.sin(Dth)
            fix_err[j, 0] = (Dx + cD * mx - sD * my) - tcx
            fix_err[j, 1] = (Dy + sD * mx + cD * my) - tcy
            fix_err[j, 2] = wrap_angle(wrap_angle(Dth + mt) - tct)
            fix_k[j] = k
            fix_tau[j] = t1 - cap[j]
            fix_th[j] = tct
            j += 1

        # newest fix whose result is available by now
        f = -1
        for i in range(q, j):
            if avail[i] <= t1:
                f = i
        if f >= 0:
            for i in range(q, f):
                if avail[i] > t1:
                    counters[N_DROPPED] += 1
            q = f + 1
            m = fix_k[f]
            if k - m >= buf_ticks:
                counters[N_STALE] += 1
            else:
                counters[N_APPLIED] += 1
                applied[f] = 1
                st[0] = fix_err[f, 0]
                st[1] = fix_err[f, 1]
                st[2] = fix_err[f, 2]
                st[3] = 0.0
                st[4] = 0.0
                _err_step(st, fix_th[f], tnu[m], tom[m], err[m, 0], err[m, 1], err[m, 2], fix_tau[f], False)
                for i in range(m + 1, k + 1):
                    _err_step(st, pth[i], tnu[i], tom[i], err[i, 0], err[i, 1], err[i, 2], T, True)

        if (k + 1) % out_div == 0:
            ox = x + st[0]
            oy = y + st[1]
            oth = wrap_angle(th + st[2])

        if (k + 1) % ctrl_div == 0:
            if open_loop:
                gx, gy, gth = x, y, th
            else:
                gx, gy, gth = ox, oy, oth
            r = (k + 1 - warm) // ctrl_div
            if k + 1 < warm:
                cnu = com = 0.0
            else:
                if r > n_ref - 1:
                    r = n_ref - 1
                # relative pose error inv(g) * g_ref
                c = math.cos(gth)
                s = math.sin(gth)
                ddx = ref[r, 0] - gx
                ddy = ref[r, 1] - gy
                xt = c * ddx + s * ddy
                yt = -s * ddx + c * ddy
                tt = wrap_angle(ref[r, 2] - gth)
                cnu = _clamp(kx * xt + ref[r, 3], vmax)
                com = _clamp(kth * tt + ky * yt + ref[r, 4], wmax)
            log[n_log, 0] = t1
            log[n_log, 1] = x
            log[n_log, 2] = y
            log[n_log, 3] = th
            log[n_log, 4] = ox
            log[n_log, 5] = oy
            log[n_log, 6] = oth
            log[n_log, 7] = cnu
            log[n_log, 8] = com
            log[n_log, 9] = nu
            log[n_log, 10] = om
            n_log += 1

    return log[:n_log], counters, applied
