# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels.

Typed transcription of ``clbench._loop``.  Every floating point operation is
written in the same order as the Python version so that both backends give
bit-identical results (build with FP contraction disabled).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, exp, fabs, fmod, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double SERIES_EPS = 1e-4
cdef double DIVERGE_RADIUS = 1.0e4

# number of log columns; keep in sync with _loop.LOG_COLUMNS
N_COLS = 11


cdef inline double wrap_angle(double a) nogil:
    cdef double b
    if -M_PI < a <= M_PI:
        return a
    b = fmod(a + M_PI, TWO_PI)
    if b <= 0.0:
        b += TWO_PI
    return b - M_PI


cdef inline void twist_xy(double vx, double vy, double omega, double dt,
                          double* ox, double* oy, double* oth) nogil:
    cdef double th = omega * dt
    cdef double th2, sa, ca, hs
    if fabs(th) < SERIES_EPS:
        th2 = th * th
        sa = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        ca = th / 2.0 - th * th2 / 24.0
    else:
        sa = sin(th) / th
        hs = sin(0.5 * th)
        ca = 2.0 * hs * hs / th  # 1 - cos without cancellation
    ox[0] = (sa * vx - ca * vy) * dt
    oy[0] = (ca * vx + sa * vy) * dt
    oth[0] = th


cdef inline double clamp(double v, double lim) nogil:
    if v > lim:
        return lim
    if v < -lim:
        return -lim
    return v


cdef inline void flat_accel_c(double x, double y, double th, double nu, double om, double lam,
                              double lam_dot, double dx, double dy, double vx, double vy,
                              double ax, double ay, double cp, double cd, double cl,
                              double* u1, double* u2) nogil:
    cdef double c = cos(th)
    cdef double s = sin(th)
    cdef double ex = dx - x - lam * c
    cdef double ey = dy - y - lam * s
    cdef double bx = c * ex + s * ey
    cdef double by = (-s * ex + c * ey) / lam
    cdef double wx = c * vx + s * vy
    cdef double wy = (-s * vx + c * vy) / lam
    cdef double fx = c * ax + s * ay
    cdef double fy = (-s * ax + c * ay) / lam
    u1[0] = cp * bx + cd * (wx - nu) - cd * lam_dot + lam * om * om + cl * lam_dot + fx
    u2[0] = cp * by + cd * (wy - om) - (om * nu / lam + lam_dot * om / lam) - lam_dot * om / lam + fy


def flat_accel(double x, double y, double th, double nu, double om, double lam, double lam_dot,
               double dx, double dy, double vx, double vy, double ax, double ay,
               double cp, double cd, double cl):
    cdef double u1, u2
    flat_accel_c(x, y, th, nu, om, lam, lam_dot, dx, dy, vx, vy, ax, ay, cp, cd, cl, &u1, &u2)
    return u1, u2


def integrate_reference(const double[:, ::1] d, const double[:, ::1] dv, const double[:, ::1] da,
                        const double[::1] g0, const double[::1] gains, const double[::1] limits,
                        double h, long stride):
    cdef double cp = gains[0], cd = gains[1], cl = gains[2], eps = gains[3], lam0 = gains[4]
    cdef double vmax = limits[0], wmax = limits[1], amax = limits[2], alpha = limits[3]
    cdef Py_ssize_t n = d.shape[0] - 1
    out_arr = np.empty((n // stride + 1, 5))
    cdef double[:, ::1] out = out_arr
    cdef double x = g0[0], y = g0[1], th = g0[2]
    cdef double nu = 0.0, om = 0.0
    cdef double lam = lam0
    cdef double decay = exp(-cl * h)
    cdef double ex0 = d[0, 0] - x
    cdef double ey0 = d[0, 1] - y
    cdef double e0 = sqrt(ex0 * ex0 + ey0 * ey0)
    cdef double bound = 10.0 * (e0 if e0 > 0.1 else 0.1)
    cdef double over = 0.0
    cdef Py_ssize_t row = 0, i
    cdef double lam_dot, u1, u2, ix, iy, ith, c, s, err
    with nogil:
        for i in range(n):
            if i % stride == 0:
                out[row, 0] = x
                out[row, 1] = y
                out[row, 2] = th
                out[row, 3] = nu
                out[row, 4] = om
                row += 1
            lam_dot = -cl * (lam - eps)
            flat_accel_c(x, y, th, nu, om, lam, lam_dot, d[i, 0], d[i, 1], dv[i, 0], dv[i, 1],
                         da[i, 0], da[i, 1], cp, cd, cl, &u1, &u2)
            nu = clamp(nu + clamp(u1, amax) * h, vmax)
            om = clamp(om + clamp(u2, alpha) * h, wmax)
            twist_xy(nu, 0.0, om, h, &ix, &iy, &ith)
            c = cos(th)
            s = sin(th)
            x = x + c * ix - s * iy
            y = y + s * ix + c * iy
            th = wrap_angle(th + ith)
            lam = eps + (lam - eps) * decay
            ex0 = d[i + 1, 0] - x
            ey0 = d[i + 1, 1] - y
            err = sqrt(ex0 * ex0 + ey0 * ey0)
            if err > bound:
                over += h
                if over > 2.0:
                    with gil:
                        return out_arr[:row], i
            else:
                over = 0.0
        if n % stride == 0:
            out[row, 0] = x
            out[row, 1] = y
            out[row, 2] = th
            out[row, 3] = nu
            out[row, 4] = om
            row += 1
    return out_arr[:row], -1


cdef inline void err_step(double* st, double th_t, double nu, double om, double ea, double eay,
                          double eg, double h, bint full) nogil:
    cdef double g = om + eg
    cdef double dvx = st[3]
    cdef double dvy = st[4]
    cdef double ex, ey, eth, tx, ty, tth, the, ce, se, ct, stt
    if full:
        dvx = dvx + (ea + g * dvy) * h
        dvy = dvy + (eay - om * dvx - eg * (nu + dvx)) * h
    twist_xy(nu + dvx, dvy, g, h, &ex, &ey, &eth)
    twist_xy(nu, 0.0, om, h, &tx, &ty, &tth)
    the = th_t + st[2]
    ce = cos(the)
    se = sin(the)
    ct = cos(th_t)
    stt = sin(th_t)
    st[0] = st[0] + ((ce * ex - se * ey) - (ct * tx - stt * ty))
    st[1] = st[1] + ((se * ex + ce * ey) - (stt * tx + ct * ty))
    st[2] = st[2] + (eth - tth)
    st[3] = dvx
    st[4] = dvy


def simulate(const double[::1] params, const long long[::1] iparams, const double[:, ::1] ref,
             const double[:, ::1] err, const double[::1] cap, const double[::1] avail,
             const double[:, ::1] dz, const double[:, ::1] fn):
    cdef double T = params[0]
    cdef double kx = params[1], ky = params[2], kth = params[3]
    cdef double vmax = params[4], wmax = params[5], amax = params[6], alpha = params[7]
    cdef double x = params[8], y = params[9], th = params[10]
    cdef Py_ssize_t n_ticks = iparams[0], warm = iparams[1], ctrl_div = iparams[2]
    cdef Py_ssize_t out_div = iparams[3], buf_ticks = iparams[5]
    cdef bint open_loop = iparams[4] != 0
    cdef Py_ssize_t n_ref = ref.shape[0]
    cdef Py_ssize_t m_fix = cap.shape[0]

    pth_arr = np.empty(n_ticks + 1)
    tnu_arr = np.empty(n_ticks)
    tom_arr = np.empty(n_ticks)
    log_arr = np.zeros((n_ticks // ctrl_div + 1, N_COLS))
    counters_arr = np.zeros(5, dtype=np.int64)
    applied_arr = np.zeros(m_fix, dtype=np.int8)
    fix_err_arr = np.zeros((m_fix, 3))
    fix_k_arr = np.zeros(m_fix, dtype=np.int64)
    fix_tau_arr = np.zeros(m_fix)
    fix_th_arr = np.zeros(m_fix)
    cdef double[::1] pth = pth_arr
    cdef double[::1] tnu = tnu_arr
    cdef double[::1] tom = tom_arr
    cdef double[:, ::1] log = log_arr
    cdef long long[::1] counters = counters_arr
    cdef signed char[::1] applied = applied_arr
    cdef double[:, ::1] fix_err = fix_err_arr
    cdef long long[::1] fix_k = fix_k_arr
    cdef double[::1] fix_tau = fix_tau_arr
    cdef double[::1] fix_th = fix_th_arr

    cdef double st[5]
    st[0] = 0.0
    st[1] = 0.0
    st[2] = 0.0
    st[3] = 0.0
    st[4] = 0.0
    cdef double nu = 0.0, om = 0.0, odo = 0.0, odo_fix = 0.0, odo0
    cdef double Dx = 0.0, Dy = 0.0, Dth = 0.0, nDx, nDy
    cdef double ox = x, oy = y, oth = th
    cdef double cnu = 0.0, com = 0.0
    cdef Py_ssize_t j = 0, q = 0, k, i, f, m, r, n_log
    cdef int sat
    cdef double t1, lim, dv, dw, ix, iy, ith, c, s, th0, x0, y0, tau
    cdef double cx, cy, cth, tcx, tcy, tct, oc, sq, ddx, ddy, ddt, cc, ss, wx, wy
    cdef double cd_, sd_, kx_, ky_, conj_x, conj_y, cD, sD, mx, my, mt
    cdef double gx, gy, gth, xt, yt, tt, rem

    pth[0] = th
    log[0, 0] = 0.0
    log[0, 1] = x
    log[0, 2] = y
    log[0, 3] = th
    log[0, 4] = ox
    log[0, 5] = oy
    log[0, 6] = oth
    n_log = 1

    with nogil:
        for k in range(n_ticks):
            t1 = (k + 1) * T
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
            counters[0] += sat
            tnu[k] = nu
            tom[k] = om
            twist_xy(nu, 0.0, om, T, &ix, &iy, &ith)
            c = cos(th)
            s = sin(th)
            th0 = th
            x0 = x
            y0 = y
            x = x0 + c * ix - s * iy
            y = y0 + s * ix + c * iy
            th = wrap_angle(th0 + ith)
            pth[k + 1] = th
            odo0 = odo
            odo = odo + fabs(nu) * T
            if not (fabs(x) < DIVERGE_RADIUS and fabs(y) < DIVERGE_RADIUS):
                counters[4] = 1
                break

            err_step(st, th0, nu, om, err[k, 0], err[k, 1], err[k, 2], T, True)

            while j < m_fix and cap[j] <= t1:
                tau = cap[j] - k * T
                twist_xy(nu, 0.0, om, tau, &cx, &cy, &cth)
                tcx = x0 + c * cx - s * cy
                tcy = y0 + s * cx + c * cy
                tct = wrap_angle(th0 + cth)
                oc = odo0 + fabs(nu) * tau
                rem = oc - odo_fix
                sq = sqrt(rem if rem > 0.0 else 0.0)
                odo_fix = oc
                ddx = dz[j, 0] * sq
                ddy = dz[j, 1] * sq
                ddt = dz[j, 2] * sq
                cc = cos(tct)
                ss = sin(tct)
                wx = cc * ddx - ss * ddy
                wy = ss * ddx + cc * ddy
                cd_ = cos(ddt)
                sd_ = sin(ddt)
                kx_ = tcx - (cd_ * tcx - sd_ * tcy)
                ky_ = tcy - (sd_ * tcx + cd_ * tcy)
                conj_x = wx + kx_
                conj_y = wy + ky_
                cD = cos(Dth)
                sD = sin(Dth)
                nDx = Dx + cD * conj_x - sD * conj_y
                nDy = Dy + sD * conj_x + cD * conj_y
                Dth = wrap_angle(Dth + ddt)
                Dx = nDx
                Dy = nDy
                mx = tcx + cc * fn[j, 0] - ss * fn[j, 1]
                my = tcy + ss * fn[j, 0] + cc * fn[j, 1]
                mt = wrap_angle(tct + fn[j, 2])
                cD = cos(Dth)
                sD = sin(Dth)
                fix_err[j, 0] = (Dx + cD * mx - sD * my) - tcx
                fix_err[j, 1] = (Dy + sD * mx + cD * my) - tcy
                fix_err[j, 2] = wrap_angle(wrap_angle(Dth + mt) - tct)
                fix_k[j] = k
                fix_tau[j] = t1 - cap[j]
                fix_th[j] = tct
                j += 1

            f = -1
            for i in range(q, j):
                if avail[i] <= t1:
                    f = i
            if f >= 0:
                for i in range(q, f):
                    if avail[i] > t1:
                        counters[2] += 1
                q = f + 1
                m = fix_k[f]
                if k - m >= buf_ticks:
                    counters[3] += 1
                else:
                    counters[1] += 1
                    applied[f] = 1
                    st[0] = fix_err[f, 0]
                    st[1] = fix_err[f, 1]
                    st[2] = fix_err[f, 2]
                    st[3] = 0.0
                    st[4] = 0.0
                    err_step(st, fix_th[f], tnu[m], tom[m], err[m, 0], err[m, 1], err[m, 2], fix_tau[f], False)
                    for i in range(m + 1, k + 1):
                        err_step(st, pth[i], tnu[i], tom[i], err[i, 0], err[i, 1], err[i, 2], T, True)

            if (k + 1) % out_div == 0:
                ox = x + st[0]
                oy = y + st[1]
                oth = wrap_angle(th + st[2])

            if (k + 1) % ctrl_div == 0:
                if open_loop:
                    gx = x
                    gy = y
                    gth = th
                else:
                    gx = ox
                    gy = oy
                    gth = oth
                if k + 1 < warm:
                    cnu = 0.0
                    com = 0.0
                else:
                    r = (k + 1 - warm) // ctrl_div
                    if r > n_ref - 1:
                        r = n_ref - 1
                    c = cos(gth)
                    s = sin(gth)
                    ddx = ref[r, 0] - gx
                    ddy = ref[r, 1] - gy
                    xt = c * ddx + s * ddy
                    yt = -s * ddx + c * ddy
                    tt = wrap_angle(ref[r, 2] - gth)
                    cnu = clamp(kx * xt + ref[r, 3], vmax)
                    com = clamp(kth * tt + ky * yt + ref[r, 4], wmax)
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

    return log_arr[:n_log], counters_arr, applied_arr
