"""Numba versions of the hot kernels.  Same signatures as _kernels_numpy."""

from __future__ import annotations

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def _clenshaw(c, t):
    b1 = 0.0
    b2 = 0.0
    for k in range(c.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * t * b1 - b2 + c[k], b1
    return t * b1 - b2 + c[0]


@njit(**_OPTS)
def cheb_eval_scalar(c, lo, hi, x):
    t = (2.0 * x - (lo + hi)) / (hi - lo)
    return _clenshaw(c, t)


@njit(**_OPTS)
def cheb_eval(c, lo, hi, x):
    out = np.empty(x.shape[0], dtype=np.float64)
    for i in range(x.shape[0]):
        t = (2.0 * x[i] - (lo + hi)) / (hi - lo)
        out[i] = _clenshaw(c, t)
    return out


@njit(**_OPTS)
def _clenshaw2(coeffs, tx, ty):
    nx = coeffs.shape[0]
    d = np.empty(nx, dtype=np.float64)
    for i in range(nx):
        d[i] = _clenshaw(coeffs[i], ty)
    return _clenshaw(d, tx)


@njit(**_OPTS)
def cheb2_eval_scalar(coeffs, xlo, xhi, ylo, yhi, x, y):
    tx = (2.0 * x - (xlo + xhi)) / (xhi - xlo)
    ty = (2.0 * y - (ylo + yhi)) / (yhi - ylo)
    return _clenshaw2(coeffs, tx, ty)


@njit(**_OPTS)
def cheb2_eval(coeffs, xlo, xhi, ylo, yhi, x, y):
    out = np.empty(x.shape[0], dtype=np.float64)
    for i in range(x.shape[0]):
        tx = (2.0 * x[i] - (xlo + xhi)) / (xhi - xlo)
        ty = (2.0 * y[i] - (ylo + yhi)) / (yhi - ylo)
        out[i] = _clenshaw2(coeffs, tx, ty)
    return out


@njit(**_OPTS)
def _diff_point_h(c, ta, tb, h):
    # sum_k c[k] * (T_k(ta) - T_k(tb)) with the gap h given explicitly
    n = c.shape[0]
    s_prev = 0.0
    s_cur = h
    tb_prev = 1.0
    tb_cur = tb
    acc = c[1] * s_cur if n > 1 else 0.0
    for k in range(2, n):
        s_next = 2.0 * (ta * s_cur + h * tb_cur) - s_prev
        tb_next = 2.0 * tb * tb_cur - tb_prev
        acc += c[k] * s_next
        s_prev, s_cur = s_cur, s_next
        tb_prev, tb_cur = tb_cur, tb_next
    return acc


@njit(**_OPTS)
def _diff_point(c, ta, tb):
    return _diff_point_h(c, ta, tb, ta - tb)


@njit(**_OPTS)
def cheb_diff(c, lo, hi, a, b):
    a_ = np.asarray(a)
    b_ = np.asarray(b)
    out = np.empty(a_.shape[0], dtype=np.float64)
    for i in range(a_.shape[0]):
        ta = (2.0 * a_[i] - (lo + hi)) / (hi - lo)
        tb = (2.0 * b_[i] - (lo + hi)) / (hi - lo)
        out[i] = _diff_point(c, ta, tb)
    return out


@njit(**_OPTS)
def cheb_diff_rel(c, lo, hi, base, da, db):
    s = 2.0 / (hi - lo)
    out = np.empty(base.shape[0], dtype=np.float64)
    for i in range(base.shape[0]):
        tb0 = (2.0 * base[i] - (lo + hi)) / (hi - lo)
        out[i] = _diff_point_h(c, tb0 + da[i] * s, tb0 + db[i] * s,
                               (da[i] - db[i]) * s)
    return out


@njit(**_OPTS)
def _contract_y(coeffs, ty, d):
    nx = coeffs.shape[0]
    for k in range(nx):
        d[k] = _clenshaw(coeffs[k], ty)


@njit(**_OPTS)
def _contract_x(coeffs, tx, d):
    nx = coeffs.shape[0]
    ny = coeffs.shape[1]
    for j in range(ny):
        d[j] = coeffs[0, j]
    if nx > 1:
        for j in range(ny):
            d[j] += coeffs[1, j] * tx
    t_prev = 1.0
    t_cur = tx
    for k in range(2, nx):
        t_next = 2.0 * tx * t_cur - t_prev
        for j in range(ny):
            d[j] += coeffs[k, j] * t_next
        t_prev, t_cur = t_cur, t_next


@njit(**_OPTS)
def cheb2_diff_x_rel(coeffs, xlo, xhi, ylo, yhi, base, da, db, y):
    s = 2.0 / (xhi - xlo)
    out = np.empty(base.shape[0], dtype=np.float64)
    d = np.empty(coeffs.shape[0], dtype=np.float64)
    for i in range(base.shape[0]):
        ty = (2.0 * y[i] - (ylo + yhi)) / (yhi - ylo)
        _contract_y(coeffs, ty, d)
        tb0 = (2.0 * base[i] - (xlo + xhi)) / (xhi - xlo)
        out[i] = _diff_point_h(d, tb0 + da[i] * s, tb0 + db[i] * s,
                               (da[i] - db[i]) * s)
    return out


@njit(**_OPTS)
def cheb2_diff_y_rel(coeffs, xlo, xhi, ylo, yhi, x, base, da, db):
    s = 2.0 / (yhi - ylo)
    out = np.empty(x.shape[0], dtype=np.float64)
    d = np.empty(coeffs.shape[1], dtype=np.float64)
    for i in range(x.shape[0]):
        tx = (2.0 * x[i] - (xlo + xhi)) / (xhi - xlo)
        _contract_x(coeffs, tx, d)
        tb0 = (2.0 * base[i] - (ylo + yhi)) / (yhi - ylo)
        out[i] = _diff_point_h(d, tb0 + da[i] * s, tb0 + db[i] * s,
                               (da[i] - db[i]) * s)
    return out


@njit(**_OPTS)
def cheb2_diff_x(coeffs, xlo, xhi, ylo, yhi, a, b, y):
    nx = coeffs.shape[0]
    out = np.empty(a.shape[0], dtype=np.float64)
    d = np.empty(nx, dtype=np.float64)
    for i in range(a.shape[0]):
        ty = (2.0 * y[i] - (ylo + yhi)) / (yhi - ylo)
        for k in range(nx):
            d[k] = _clenshaw(coeffs[k], ty)
        ta = (2.0 * a[i] - (xlo + xhi)) / (xhi - xlo)
        tb = (2.0 * b[i] - (xlo + xhi)) / (xhi - xlo)
        out[i] = _diff_point(d, ta, tb)
    return out


@njit(**_OPTS)
def cheb2_diff_y(coeffs, xlo, xhi, ylo, yhi, x, ya, yb):
    nx = coeffs.shape[0]
    ny = coeffs.shape[1]
    out = np.empty(x.shape[0], dtype=np.float64)
    d = np.empty(ny, dtype=np.float64)
    for i in range(x.shape[0]):
        tx = (2.0 * x[i] - (xlo + xhi)) / (xhi - xlo)
        # contract the x direction: d_j = sum_i C[i, j] T_i(tx)
        t_prev = 1.0
        t_cur = tx
        for j in range(ny):
            d[j] = coeffs[0, j]
        if nx > 1:
            for j in range(ny):
                d[j] += coeffs[1, j] * tx
        for k in range(2, nx):
            t_next = 2.0 * tx * t_cur - t_prev
            for j in range(ny):
                d[j] += coeffs[k, j] * t_next
            t_prev, t_cur = t_cur, t_next
        ta = (2.0 * ya[i] - (ylo + yhi)) / (yhi - ylo)
        tb = (2.0 * yb[i] - (ylo + yhi)) / (yhi - ylo)
        out[i] = _diff_point(d, ta, tb)
    return out


@njit(**_OPTS)
def henon_orbit(fc, flo, fhi, ec, xlo, xhi, ylo, yhi, sign, x0, y0, nsteps):
    out = np.empty((nsteps + 1, 2), dtype=np.float64)
    x = x0
    y = y0
    out[0, 0] = x
    out[0, 1] = y
    degenerate = ec.size == 1 and ec[0, 0] == 0.0
    for k in range(1, nsteps + 1):
        fx = cheb_eval_scalar(fc, flo, fhi, x)
        if degenerate:
            xn = fx
        else:
            xn = fx - sign * cheb2_eval_scalar(ec, xlo, xhi, ylo, yhi, x, y)
        y = x
        x = xn
        out[k, 0] = x
        out[k, 1] = y
    return out


@njit(**_OPTS)
def logistic_critical_residual(a, period):
    x = 0.5
    dx = 0.0
    for _ in range(period):
        dx = x * (1.0 - x) + a * (1.0 - 2.0 * x) * dx
        x = a * x * (1.0 - x)
    return x - 0.5, dx


@njit(**_OPTS)
def logistic_orbit(a, x0, nsteps):
    out = np.empty(nsteps + 1, dtype=np.float64)
    x = x0
    out[0] = x
    for k in range(1, nsteps + 1):
        x = a * x * (1.0 - x)
        out[k] = x
    return out
