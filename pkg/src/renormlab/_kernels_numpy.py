"""Pure NumPy implementations of the hot numeric kernels.

Each function has a numba twin in ``_kernels_numba`` with an identical
signature; ``_kernels`` picks the backend at import time.  Conventions:

* Chebyshev coefficients ``c`` are for the T_k basis on ``[lo, hi]``.
* 2d coefficient matrices ``C[i, j]`` multiply ``T_i(x) T_j(y)``.
* Point arguments are 1d float64 arrays unless the name ends in ``_scalar``.

The ``*_diff`` kernels evaluate differences ``f(a) - f(b)`` through a
difference recurrence for ``T_k(a) - T_k(b)``.  This keeps the result
relatively accurate when ``a`` and ``b`` are close, which ordinary
evaluate-then-subtract cannot do; the renormalisation pipeline relies on it
to track thickenings far below machine epsilon in absolute size.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as _cheb


def _to_unit(x, lo, hi):
    return (2.0 * x - (lo + hi)) / (hi - lo)


def cheb_eval(c, lo, hi, x):
    return _cheb.chebval(_to_unit(np.asarray(x, dtype=np.float64), lo, hi), c)


def cheb_eval_scalar(c, lo, hi, x):
    return float(_cheb.chebval(_to_unit(float(x), lo, hi), c))


def cheb2_eval(coeffs, xlo, xhi, ylo, yhi, x, y):
    tx = _to_unit(np.asarray(x, dtype=np.float64), xlo, xhi)
    ty = _to_unit(np.asarray(y, dtype=np.float64), ylo, yhi)
    return _cheb.chebval2d(tx, ty, coeffs)


def cheb2_eval_scalar(coeffs, xlo, xhi, ylo, yhi, x, y):
    tx = _to_unit(float(x), xlo, xhi)
    ty = _to_unit(float(y), ylo, yhi)
    return float(_cheb.chebval2d(tx, ty, coeffs))


def _diff_recurrence(coeff_by_point, ta, tb, h=None):
    """sum_k coeff[k] * (T_k(ta) - T_k(tb)), coefficients may vary per point.

    ``coeff_by_point`` has shape (npts, ncoef) or (ncoef,) for shared
    coefficients.  ``h`` overrides ta - tb; passing the gap explicitly keeps
    full relative accuracy when the points only differ below float
    resolution of their absolute positions.
    """
    ta = np.asarray(ta, dtype=np.float64)
    tb = np.asarray(tb, dtype=np.float64)
    shared = coeff_by_point.ndim == 1
    n = coeff_by_point.shape[-1]
    if h is None:
        h = ta - tb
    else:
        h = np.asarray(h, dtype=np.float64)
    s_prev = np.zeros_like(ta)        # S_0 = T_0(a) - T_0(b)
    s_cur = h.copy()                  # S_1
    tb_prev = np.ones_like(tb)        # T_0(b)
    tb_cur = tb.copy()                # T_1(b)
    if shared:
        acc = coeff_by_point[1] * s_cur if n > 1 else np.zeros_like(ta)
    else:
        acc = coeff_by_point[:, 1] * s_cur if n > 1 else np.zeros_like(ta)
    for k in range(2, n):
        s_next = 2.0 * (ta * s_cur + h * tb_cur) - s_prev
        tb_next = 2.0 * tb * tb_cur - tb_prev
        if shared:
            acc = acc + coeff_by_point[k] * s_next
        else:
            acc = acc + coeff_by_point[:, k] * s_next
        s_prev, s_cur = s_cur, s_next
        tb_prev, tb_cur = tb_cur, tb_next
    return acc


def cheb_diff(c, lo, hi, a, b):
    """f(a) - f(b), relatively accurate for small a - b."""
    ta = _to_unit(np.asarray(a, dtype=np.float64), lo, hi)
    tb = _to_unit(np.asarray(b, dtype=np.float64), lo, hi)
    return _diff_recurrence(np.asarray(c, dtype=np.float64), ta, tb)


def _cheb_vander(t, n):
    """T_k(t) for k = 0..n-1, shape (npts, n)."""
    t = np.asarray(t, dtype=np.float64)
    V = np.empty(t.shape + (n,), dtype=np.float64)
    V[..., 0] = 1.0
    if n > 1:
        V[..., 1] = t
    for k in range(2, n):
        V[..., k] = 2.0 * t * V[..., k - 1] - V[..., k - 2]
    return V


def cheb2_diff_x(coeffs, xlo, xhi, ylo, yhi, a, b, y):
    """g(a, y) - g(b, y), accurate for small a - b.  All point args paired."""
    ta = _to_unit(np.asarray(a, dtype=np.float64), xlo, xhi)
    tb = _to_unit(np.asarray(b, dtype=np.float64), xlo, xhi)
    ty = _to_unit(np.asarray(y, dtype=np.float64), ylo, yhi)
    ny = coeffs.shape[1]
    # contract the y direction: d_i = sum_j C[i, j] T_j(ty)
    d = _cheb_vander(ty, ny) @ coeffs.T          # (npts, nx)
    return _diff_recurrence(d, ta, tb)


def cheb2_diff_y(coeffs, xlo, xhi, ylo, yhi, x, ya, yb):
    """g(x, ya) - g(x, yb), accurate for small ya - yb."""
    tx = _to_unit(np.asarray(x, dtype=np.float64), xlo, xhi)
    ta = _to_unit(np.asarray(ya, dtype=np.float64), ylo, yhi)
    tb = _to_unit(np.asarray(yb, dtype=np.float64), ylo, yhi)
    nx = coeffs.shape[0]
    d = _cheb_vander(tx, nx) @ coeffs            # (npts, ny)
    return _diff_recurrence(d, ta, tb)


def cheb_diff_rel(c, lo, hi, base, da, db):
    """f(base + da) - f(base + db) with the offsets kept as exact smalls."""
    s = 2.0 / (hi - lo)
    base = np.asarray(base, dtype=np.float64)
    da = np.asarray(da, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    tbase = _to_unit(base, lo, hi)
    ta = tbase + da * s
    tb = tbase + db * s
    return _diff_recurrence(np.asarray(c, dtype=np.float64), ta, tb,
                            h=(da - db) * s)


def cheb2_diff_x_rel(coeffs, xlo, xhi, ylo, yhi, base, da, db, y):
    """g(base + da, y) - g(base + db, y) with exact small offsets."""
    s = 2.0 / (xhi - xlo)
    tbase = _to_unit(np.asarray(base, dtype=np.float64), xlo, xhi)
    da = np.asarray(da, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    ty = _to_unit(np.asarray(y, dtype=np.float64), ylo, yhi)
    d = _cheb_vander(ty, coeffs.shape[1]) @ coeffs.T
    return _diff_recurrence(d, tbase + da * s, tbase + db * s, h=(da - db) * s)


def cheb2_diff_y_rel(coeffs, xlo, xhi, ylo, yhi, x, base, da, db):
    """g(x, base + da) - g(x, base + db) with exact small offsets."""
    s = 2.0 / (yhi - ylo)
    tbase = _to_unit(np.asarray(base, dtype=np.float64), ylo, yhi)
    da = np.asarray(da, dtype=np.float64)
    db = np.asarray(db, dtype=np.float64)
    tx = _to_unit(np.asarray(x, dtype=np.float64), xlo, xhi)
    d = _cheb_vander(tx, coeffs.shape[0]) @ coeffs
    return _diff_recurrence(d, tbase + da * s, tbase + db * s, h=(da - db) * s)


def henon_orbit(fc, flo, fhi, ec, xlo, xhi, ylo, yhi, sign, x0, y0, nsteps):
    """Orbit of (x, y) under F(x, y) = (f(x) - sign * eps(x, y), x).

    Returns an array of shape (nsteps + 1, 2) with the full orbit.
    """
    out = np.empty((nsteps + 1, 2), dtype=np.float64)
    x, y = float(x0), float(y0)
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


def logistic_critical_residual(a, period):
    """f_a^period(1/2) - 1/2 and its derivative with respect to a."""
    x = 0.5
    dx = 0.0
    for _ in range(period):
        dx = x * (1.0 - x) + a * (1.0 - 2.0 * x) * dx
        x = a * x * (1.0 - x)
    return x - 0.5, dx


def logistic_orbit(a, x0, nsteps):
    out = np.empty(nsteps + 1, dtype=np.float64)
    x = float(x0)
    out[0] = x
    for k in range(1, nsteps + 1):
        x = a * x * (1.0 - x)
        out[k] = x
    return out
