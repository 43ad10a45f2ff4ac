"""Superstable-parameter machinery for the logistic family a x (1 - x).

Provides the superstable cascades used to seed the fixed point solver and
the two independent universal-constant estimates:

* ``delta_estimate``      from parameter-spacing ratios,
* ``sigma_estimate``      from closest-return distance ratios at the
                          superstable parameters.

Both are extrapolated with Aitken's delta-squared; they are deliberately
independent of the renormalisation operator implementation.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import RenormError


def critical_residual(a: float, period: int):
    """f_a^period(1/2) - 1/2 and its a-derivative."""
    return K.logistic_critical_residual(float(a), int(period))


def _newton_superstable(a0: float, period: int, tol: float = 1e-13,
                        max_iter: int = 80) -> float:
    a = float(a0)
    for _ in range(max_iter):
        g, dg = critical_residual(a, period)
        if dg == 0.0:
            break
        an = a - g / dg
        if abs(an - a) < tol:
            return an
        a = an
    raise RenormError("newton-failed", "superstable parameter solve stalled",
                      seed=a0, period=period)


def _scan_first_superstable(period: int, lo: float, hi: float,
                            n: int = 4000) -> float:
    """First sign change of f^period(c) - c in (lo, hi), polished by Newton."""
    grid = np.linspace(lo, hi, n)
    vals = np.array([critical_residual(a, period)[0] for a in grid])
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(idx) == 0:
        raise RenormError("no-window", "no superstable parameter in bracket",
                          period=period, lo=lo, hi=hi)
    i = idx[0]
    # bisect before Newton to stay on this root
    a, b = grid[i], grid[i + 1]
    fa = vals[i]
    for _ in range(80):
        m = 0.5 * (a + b)
        fm = critical_residual(m, period)[0]
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return _newton_superstable(0.5 * (a + b), period)


def superstable_cascade(p: int, levels: int) -> list:
    """Superstable parameters a_k of period p^k, k = 1..levels.

    Seeds for k >= 3 are geometric extrapolations of the previous spacings,
    polished by Newton on f^{p^k}(c) - c.
    """
    if p == 2:
        a1 = 1.0 + np.sqrt(5.0)                       # superstable 2-cycle
        a2 = _scan_first_superstable(4, a1 + 1e-4, 3.55)
    elif p == 3:
        a1 = _scan_first_superstable(3, 3.8287, 3.85)
        a2 = _scan_first_superstable(9, a1 + 1e-5, 3.86)
    else:
        raise RenormError("no-window", "cascade implemented for p = 2 and 3 only",
                          p=p)
    out = [a1, a2]
    ratio = 5.0 if p == 2 else 50.0
    for k in range(3, levels + 1):
        guess = out[-1] + (out[-1] - out[-2]) / ratio
        a = _newton_superstable(guess, p ** k)
        out.append(a)
        if k >= 3:
            ratio = (out[-2] - out[-3]) / (out[-1] - out[-2])
    return out


def _aitken(seq):
    s = np.asarray(seq, dtype=float)
    if len(s) < 3:
        return float(s[-1])
    num = s[2:] * s[:-2] - s[1:-1] ** 2
    den = s[2:] - 2.0 * s[1:-1] + s[:-2]
    good = np.abs(den) > 1e-300
    acc = np.where(good, num / np.where(good, den, 1.0), s[2:])
    return float(acc[-1])


def delta_estimate(params) -> float:
    """Universal parameter-spacing ratio, Aitken extrapolated."""
    a = np.asarray(params, dtype=float)
    ratios = (a[1:-1] - a[:-2]) / (a[2:] - a[1:-1])
    return _aitken(ratios)


def closest_return(a: float, p: int, k: int) -> float:
    """d_k = f_a^{p^{k-1}}(c) - c."""
    return critical_residual(a, p ** (k - 1))[0]


def sigma_estimate(params, p: int) -> float:
    """Universal closest-return contraction, Aitken extrapolated.

    Uses |d_{k+1} / d_k| at successive superstable parameters; the limit is
    the scaling ratio of the renormalisation fixed point.
    """
    ds = [closest_return(a, p, k + 1) for k, a in enumerate(params)]
    ratios = [abs(ds[i + 1] / ds[i]) for i in range(1, len(ds) - 1)]
    return _aitken(ratios)
