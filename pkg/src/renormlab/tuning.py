"""Parameter tuning: logistic parameters whose thickened maps renormalise deep.

An infinitely renormalisable map needs its parameter on the codimension-one
stable manifold; a tower of depth N survives when the parameter sits within
about delta^-N of it.  The tuner bisects on the failure side of the stage
where the tower breaks: "low" when the rescaled map loses its expanding
interior fixed point (the cascade undershoots), "high" when the cycle
escapes (overshoot).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .config import DEFAULT, Config
from .errors import RenormError
from .henon import HenonLikeMap, Thickening, find_central_box, renormalise_henon
from .unimodal import (UnimodalPermutation, detect_renormalisable, logistic,
                       renormalise)


def tower_reach(F: HenonLikeMap, perm: UnimodalPermutation, target: int,
                config: Config = DEFAULT):
    """(depth reached, failure side or None).

    Side is "low"/"high" per the failed stage's unimodal part.
    """
    cur = F
    for n in range(target):
        try:
            pre = find_central_box(cur, perm, config)
            step = renormalise_henon(cur, perm, pre, config)
        except RenormError as exc:
            side = exc.context.get("side")
            if side is None and exc.code in ("not-invariant",):
                side = "high"
            if side is None:
                side = _classify_side(cur, perm, config)
            return n, side
        cur = step.F_next
    return target, None


def _classify_side(F: HenonLikeMap, perm: UnimodalPermutation,
                   config: Config) -> str:
    f = F.f
    margin = config.expansion_margin
    mult = abs(float(f.deriv()(f.alpha)))
    if mult <= 1.0 + margin:
        return "low"

    def return_side() -> str:
        # sign of f^p(c0) - c0: positive before the window's superstable
        # spine, negative past it
        return "low" if f.iterate(f.c0, perm.p) > f.c0 else "high"

    try:
        cyc = detect_renormalisable(f, perm, config)
    except RenormError:
        return return_side()
    if cyc is None:
        return return_side()
    # raw rescaled return map, no validation: classify by shape
    from .cheb import UNIT, fit, cheb_nodes, identity_fun, find_roots
    from .unimodal import rescale_to_unit
    slope, off = rescale_to_unit(cyc.central, cyc.beta)
    nodes = cheb_nodes(UNIT, config.degree_1d)
    x = off + slope * nodes
    for _ in range(perm.p):
        x = f.fun(x)
    g = fit((x - off) / slope, UNIT, config.degree_1d, check_tail=False)
    xs = np.linspace(0.0, 1.0, 513)
    vals = g(xs)
    i = int(np.argmax(vals))
    gc0, gc1 = xs[i], vals[i]
    if gc1 <= gc0 + 1e-9:
        return "low"                      # hump below the diagonal
    interior = [r for r in find_roots(g - identity_fun(UNIT)) if r > 1e-9]
    if interior and abs(float(g.deriv()(interior[0]))) <= 1.0 + margin:
        return "low"                      # attracting interior fixed point
    return "high"


def tune_parameter(make_map: Callable[[float], HenonLikeMap],
                   perm: UnimodalPermutation, depth: int,
                   a_lo: float, a_hi: float, config: Config = DEFAULT,
                   max_probes: int = 120) -> float:
    """Bisect [a_lo, a_hi] until make_map(a) renormalises ``depth`` times.

    ``a_lo`` must fail low and ``a_hi`` high (checked).  Returns the first
    parameter that reaches the requested depth.
    """
    d_lo, side_lo = tower_reach(make_map(a_lo), perm, depth, config)
    if d_lo >= depth:
        return a_lo
    d_hi, side_hi = tower_reach(make_map(a_hi), perm, depth, config)
    if d_hi >= depth:
        return a_hi
    if side_lo != "low" or side_hi != "high":
        raise RenormError("bad-input", "bracket does not straddle the window",
                          side_lo=side_lo, side_hi=side_hi)
    for _ in range(max_probes):
        a = 0.5 * (a_lo + a_hi)
        d, side = tower_reach(make_map(a), perm, depth, config)
        if d >= depth:
            return a
        if side == "low":
            a_lo = a
        elif side == "high":
            a_hi = a
        else:
            raise RenormError("newton-failed", "unclassifiable failure", a=a)
        if a_hi - a_lo < 1e-15:
            break
    raise RenormError("newton-failed", "tuning bisection exhausted",
                      bracket=(a_lo, a_hi), depth=depth)


def logistic_henon(a: float, thickening: Thickening | None = None,
                   orientation: int = 1, degree: int = 24) -> HenonLikeMap:
    """Thickened logistic map as a HenonLikeMap."""
    f = logistic(a, degree=degree)
    return HenonLikeMap(f, thickening, orientation)


def tune_logistic_linear(c: float, perm: UnimodalPermutation, depth: int,
                         a_lo: float = 3.5, a_hi: float = 3.68,
                         orientation: int = 1,
                         config: Config = DEFAULT) -> float:
    """Tuned logistic parameter for the thickening eps = c * y."""
    thick = Thickening.linear_y(c) if c != 0.0 else Thickening.zero()

    def make(a: float) -> HenonLikeMap:
        return HenonLikeMap(logistic(a, degree=24), thick, orientation)

    return tune_parameter(make, perm, depth, a_lo, a_hi, config)
