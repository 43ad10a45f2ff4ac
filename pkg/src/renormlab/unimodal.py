"""Unimodal maps, combinatorics, renormalisation cycles and scope maps.

A map f on J = [0, 1] is unimodal here when f(0) = f(1) = 0, f has a single
interior critical point c0 with f(c0) > c0, and both fixed points (0 and the
interior one) are expanding.

The combinatorial type of a period-p cycle is the permutation of spatial
ranks induced by the dynamics; it is admissible when it is a single p-cycle
that increases up to its maximum and decreases afterwards, the pattern a map
with one fold can realise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cheb import (Fun1, Interval, UNIT, cheb_nodes, compose1, fit,
                   find_roots, identity_fun)
from .config import DEFAULT, Config
from .errors import RenormError


# ---------------------------------------------------------------------------
# words and permutations


@dataclass(frozen=True)
class Word:
    """Finite word over {0, .., p-1}; digit 0 is the coarsest level."""

    digits: tuple
    p: int

    def __post_init__(self):
        if self.p < 2:
            raise RenormError("bad-permutation", "need p > 1", p=self.p)
        if any(d < 0 or d >= self.p for d in self.digits):
            raise RenormError("bad-word", "digit out of range",
                              digits=self.digits, p=self.p)
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    def __len__(self):
        return len(self.digits)

    def __str__(self):
        return "".join(str(d) for d in self.digits)

    @staticmethod
    def zeros(n: int, p: int) -> "Word":
        return Word((0,) * n, p)

    @staticmethod
    def all_of_length(n: int, p: int):
        words = [()]
        for _ in range(n):
            words = [w + (d,) for w in words for d in range(p)]
        return [Word(w, p) for w in words]


def adding_machine_successor(w: Word) -> Word:
    """1 + w: increment digit 0, carrying right; all-(p-1) wraps to zeros."""
    digits = list(w.digits)
    for i, d in enumerate(digits):
        if d != w.p - 1:
            digits[i] = d + 1
            return Word(tuple(digits), w.p)
        digits[i] = 0
    return Word(tuple(digits), w.p)


def word_orbit_index(w: Word) -> int:
    """r(w) = sum_i p^i w_i: the word's position along the p^n-cycle."""
    return sum(d * w.p ** i for i, d in enumerate(w.digits))


def word_transfer_time(w: Word) -> int:
    """q(w) = p^n - r(w) mod p^n: iterates needed to reach the central word."""
    n = len(w)
    pn = w.p ** n
    return (pn - word_orbit_index(w)) % pn


@dataclass(frozen=True)
class UnimodalPermutation:
    """Spatial action of a period-p orbit: rank i maps to rank perm[i]."""

    p: int
    perm: tuple

    def __post_init__(self):
        perm = tuple(int(v) for v in self.perm)
        object.__setattr__(self, "perm", perm)
        if self.p < 2 or len(perm) != self.p or sorted(perm) != list(range(self.p)):
            raise RenormError("bad-permutation", "not a bijection on 0..p-1",
                              p=self.p, perm=perm)
        if not self._single_cycle():
            raise RenormError("bad-permutation", "orbit pattern must be a single cycle",
                              perm=perm)
        if not self._unimodal_shape():
            raise RenormError("bad-permutation",
                              "pattern not realizable by a one-fold map",
                              perm=perm)

    def _single_cycle(self) -> bool:
        seen, i = set(), 0
        for _ in range(self.p):
            if i in seen:
                return False
            seen.add(i)
            i = self.perm[i]
        return len(seen) == self.p and i == 0

    def _unimodal_shape(self) -> bool:
        m = int(np.argmax(self.perm))
        up = all(self.perm[i] < self.perm[i + 1] for i in range(m))
        down = all(self.perm[i] > self.perm[i + 1] for i in range(m, self.p - 1))
        return up and down

    @staticmethod
    def doubling() -> "UnimodalPermutation":
        return UnimodalPermutation(2, (1, 0))

    @staticmethod
    def tripling() -> "UnimodalPermutation":
        return UnimodalPermutation(3, (1, 2, 0))

    def __str__(self):
        body = ",".join(f"{i}->{v}" for i, v in enumerate(self.perm))
        return f"p={self.p}; {body}"


def parse_permutation(text: str) -> UnimodalPermutation:
    """Parse the one-line notation "p=3; 0->1,1->2,2->0"."""
    try:
        head, body = text.split(";")
        p = int(head.strip().split("=")[1])
        pairs = [item.split("->") for item in body.strip().split(",")]
        mapping = {int(a): int(b) for a, b in pairs}
        perm = tuple(mapping[i] for i in range(p))
    except (ValueError, KeyError, IndexError) as exc:
        raise RenormError("bad-input", f"cannot parse permutation {text!r}") from exc
    return UnimodalPermutation(p, perm)


# ---------------------------------------------------------------------------
# unimodal maps


class UnimodalMap:
    """Analytic unimodal map of [0, 1] with its critical and fixed points."""

    __slots__ = ("fun", "c0", "alpha", "_derivs")

    def __init__(self, fun: Fun1, c0: float, alpha: float):
        self.fun = fun
        self.c0 = float(c0)
        self.alpha = float(alpha)
        self._derivs = {}

    @staticmethod
    def from_fun(fun: Fun1, strict: bool = True,
                 config: Config = DEFAULT) -> "UnimodalMap":
        if fun.domain != UNIT:
            raise RenormError("bad-domain", "unimodal maps live on [0, 1]")
        df = fun.deriv()
        crits = [x for x in find_roots(df, 0.0, config) if 1e-9 < x < 1 - 1e-9]
        if len(crits) != 1:
            raise RenormError("not-unimodal", "need a unique interior critical point",
                              critical_points=crits)
        c0 = crits[0]
        interior_fixed = [x for x in find_roots(fun - identity_fun(UNIT), 0.0, config)
                          if x > 1e-9]
        if len(interior_fixed) != 1:
            if strict:
                raise RenormError("not-unimodal", "need a unique interior fixed point",
                                  fixed_points=interior_fixed)
            interior_fixed = interior_fixed[:1] or [c0]
        m = UnimodalMap(fun, c0, interior_fixed[0])
        m.validate(strict=strict, config=config)
        return m

    def deriv(self, order: int = 1) -> Fun1:
        if order not in self._derivs:
            self._derivs[order] = self.fun.deriv(order)
        return self._derivs[order]

    def __call__(self, x):
        return self.fun(x)

    def iterate(self, x, k: int):
        for _ in range(k):
            x = self.fun(x)
        return x

    @property
    def c1(self) -> float:
        return float(self.fun(self.c0))

    def validate(self, strict: bool = True, config: Config = DEFAULT) -> None:
        f, tol = self.fun, config.endpoint_tol
        if abs(f(0.0)) > tol or abs(f(1.0)) > tol:
            raise RenormError("not-unimodal", "boundary values must vanish",
                              f0=float(f(0.0)), f1=float(f(1.0)))
        if not (0.0 < self.c0 < 1.0) or self.c1 <= self.c0:
            raise RenormError("not-unimodal", "critical value must exceed critical point",
                              c0=self.c0, c1=self.c1)
        df = self.deriv()
        xs = np.linspace(0.0, 1.0, 257)
        d = df(xs)
        left = xs < self.c0 - 1e-6
        right = xs > self.c0 + 1e-6
        if np.any(d[left] <= 0.0) or np.any(d[right] >= 0.0):
            raise RenormError("not-unimodal", "derivative changes sign away from c0")
        if strict:
            margin = config.expansion_margin
            if abs(df(0.0)) <= 1.0 + margin:
                raise RenormError("not-unimodal", "boundary fixed point not expanding",
                                  multiplier=float(df(0.0)))
            if abs(df(self.alpha)) <= 1.0 + margin:
                raise RenormError("not-unimodal", "interior fixed point not expanding",
                                  multiplier=float(df(self.alpha)))

    def __repr__(self):
        return f"UnimodalMap(c0={self.c0:.6f}, alpha={self.alpha:.6f})"


def logistic(a: float, degree: int = 8, strict: bool = True) -> UnimodalMap:
    """The logistic map a x (1 - x) as a UnimodalMap."""
    fun = fit(lambda x: a * x * (1.0 - x), UNIT, degree=degree)
    return UnimodalMap.from_fun(fun, strict=strict)


# ---------------------------------------------------------------------------
# renormalisation cycles


@dataclass(frozen=True)
class RenormCycle:
    perm: UnimodalPermutation
    central: Interval                    # J^0
    intervals: tuple                     # J^w in dynamical order, w = 0..p-1
    beta: float                          # p-periodic boundary point, f^p(beta) = beta
    beta_hat: float                      # its preimage: f^p(beta_hat) = beta
    multiplier: float = field(default=float("nan"))

    @property
    def p(self) -> int:
        return self.perm.p


def _iterate_fun(f: UnimodalMap, k: int, config: Config = DEFAULT) -> Fun1:
    """f^k as a Fun1 on [0, 1]."""
    out = f.fun
    for _ in range(k - 1):
        out = compose1(f.fun, out, config=config)
    return out


def _fp_scalar(f: UnimodalMap, x: float, k: int):
    """(f^k(x), (f^k)'(x)) by direct iteration."""
    df = f.deriv()
    d = 1.0
    for _ in range(k):
        d *= float(df(x))
        x = float(f.fun(x))
    return x, d


def _newton_periodic(f: UnimodalMap, x0: float, p: int, target=None,
                     tol: float = 1e-13, max_iter: int = 60) -> float:
    """Solve f^p(x) = x (or = target) by Newton from x0."""
    x = float(x0)
    for _ in range(max_iter):
        v, d = _fp_scalar(f, x, p)
        if target is None:
            g, dg = v - x, d - 1.0
        else:
            g, dg = v - target, d
        if dg == 0.0:
            break
        xn = x - g / dg
        if abs(xn - x) < tol:
            return xn
        x = xn
    return x


def _interval_image(f: UnimodalMap, interval: Interval) -> Interval:
    """f(interval); accounts for the fold when c0 lies inside."""
    va, vb = float(f(interval.lo)), float(f(interval.hi))
    lo, hi = min(va, vb), max(va, vb)
    if interval.lo < f.c0 < interval.hi:
        hi = max(hi, f.c1)
    if not hi > lo:
        hi = lo + 1e-300
    return Interval(lo, hi)


def _monotone_image(f: UnimodalMap, interval: Interval, k: int) -> Interval:
    """f^k(interval); only the first step may fold."""
    cur = _interval_image(f, interval)
    for _ in range(k - 1):
        cur = _interval_image(f, cur)
    return cur


def _branch_solve(f: UnimodalMap, k: int, target: float, seed_interval: Interval,
                  config: Config = DEFAULT) -> float:
    """Solve f^k(u) = target on the monotone branch through seed_interval.

    Marches outward from the seed until the target is bracketed, then
    bisection-safeguarded Newton.  Raises ``branch-singular`` when the branch
    turns (derivative sign change) before the target is reached.
    """
    lo, hi = seed_interval.lo, seed_interval.hi
    mid = 0.5 * (lo + hi)
    v_mid, d_mid = _fp_scalar(f, mid, k)
    if d_mid == 0.0:
        raise RenormError("branch-singular", "branch derivative vanishes at seed")
    up = d_mid > 0.0
    step = max(1e-5, 0.25 * seed_interval.length)

    def value(u):
        return _fp_scalar(f, u, k)[0]

    # pick marching direction from monotonicity and target side
    go_right = (target > v_mid) == up
    a, va = mid, v_mid
    direction = 1.0 if go_right else -1.0
    for _ in range(4000):
        b = a + direction * step
        b = min(max(b, 0.0), 1.0)
        vb = value(b)
        if (va - target) * (vb - target) <= 0.0:
            xa, xb = sorted((a, b))
            fa = value(xa) - target
            x = xa
            for _ in range(100):
                xm = 0.5 * (xa + xb)
                vm = value(xm) - target
                if fa * vm <= 0.0:
                    xb = xm
                else:
                    xa, fa = xm, vm
                vx, dx = _fp_scalar(f, xm, k)
                if dx != 0.0:
                    xn = xm - (vx - target) / dx
                    if xa < xn < xb:
                        xm = xn
                if abs(xb - xa) < config.root_tol:
                    break
                x = xm
            # final polish
            return _newton_periodic(f, x, k, target=target, tol=config.root_tol)
        # monotone along branch: value must move toward target
        if (vb - va) * direction * (1.0 if up else -1.0) < 0.0:
            raise RenormError("branch-singular",
                              "branch turns before reaching target",
                              at=b, value=vb, target=target)
        a, va = b, vb
        if b in (0.0, 1.0):
            raise RenormError("branch-singular",
                              "target not reached inside the domain",
                              target=target)
    raise RenormError("branch-singular", "marching failed", target=target)


def _cycle_from_boundary(f: UnimodalMap, perm: UnimodalPermutation, beta: float,
                         beta_hat: float, config: Config = DEFAULT
                         ) -> Optional[RenormCycle]:
    """Assemble and validate the cycle with central interval [beta, beta_hat]."""
    p = perm.p
    central = Interval(min(beta, beta_hat), max(beta, beta_hat))
    if not (central.lo < f.c0 < central.hi):
        return None
    # invariance of the central interval under f^p on a fine grid
    xs = central.grid(512)
    v = xs.copy()
    for _ in range(p):
        v = f(v)
    pad = 1e-9 * max(1.0, central.length)
    if v.min() < central.lo - pad or v.max() > central.hi + pad:
        return None

    # dynamical intervals J^w: preimage-branch extensions around f^w(J^0)
    intervals = [central]
    for w in range(1, p):
        img = _monotone_image(f, central, w)
        try:
            e0 = _branch_solve(f, p - w, central.lo, img, config)
            e1 = _branch_solve(f, p - w, central.hi, img, config)
        except RenormError:
            return None
        iv = Interval(min(e0, e1), max(e0, e1))
        if not (iv.lo <= img.lo + 1e-9 and iv.hi >= img.hi - 1e-9):
            return None
        intervals.append(iv)

    # pairwise disjoint interiors
    order = sorted(range(p), key=lambda w: intervals[w].mid)
    for i in range(p - 1):
        if intervals[order[i]].hi > intervals[order[i + 1]].lo + 1e-10:
            return None

    # spatial order must realize the permutation
    rank_of = {w: i for i, w in enumerate(order)}
    for i, w in enumerate(order):
        if perm.perm[i] != rank_of[(w + 1) % p]:
            return None

    _, mult = _fp_scalar(f, beta, p)
    return RenormCycle(perm, central, tuple(intervals), beta, beta_hat,
                       multiplier=abs(mult))


def detect_renormalisable(f: UnimodalMap, perm: UnimodalPermutation,
                          config: Config = DEFAULT) -> Optional[RenormCycle]:
    """Find the renormalisation cycle of combinatorial type ``perm``, if any.

    Periodic boundary candidates come from a scan-plus-Newton solve of
    f^p(x) = x; each expanding candidate is paired with its f^p-preimages on
    the far side of the critical point and the resulting interval is kept
    when it is invariant, the cycle is disjoint, and the spatial order
    realizes ``perm``.  Several distinct valid cycles raise
    ``ambiguous-cycle``.
    """
    p = perm.p
    fp_fun = _iterate_fun(f, p, config)
    margin = config.expansion_margin
    periodic = [x for x in find_roots(fp_fun - identity_fun(UNIT), 0.0, config)
                if x > 1e-8]
    dfp = fp_fun.deriv()
    found = []
    for beta in periodic:
        beta = _newton_periodic(f, beta, p)
        if abs(_fp_scalar(f, beta, p)[1]) <= 1.0 + margin:
            continue
        preimages = [x for x in find_roots(fp_fun, beta, config)
                     if abs(x - beta) > 1e-8]
        for bh in preimages:
            bh = _newton_periodic(f, bh, p, target=beta)
            if (beta - f.c0) * (bh - f.c0) >= 0.0:
                continue
            cyc = _cycle_from_boundary(f, perm, beta, bh, config)
            if cyc is not None:
                if not any(abs(c.beta - cyc.beta) < 1e-8
                           and abs(c.beta_hat - cyc.beta_hat) < 1e-8
                           for c in found):
                    found.append(cyc)
    if not found:
        return None
    if len(found) > 1:
        raise RenormError("ambiguous-cycle", "several valid candidate cycles",
                          candidates=[(c.beta, c.beta_hat) for c in found])
    return found[0]


# ---------------------------------------------------------------------------
# the operator


def rescale_to_unit(central: Interval, beta: float):
    """Affine h: J -> central with h(0) = beta, as (slope, offset)."""
    if abs(central.lo - beta) < abs(central.hi - beta):
        return central.length, central.lo       # h(x) = lo + len * x
    return -central.length, central.hi          # h(x) = hi - len * x


def renormalise(f: UnimodalMap, cycle: RenormCycle, strict: bool = True,
                degree: int | None = None, config: Config = DEFAULT
                ) -> UnimodalMap:
    """R f = h^{-1} o f^p o h with h pinned by h(0) = beta.

    That choice sends both endpoints of J to 0 (the boundary orbit lands on
    beta), so the rescaled map satisfies the unimodal normalisation whenever
    f is genuinely renormalisable; otherwise ``not-renormalisable-in-U``.
    """
    if degree is None:
        degree = config.degree_1d
    slope, off = rescale_to_unit(cycle.central, cycle.beta)
    nodes = cheb_nodes(UNIT, degree)
    x = off + slope * nodes
    for _ in range(cycle.p):
        x = f(x)
    g_vals = (x - off) / slope
    fun = fit(g_vals, UNIT, degree, config=config, check_tail=False)
    # clamp the endpoint values to the exact normalisation
    try:
        return UnimodalMap.from_fun(fun, strict=strict, config=config)
    except RenormError as exc:
        raise RenormError("not-renormalisable-in-U",
                          "rescaled return map is not unimodal",
                          reason=exc.code, detail=str(exc)) from exc


def renormalise_step(f: UnimodalMap, perm: UnimodalPermutation,
                     strict: bool = True, config: Config = DEFAULT
                     ) -> tuple:
    """Detect + renormalise; returns (Rf, cycle)."""
    cycle = detect_renormalisable(f, perm, config)
    if cycle is None:
        raise RenormError("not-renormalisable", "no cycle of the requested type")
    return renormalise(f, cycle, strict=strict, config=config), cycle


# ---------------------------------------------------------------------------
# scope functions


def scope_functions(f: UnimodalMap, cycle: RenormCycle,
                    degree: int | None = None, config: Config = DEFAULT) -> list:
    """Scope maps mt^w: J -> J^w; mt^0 is the affine h, the others invert
    h^{-1} o f^{p-w} on the branch through J^w."""
    if degree is None:
        degree = config.degree_1d
    p = cycle.p
    slope, off = rescale_to_unit(cycle.central, cycle.beta)
    out = [Fun1(UNIT, [off + 0.5 * slope, 0.5 * slope])]
    nodes = cheb_nodes(UNIT, degree)
    targets = off + slope * nodes
    dmin_floor = config.deriv_floor
    for w in range(1, p):
        vals = np.empty_like(targets)
        seed = cycle.intervals[w]
        for i, t in enumerate(targets):
            vals[i] = _branch_solve(f, p - w, t, seed, config)
        mt = fit(vals, UNIT, degree, config=config, check_tail=False)
        d = mt.deriv()(UNIT.grid(128))
        if np.min(np.abs(d)) < dmin_floor * cycle.intervals[w].length:
            raise RenormError("branch-singular",
                              "scope map not a diffeomorphism", w=w)
        out.append(mt)
    return out


def scope_fixed_point(mt: Fun1, config: Config = DEFAULT):
    """(fixed point, multiplier) of a scope branch on its image interval."""
    roots = find_roots(mt - identity_fun(UNIT), 0.0, config)
    if not roots:
        raise RenormError("no-convergence", "scope branch has no fixed point")
    lo, hi = sorted((float(mt(0.0)), float(mt(1.0))))
    inside = [r for r in roots if lo - 1e-9 <= r <= hi + 1e-9]
    x = inside[0] if inside else roots[0]
    return x, float(mt.deriv()(x))


def universal_u(f_star: UnimodalMap, perm: UnimodalPermutation, w: int,
                n_max: int = 40, tol: float = 1e-9, config: Config = DEFAULT):
    """Limit of orientation-preserving rescalings of mt^w self-compositions.

    Returns (u, sigma_w, history): u is the limiting function on J, sigma_w
    the multiplier of the attracting fixed point of mt^w, and history the
    sup-differences of successive rescaled iterates.  Raises
    ``no-convergence`` with the residual sequence when n_max is hit first.
    """
    cycle = detect_renormalisable(f_star, perm, config)
    if cycle is None:
        raise RenormError("not-renormalisable", "seed map has no cycle")
    mt = scope_functions(f_star, cycle, config=config)[w]
    x_hat, mult = scope_fixed_point(mt, config)
    grid = UNIT.grid(257)
    history: list[float] = []

    # u_{n+1} = w_n o u_n where w_n is mt zoomed between consecutive window
    # scales.  Windows are tracked as offsets from the branch fixed point so
    # the recursion stays exact long after the window width drops below the
    # float resolution of absolute coordinates.
    # Window endpoints are kept signed (offset of t = 0 first) so each zoom
    # w_n fixes 0 and 1; that makes u_n the orientation-preserving rescale of
    # mt^{(n)} even when the branch itself reverses orientation.
    e_fix = float(mt(x_hat)) - x_hat
    nodes01 = cheb_nodes(UNIT, config.degree_1d)
    off0, off1 = -x_hat, 1.0 - x_hat              # window J as offsets
    u = identity_fun(UNIT)
    prev_vals = u(grid)
    for _ in range(n_max):
        xi = off0 + nodes01 * (off1 - off0)
        img = e_fix + mt.diff_rel(np.full_like(xi, x_hat), xi, 0.0)
        i0 = e_fix + mt.diff_rel(x_hat, off0, 0.0)
        i1 = e_fix + mt.diff_rel(x_hat, off1, 0.0)
        if i1 == i0:
            raise RenormError("no-convergence", "window collapsed numerically")
        w_vals = (img - i0) / (i1 - i0)
        w_fun = fit(w_vals, UNIT, config.degree_1d, config=config,
                    check_tail=False)
        u = compose1(w_fun, u, config=config)
        off0, off1 = i0, i1
        vals = u(grid)
        d = float(np.max(np.abs(vals - prev_vals)))
        history.append(d)
        if d < tol:
            return u, mult, history
        prev_vals = vals
    raise RenormError("no-convergence", "rescaled iterates did not settle",
                      residuals=history)


# ---------------------------------------------------------------------------
# cylinders and the a priori bounds diagnostic


def central_intervals(f: UnimodalMap, perm: UnimodalPermutation, depth: int,
                      config: Config = DEFAULT):
    """J^{0^n} for n = 0..depth, plus the per-level maps and cycles.

    Returns (centrals, maps, cycles) where centrals[n] is the n-fold central
    interval of f (an interval of J), maps[n] the n-th renormalisation and
    cycles[n] its cycle.  Raises ``depth-unreachable`` when a stage fails.
    """
    centrals = [UNIT]
    maps = [f]
    cycles = []
    # affine h_0 o ... o h_{n-1}: track slope and offset
    slope, off = 1.0, 0.0
    for n in range(depth):
        try:
            g, cyc = renormalise_step(maps[-1], perm, strict=False, config=config)
        except RenormError as exc:
            raise RenormError("depth-unreachable",
                              f"renormalisation failed at stage {n}",
                              stage=n, reason=exc.code) from exc
        cycles.append(cyc)
        s, o = rescale_to_unit(cyc.central, cyc.beta)
        off = off + slope * o
        slope = slope * s
        lo, hi = sorted((off, off + slope))
        centrals.append(Interval(lo, hi))
        maps.append(g)
    return centrals, maps, cycles


def dynamical_cylinders(f: UnimodalMap, central_n: Interval, depth: int,
                        perm: UnimodalPermutation) -> dict:
    """J^{w} = f^{r(w)}(J^{0^n}) for all words of length ``depth``."""
    p = perm.p
    total = p ** depth
    images = [central_n]
    cur = central_n
    for _ in range(1, total):
        cur = _interval_image(f, cur)
        images.append(cur)
    return {w: images[word_orbit_index(w)] for w in Word.all_of_length(depth, p)}


def scope_cylinders(f: UnimodalMap, perm: UnimodalPermutation, depth: int,
                    config: Config = DEFAULT):
    """Pullback cylinders mt^{w0}_0 o .. o mt^{w_{n-1}}_{n-1}(J), all lengths.

    Returns (cylinders, cylinder_funs, scope_lists): interval and Fun1 per
    word of length 1..depth, plus the per-stage scope maps.
    """
    _, maps, cycles = central_intervals(f, perm, depth, config)
    scope_lists = [scope_functions(maps[n], cycles[n], config=config)
                   for n in range(depth)]
    p = perm.p
    cylinders: dict = {}
    cylinder_funs: dict = {}
    frontier = {Word((), p): None}
    for level in range(depth):
        nxt = {}
        for word, fun in frontier.items():
            for w in range(p):
                mt = scope_lists[level][w]
                new_fun = mt if fun is None else compose1(fun, mt, config=config)
                new_word = Word(word.digits + (w,), p)
                a, b = float(new_fun(0.0)), float(new_fun(1.0))
                cylinders[new_word] = Interval(min(a, b), max(a, b))
                cylinder_funs[new_word] = new_fun
                nxt[new_word] = new_fun
        frontier = nxt
    return cylinders, cylinder_funs, scope_lists


@dataclass
class AprioriReport:
    depth: int
    distortion_L: float
    geometry_K: float
    k0: float
    k1: float
    bounds_ok: bool
    per_depth: dict


def apriori_bounds_report(f: UnimodalMap, perm: UnimodalPermutation, depth: int,
                          config: Config = DEFAULT) -> AprioriReport:
    """Measured real-bounds data over dynamical cylinders up to ``depth``.

    L is the largest distortion of f^i over a cylinder (i up to the full
    return time of the cylinder's level), K the largest sibling length ratio,
    and k0 <= k1 the extreme child/parent length ratios.  The report flags
    whether 0 < k0 <= k1 < 1 held over everything measured.
    """
    centrals, _, _ = central_intervals(f, perm, depth, config)
    p = perm.p
    df = f.deriv()
    L = 0.0
    K = 1.0
    k0, k1 = np.inf, 0.0
    per_depth = {}
    prev = {Word((), p): UNIT}
    for n in range(1, depth + 1):
        cyl = dynamical_cylinders(f, centrals[n], n, perm)
        # child/parent ratios and sibling ratios
        ratios = []
        for word, iv in cyl.items():
            parent = prev[Word(word.digits[:-1], p)]
            ratios.append(iv.length / parent.length)
        sib_K = 1.0
        for word, iv in cyl.items():
            for w in range(p):
                sib = cyl[Word(word.digits[:-1] + (w,), p)]
                sib_K = max(sib_K, iv.length / sib.length)
        k0 = min(k0, min(ratios))
        k1 = max(k1, max(ratios))
        K = max(K, sib_K)
        # distortion of iterates along cylinders
        worst = 0.0
        for word, iv in cyl.items():
            q = word_transfer_time(word)
            xs = iv.grid(8)
            logd = np.zeros_like(xs)
            pts = xs.copy()
            for i in range(p ** n - q):
                d = np.abs(df(pts))
                d = np.maximum(d, 1e-300)
                logd += np.log(d)
                pts = f(pts)
                worst = max(worst, float(logd.max() - logd.min()))
        L = max(L, worst)
        per_depth[n] = {"k0": float(min(ratios)), "k1": float(max(ratios)),
                        "K": float(sib_K), "L": float(worst)}
        prev = cyl
    ok = 0.0 < k0 <= k1 < 1.0
    return AprioriReport(depth, float(L), float(K), float(k0), float(k1),
                         bool(ok), per_depth)


def induced_permutation(f: UnimodalMap, perm: UnimodalPermutation,
                        config: Config = DEFAULT) -> UnimodalPermutation:
    """The length-p^2 type realized by the depth-2 dynamical cylinders of f.

    The forward cylinders f^{r(w)}(J^{00}) carry the odometer exactly, so the
    induced permutation is the spatial form of w -> 1 + w on them.
    """
    centrals, _, _ = central_intervals(f, perm, 2, config)
    cyl = dynamical_cylinders(f, centrals[2], 2, perm)
    p = perm.p
    order = sorted(cyl, key=lambda w: cyl[w].mid)
    rank = {w: i for i, w in enumerate(order)}
    pm = tuple(rank[adding_machine_successor(order[i])] for i in range(p * p))
    return UnimodalPermutation(p * p, pm)

