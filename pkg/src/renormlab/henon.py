"""Henon-like maps F = (f -/+ eps, pi_x) and their renormalisation.

The coordinate change straightening F^p over the central box is computed
row-wise: for each height y the horizontal inverse solves
phi^{p-1}(u, y) = x on the monotone branch inherited from the unimodal
cycle, so the central box itself is never materialised.

The renormalised thickening is produced by a cancellation-free difference
scheme: every quantity that vanishes with eps is computed as a stable
difference of Chebyshev evaluations (never as a subtraction of O(1)
numbers).  This keeps the super-exponential decay of |eps_n| visible far
below machine epsilon, which the asymptotic diagnostics depend on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .cheb import (Affine2, Box, Fun1, Fun2, Interval, UNIT, UNIT_BOX,
                   cheb_nodes, fit, fit2, fit_grid_2d)
from .config import DEFAULT, Config
from .errors import RenormError
from .unimodal import (RenormCycle, UnimodalMap, UnimodalPermutation,
                       detect_renormalisable, renormalise, rescale_to_unit)
from . import _kernels as K


# ---------------------------------------------------------------------------
# thickenings


ZERO_EPS_TOL = 1e-300


class Thickening:
    """eps(x, y) >= 0 on the box with eps(x, 0) = 0, bounded by eps_bar."""

    __slots__ = ("eps", "eps_bar", "sup", "is_zero")

    def __init__(self, eps: Fun2, eps_bar: float | None = None,
                 validate: bool = True):
        self.eps = eps
        self.sup = eps.sup_abs()
        self.is_zero = self.sup <= ZERO_EPS_TOL
        self.eps_bar = float(eps_bar) if eps_bar is not None else self.sup
        if validate:
            self.validate(self.sup)

    def validate(self, sup: float | None = None) -> None:
        eps = self.eps
        if sup is None:
            sup = eps.sup_abs()
        scale = max(1.0, sup)
        xs = eps.box.x.grid(64)
        trace = eps(xs, np.full_like(xs, eps.box.y.lo))
        if np.max(np.abs(trace)) > 1e-12 * scale:
            raise RenormError("parametrisation-failure",
                              "thickening does not vanish on y = 0",
                              worst=float(np.max(np.abs(trace))))
        ys = eps.box.y.grid(48)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        vals = eps(X, Y)
        if np.min(vals) < -max(1e-12, 1e-9 * sup):
            raise RenormError("parametrisation-failure",
                              "thickening takes negative values",
                              worst=float(np.min(vals)))
        if sup > self.eps_bar * (1.0 + 1e-9) + 1e-15:
            raise RenormError("parametrisation-failure",
                              "sup |eps| exceeds the declared bound",
                              sup=sup, bound=self.eps_bar)

    @staticmethod
    def zero(box: Box = UNIT_BOX) -> "Thickening":
        return Thickening(Fun2(box, np.zeros((1, 1))), 0.0, validate=False)

    @staticmethod
    def linear_y(c: float, box: Box = UNIT_BOX) -> "Thickening":
        fun = fit2(lambda x, y: c * (y - box.y.lo), box, degrees=(1, 1),
                   check_tail=False)
        return Thickening(project_zero_trace(fun), abs(c) * box.y.length)

    @staticmethod
    def separable(c: float, g: Callable, box: Box = UNIT_BOX,
                  degrees=None, config: Config = DEFAULT) -> "Thickening":
        """eps(x, y) = c * (y - y_lo) * g(x) for a positive profile g."""
        if degrees is None:
            degrees = (config.degree_2d[0], max(2, config.degree_2d[1]))
        fun = fit2(lambda x, y: c * (y - box.y.lo) * g(x), box,
                   degrees=degrees, check_tail=False)
        return Thickening(project_zero_trace(fun))

    @staticmethod
    def from_matrix(coeffs, box: Box = UNIT_BOX,
                    eps_bar: float | None = None) -> "Thickening":
        return Thickening(project_zero_trace(Fun2(box, coeffs)), eps_bar)


def project_zero_trace(fun: Fun2) -> Fun2:
    """Subtract the y = y_lo trace in coefficient space (exact zero trace)."""
    C = fun.coeffs.copy()
    ny = C.shape[1]
    # T_j at the lower edge of the y domain (unit coordinate -1)
    sign = np.array([(-1.0) ** j for j in range(ny)])
    trace = C @ sign
    C[:, 0] -= trace
    return Fun2(fun.box, C)


# ---------------------------------------------------------------------------
# the maps


class HenonLikeMap:
    """F(x, y) = (f(x) - s * eps(x, y), x) with s = +1 preserving, -1 reversing.

    ``orientation = +1`` is the orientation preserving class (phi = f - eps,
    det DF = + d_y eps); ``-1`` the reversing one (phi = f + eps).
    """

    __slots__ = ("f", "thick", "orientation", "box", "_cache")

    def __init__(self, f: UnimodalMap, thick: Thickening | None = None,
                 orientation: int = 1, box: Box = UNIT_BOX,
                 validate: bool = True):
        self.f = f
        self.thick = thick if thick is not None else Thickening.zero(box)
        self.orientation = int(orientation)
        self.box = box
        self._cache = {}
        if self.orientation not in (1, -1):
            raise RenormError("bad-input", "orientation must be +1 or -1")
        if validate:
            self.validate()

    # -- cached derivative funs
    def _d(self, name):
        if name not in self._cache:
            if name == "df":
                self._cache[name] = self.f.fun.deriv()
            elif name == "eps_x":
                self._cache[name] = self.thick.eps.deriv(axis=0)
            elif name == "eps_y":
                self._cache[name] = self.thick.eps.deriv(axis=1)
        return self._cache[name]

    @property
    def eps(self) -> Fun2:
        return self.thick.eps

    @property
    def is_degenerate(self) -> bool:
        return self.thick.is_zero

    def validate(self) -> None:
        if self.is_degenerate:
            return
        # sampled embedding check: phi(x, .) strictly monotone in y
        xs = self.box.x.grid(24)
        ys = self.box.y.grid(24)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        dy = self._d("eps_y")(X, Y)
        sup = self.thick.eps.sup_abs()
        floor = -1e-8 * max(sup, 1e-30) / self.box.y.length
        if np.min(dy) < floor and np.max(dy) > -floor:
            raise RenormError("not-injective",
                              "d_y eps changes sign; map is not an embedding",
                              min=float(np.min(dy)), max=float(np.max(dy)))

    def phi(self, x, y):
        base = self.f.fun(x)
        if self.is_degenerate:
            return base
        return base - self.orientation * self.thick.eps(x, y)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.array([self.phi(z[0], z[1]), z[0]])

    def derivative(self, z):
        x, y = float(z[0]), float(z[1])
        dphix = self._d("df")(x)
        dphiy = 0.0
        if not self.is_degenerate:
            dphix = dphix - self.orientation * self._d("eps_x")(x, y)
            dphiy = -self.orientation * self._d("eps_y")(x, y)
        return np.array([[dphix, dphiy], [1.0, 0.0]])

    def jacobian(self, z):
        """det DF = orientation * d_y eps."""
        if self.is_degenerate:
            return 0.0
        return float(self.orientation
                     * self._d("eps_y")(float(z[0]), float(z[1])))

    def iterate(self, z, k: int, margin: float | None = None):
        """F^k(z); raises ``domain-escape`` at the offending step."""
        if margin is None:
            margin = 0.05 * self.box.x.length
        z = np.asarray(z, dtype=float)
        for step in range(k):
            if not self.box.contains(z, margin=margin):
                raise RenormError("domain-escape", "orbit left the domain",
                                  step=step, point=z.tolist())
            z = self(z)
        return z

    def orbit(self, z, nsteps: int) -> np.ndarray:
        """Full orbit as an (nsteps + 1, 2) array (kernel accelerated)."""
        fc = self.f.fun.coeffs
        dom = self.f.fun.domain
        eps = self.thick.eps
        if self.is_degenerate:
            ec = np.zeros((1, 1))
            bx, by = self.box.x, self.box.y
        else:
            ec = eps.coeffs
            bx, by = eps.box.x, eps.box.y
        return K.henon_orbit(fc, dom.lo, dom.hi, ec, bx.lo, bx.hi, by.lo,
                             by.hi, float(self.orientation),
                             float(z[0]), float(z[1]), int(nsteps))

    # vectorised one-step on arrays
    def step_arrays(self, x, y):
        return self.phi(x, y), x

    def phi_k(self, x, y, k: int):
        """phi^k(x, y) = pi_x F^k(x, y) on arrays."""
        for _ in range(k):
            x, y = self.step_arrays(x, y)
        return x

    def dphi_k(self, x, y, k: int):
        """(phi^k, d_u phi^k, d_y phi^k) along arrays by forward chain rule."""
        vx = np.ones_like(np.asarray(x, dtype=float))
        vy = np.zeros_like(vx)
        wx = np.zeros_like(vx)
        wy = np.ones_like(vx)
        for _ in range(k):
            a = self._d("df")(x)
            b = 0.0
            if not self.is_degenerate:
                a = a - self.orientation * self._d("eps_x")(x, y)
                b = -self.orientation * self._d("eps_y")(x, y)
            vx, vy = a * vx + b * vy, vx
            wx, wy = a * wx + b * wy, wx
            x, y = self.step_arrays(x, y)
        return x, vx, wx

    def __repr__(self):
        kind = "degenerate" if self.is_degenerate else \
            f"eps_bar={self.thick.eps_bar:.3g}"
        return f"HenonLikeMap({kind}, orientation={self.orientation:+d})"


def embed_unimodal(f: UnimodalMap) -> HenonLikeMap:
    return HenonLikeMap(f, Thickening.zero(), 1)


def apply_map(F: HenonLikeMap, z, k: int = 1):
    """F^k(z) with domain-escape checking (spec-facing wrapper)."""
    return F.iterate(z, k)


def phi_iterate(F: HenonLikeMap, k: int, degrees=None,
                config: Config = DEFAULT) -> Fun2:
    """phi^k materialised as a Fun2 on the map's box."""
    if degrees is None:
        degrees = (config.degree_2d[0], config.degree_2d[1])
    def values(X, Y):
        return F.phi_k(X, Y, k)
    return fit2(values, F.box, degrees=degrees, check_tail=False)


# ---------------------------------------------------------------------------
# horizontal inverse


def _widen_bracket(F: HenonLikeMap, p: int, y: float, lo: float, hi: float,
                   t_lo: float, t_hi: float, config: Config):
    """Grow [lo, hi] until phi^{p-1}(. , y) covers [t_lo, t_hi] monotonically."""
    step = 0.1 * (hi - lo)
    for _ in range(40):
        us = np.array([lo, hi])
        vals, dus, _ = F.dphi_k(us, np.full(2, y), p - 1)
        if np.sign(dus[0]) != np.sign(dus[1]) or dus[0] == 0.0:
            raise RenormError("near-critical-locus",
                              "branch not monotone over the bracket",
                              bracket=(lo, hi))
        vlo, vhi = sorted(vals)
        if vlo <= t_lo and vhi >= t_hi:
            return lo, hi
        lo = max(F.box.x.lo, lo - step)
        hi = min(F.box.x.hi, hi + step)
    raise RenormError("near-critical-locus",
                      "could not bracket the horizontal inverse",
                      targets=(t_lo, t_hi), bracket=(lo, hi))


def _row_solve(F: HenonLikeMap, p: int, targets, y, lo: float,
               hi: float, config: Config = DEFAULT):
    """Solve phi^{p-1}(u, y) = target on the bracket: vectorised bisection
    narrows the bracket, Newton polishes.  ``y`` may be a scalar or an array
    paired with ``targets``."""
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    ya = np.broadcast_to(np.asarray(y, dtype=float), t.shape).copy()
    va = F.phi_k(a, ya, p - 1) - t
    vb = F.phi_k(b, ya, p - 1) - t
    bad = va * vb > 0.0
    if np.any(bad):
        raise RenormError("near-critical-locus",
                          "target not bracketed on the hinted branch",
                          count=int(np.sum(bad)))
    for _ in range(30):
        m = 0.5 * (a + b)
        vm = F.phi_k(m, ya, p - 1) - t
        left = va * vm <= 0.0
        b = np.where(left, m, b)
        a = np.where(left, a, m)
        va = np.where(left, va, vm)
    u = 0.5 * (a + b)
    for _ in range(4):
        val, du, _ = F.dphi_k(u, ya, p - 1)
        if np.min(np.abs(du)) < config.deriv_floor:
            raise RenormError("near-critical-locus",
                              "derivative below floor near the root")
        u = u - (val - t) / du
        u = np.clip(u, lo, hi)
    return u


def horizontal_inverse(F: HenonLikeMap, p: int, x_target: float, y: float,
                       bracket=None, config: Config = DEFAULT) -> float:
    """u with phi^{p-1}(u, y) = x_target on the hinted monotone branch.

    ``bracket`` defaults to the unimodal cycle interval J^1 of F's unimodal
    part, inflated; it is widened on demand while the branch stays monotone.
    """
    if bracket is None:
        from .unimodal import detect_renormalisable as _det
        cyc = None
        for perm_guess in _default_perms(p):
            cyc = _det(F.f, perm_guess, config)
            if cyc is not None:
                break
        if cyc is None:
            raise RenormError("near-critical-locus",
                              "no branch hint available (map not renormalisable)")
        J1 = cyc.intervals[1]
        bracket = (J1.lo - 0.1 * J1.length, J1.hi + 0.1 * J1.length)
    lo, hi = _widen_bracket(F, p, y, bracket[0], bracket[1],
                            x_target, x_target, config)
    return float(_row_solve(F, p, x_target, y, lo, hi, config)[0])


def _default_perms(p: int):
    from .unimodal import UnimodalPermutation
    if p == 2:
        return [UnimodalPermutation.doubling()]
    if p == 3:
        return [UnimodalPermutation.tripling()]
    return []


# ---------------------------------------------------------------------------
# pre-renormalisation


@dataclass
class PreRenorm:
    """The straightened return map G = H o F^p o H-bar over the central box."""

    F: HenonLikeMap
    perm: UnimodalPermutation
    cycle: RenormCycle                  # of the unimodal part
    alpha: float                        # diagonal fixed point coordinate
    beta: float                         # second boundary point of J0
    central: Interval                   # J0 of G
    bracket: tuple                      # u bracket for the horizontal inverse
    sigma: float                        # scaling ratio |J0|
    rescale: Affine2                    # I: B0_diag -> B (diagonal pair)
    a_slope: float                      # A: J -> J0 with A(0) = alpha
    a_offset: float

    @property
    def central_box_diag(self) -> Box:
        return Box(self.central, self.central)

    @property
    def p(self) -> int:
        return self.perm.p

    # -- scalar/vector evaluation ------------------------------------------
    def u_solve(self, x, y, config: Config = DEFAULT):
        return _row_solve(self.F, self.p, x, y, self.bracket[0],
                          self.bracket[1], config)

    def v_values(self, x, y, config: Config = DEFAULT):
        """(u, v) with V(x, y) = (x, v); y scalar or paired array."""
        u = self.u_solve(x, y, config)
        if self.p == 2:
            return u, u.copy()
        ya = np.broadcast_to(np.asarray(y, dtype=float), u.shape).copy()
        v = self.F.phi_k(u, ya, self.p - 2)
        return u, v

    def g_x(self, x, y, config: Config = DEFAULT):
        """pi_x G(x, y) on arrays (y scalar or paired with x)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        _, v = self.v_values(x, y, config)
        return self.F.phi_k(x.copy(), v, self.p)

    def g_point(self, z, config: Config = DEFAULT):
        """G(z) = (pi_x G, x)."""
        gx = self.g_x(np.asarray([z[0]], dtype=float), float(z[1]), config)
        return np.array([float(gx[0]), float(z[0])])


def find_central_box(F: HenonLikeMap, perm: UnimodalPermutation,
                     config: Config = DEFAULT) -> PreRenorm:
    """Locate the diagonal fixed point and the invariant central box of G.

    Follows the degenerate skeleton: the unimodal cycle provides the branch
    hint and the Newton seeds; the diagonal fixed point continues the
    boundary periodic point, the second endpoint is the g_- preimage of the
    fixed point across the critical region.
    """
    cycle = detect_renormalisable(F.f, perm, config)
    if cycle is None:
        raise RenormError("not-renormalisable",
                          "unimodal part has no cycle of this type")
    p = perm.p
    J1 = cycle.intervals[1]
    pad = 0.1 * J1.length
    bracket = (max(F.box.x.lo, J1.lo - pad), min(F.box.x.hi, J1.hi + pad))
    targets_lo = cycle.central.lo - 0.2 * cycle.central.length
    targets_hi = cycle.central.hi + 0.2 * cycle.central.length
    bracket = _widen_bracket(F, p, cycle.central.mid, bracket[0], bracket[1],
                             targets_lo, targets_hi, config)

    pre0 = PreRenorm(F, perm, cycle, float("nan"), float("nan"),
                     cycle.central, bracket, cycle.central.length,
                     _diag_affine(cycle.central, cycle.beta),
                     *rescale_to_unit(cycle.central, cycle.beta))

    # diagonal fixed point by Newton on pi_x G(x, x) - x, seeded at beta
    def diag_res(x):
        return float(pre0.g_x(np.asarray([x]), x, config)[0]) - x

    alpha = _scalar_newton(diag_res, cycle.beta, config,
                           err_code="no-diagonal-fixed-point")

    # second endpoint: g_-(x) = pi_x G(x, alpha) = alpha across the fold
    def gm_res(x):
        return float(pre0.g_x(np.asarray([x]), alpha, config)[0]) - alpha

    beta = _scalar_newton(gm_res, cycle.beta_hat, config,
                          err_code="no-diagonal-fixed-point")
    if (alpha - F.f.c0) * (beta - F.f.c0) >= 0.0:
        raise RenormError("no-diagonal-fixed-point",
                          "endpoints landed on one side of the fold",
                          alpha=alpha, beta=beta)
    central = Interval(min(alpha, beta), max(alpha, beta))
    sigma = central.length
    slope, offset = rescale_to_unit(central, alpha)
    inv = 1.0 / slope
    rescale_map = Affine2(np.diag([inv, inv]),
                          np.array([-offset * inv, -offset * inv]))
    pre = replace(pre0, alpha=alpha, beta=beta, central=central, sigma=sigma,
                  rescale=rescale_map, a_slope=slope, a_offset=offset)

    _check_invariance(pre, config)
    _check_critical_margin(pre, config)
    return pre


def _diag_affine(central: Interval, beta: float) -> Affine2:
    slope, offset = rescale_to_unit(central, beta)
    inv = 1.0 / slope
    return Affine2(np.diag([inv, inv]), np.array([-offset * inv, -offset * inv]))


def _scalar_newton(fn, x0: float, config: Config, err_code: str,
                   tol: float = 1e-12, max_iter: int = 40) -> float:
    x = float(x0)
    h = 1e-7
    for _ in range(max_iter):
        r = fn(x)
        d = (fn(x + h) - r) / h
        if d == 0.0:
            break
        xn = x - r / d
        if abs(xn - x) < tol:
            return xn
        x = xn
    if abs(fn(x)) < 1e-9:
        return x
    raise RenormError(err_code, "scalar Newton failed", seed=x0, last=x)


def _check_invariance(pre: PreRenorm, config: Config) -> None:
    """pi_x G(boundary of B0_diag) must stay inside J0.

    The corner at the diagonal fixed point grazes the boundary and, for even
    periods, leaks outward by the order of the straightened map's
    y-variation (an eps_bar^p effect), so the tolerance tracks that measured
    variation rather than demanding strict containment at machine precision.
    """
    n = max(16, config.boundary_samples // 4)
    J = pre.central
    xs = J.grid(n)
    g_lo = pre.g_x(xs, J.lo, config)
    g_hi = pre.g_x(xs, J.hi, config)
    y_var = float(np.max(np.abs(g_hi - g_lo)))
    tol = 1e-9 * max(1.0, J.length) + 2.0 * y_var
    worst = max(float(np.max(g_lo - J.hi)), float(np.max(J.lo - g_lo)),
                float(np.max(g_hi - J.hi)), float(np.max(J.lo - g_hi)))
    ys = J.grid(n)[1:-1]
    sides_x = np.concatenate([np.full_like(ys, J.lo), np.full_like(ys, J.hi)])
    sides_y = np.concatenate([ys, ys])
    g = pre.g_x(sides_x, sides_y, config)
    worst = max(worst, float(np.max(g - J.hi)), float(np.max(J.lo - g)))
    # critical value of the second bounding curve must lie inside as well
    xs_fine = J.grid(64)
    gplus = pre.g_x(xs_fine, pre.beta, config)
    worst = max(worst, float(np.max(gplus - J.hi)), float(np.max(J.lo - gplus)))
    if worst > tol:
        raise RenormError("not-invariant",
                          "central box is not invariant under G",
                          excess=worst, tolerance=tol)


def _check_critical_margin(pre: PreRenorm, config: Config) -> None:
    """Distance from the critical locus of phi^{p-1} to the solved branch."""
    F, p, J = pre.F, pre.p, pre.central
    gamma = config.gamma_margin_frac * F.box.x.length
    ys = J.grid(5)
    u_edges = []
    for y in ys:
        u = pre.u_solve(np.array([J.lo, J.hi]), float(y), config)
        u_edges.append((float(np.min(u)), float(np.max(u))))
    for y, (ulo, uhi) in zip(ys, u_edges):
        for edge, direction in ((ulo, -1.0), (uhi, 1.0)):
            dist = _locus_distance(F, p, edge, float(y), direction, gamma)
            if dist < 0.5 * gamma:
                raise RenormError("critical-locus-proximity",
                                  "critical locus too close to the central box",
                                  distance=dist, margin=0.5 * gamma, y=float(y))


def _locus_distance(F: HenonLikeMap, p: int, u0: float, y: float,
                    direction: float, gamma: float) -> float:
    """March outward until d_u phi^{p-1} changes sign; distance to that zero."""
    step = gamma / 8.0
    _, d_prev, _ = F.dphi_k(np.array([u0]), np.array([y]), p - 1)
    d_prev = float(d_prev[0])
    u = u0
    for _ in range(24):
        un = u + direction * step
        if un < F.box.x.lo or un > F.box.x.hi:
            return abs(un - u0)
        _, d, _ = F.dphi_k(np.array([un]), np.array([y]), p - 1)
        d = float(d[0])
        if d == 0.0 or np.sign(d) != np.sign(d_prev):
            # bisect to the locus
            a, b = u, un
            for _ in range(40):
                m = 0.5 * (a + b)
                _, dm, _ = F.dphi_k(np.array([m]), np.array([y]), p - 1)
                if np.sign(float(dm[0])) == np.sign(d_prev):
                    a = m
                else:
                    b = m
            return abs(0.5 * (a + b) - u0)
        u, d_prev = un, d
    return abs(u - u0)       # no locus within 3 gamma: far enough


def pre_renormalise(F: HenonLikeMap, pre: PreRenorm, z,
                    config: Config = DEFAULT):
    """G(z) for z in the central diagonal box."""
    z = np.asarray(z, dtype=float)
    if not pre.central_box_diag.contains(z, margin=1e-9):
        raise RenormError("domain-escape", "point outside the central box",
                          point=z.tolist())
    return pre.g_point(z, config)


def pre_renormalise_fun(F: HenonLikeMap, pre: PreRenorm, degrees=None,
                        config: Config = DEFAULT) -> Fun2:
    """pi_x G materialised as a Fun2 on B0_diag (second coordinate is x)."""
    if degrees is None:
        degrees = config.degree_2d
    box = pre.central_box_diag
    xs = cheb_nodes(box.x, degrees[0])
    ys = cheb_nodes(box.y, degrees[1])
    vals = np.empty((len(xs), len(ys)))
    for j, y in enumerate(ys):
        vals[:, j] = pre.g_x(xs, float(y), config)
    return fit_grid_2d(vals, box)


# ---------------------------------------------------------------------------
# the renormalisation operator


@dataclass
class RenormStep:
    F_next: HenonLikeMap
    pre: PreRenorm
    eps_sup_before: float
    eps_sup_after: float
    growth_constant: float              # measured C in |eps'| <= C |eps|^p
    orientation_next: int


def _jacobian_g_row(F: HenonLikeMap, pre: PreRenorm, X, Y: float,
                    config: Config = DEFAULT):
    """Jac G(X, Y) along a row: Jac F^p at H-bar times the H-Jacobian ratio.

    Every factor is either a direct evaluation of d_y eps (tiny but
    relatively exact) or an O(1) derivative ratio, so the product keeps full
    relative accuracy at any thickening magnitude; d_y (pi_x G) = -Jac G
    then recovers the renormalised thickening by spectral integration
    without subtractive cancellation.
    """
    p = pre.p
    X = np.atleast_1d(np.asarray(X, dtype=float))
    u = pre.u_solve(X, Y, config)
    ya = np.full_like(u, Y)
    eps_y = F._d("eps_y")
    # Jac F^p along the orbit of (u, Y)
    jac = np.ones_like(u)
    x_cur, y_cur = u.copy(), ya.copy()
    for _ in range(p):
        jac = jac * (F.orientation * eps_y(x_cur, y_cur))
        x_cur, y_cur = F.phi(x_cur, y_cur), x_cur
    # d_x phi^{p-1} at H-bar(X, Y) and at F^p(H-bar(X, Y))
    _, den, _ = F.dphi_k(u.copy(), ya.copy(), p - 1)
    _, num, _ = F.dphi_k(x_cur.copy(), y_cur.copy(), p - 1)
    if np.min(np.abs(den)) < config.deriv_floor:
        raise RenormError("near-critical-locus",
                          "H-Jacobian below floor along the row")
    return jac * num / den


def renormalise_henon(F: HenonLikeMap, perm: UnimodalPermutation,
                      pre: PreRenorm | None = None,
                      config: Config = DEFAULT) -> RenormStep:
    """R F = I o G o I-bar with the diagonal rescaling pinned by A(0) = alpha.

    The new unimodal part comes from the boundary row of G; the new
    thickening from stable row differences, so its coefficients stay
    relatively accurate at any magnitude.  The rescaling I must be a
    diagonal pair (A, A) for the image to be Henon-like; among the four
    square-to-square sign patterns only A(0) = alpha gives a unimodal part
    in the normalised space, which is validated and otherwise raises
    ``orientation-failure``.
    """
    if pre is None:
        pre = find_central_box(F, perm, config)
    p = perm.p
    slope, offset = pre.a_slope, pre.a_offset
    Y0 = offset                                   # A(0) = alpha row
    deg1 = config.degree_1d
    nodes = cheb_nodes(UNIT, deg1)
    Xrow = offset + slope * nodes

    g_row = pre.g_x(Xrow, Y0, config)
    f_vals = (g_row - offset) / slope
    f_fun = fit(f_vals, UNIT, deg1, config=config, check_tail=False)
    try:
        f_next = UnimodalMap.from_fun(f_fun, strict=True, config=config)
    except RenormError as exc:
        raise RenormError("orientation-failure",
                          "no diagonal rescaling yields a unimodal part in U",
                          reason=exc.code, detail=str(exc),
                          side=_shape_side(f_fun, config)) from exc

    eps_sup_before = F.thick.sup
    dx_, dy_ = config.degree_2d
    gx_nodes = cheb_nodes(UNIT, dx_)
    gy_nodes = cheb_nodes(UNIT, dy_)
    Xg = offset + slope * gx_nodes
    if F.is_degenerate:
        vals = np.zeros((dx_ + 1, dy_ + 1))
    else:
        integrand = np.empty((dx_ + 1, dy_ + 1))
        for j, yn in enumerate(gy_nodes):
            Yj = offset + slope * float(yn)
            integrand[:, j] = _jacobian_g_row(F, pre, Xg, Yj, config)
        # phi_tilde(x, y) - f_tilde(x) = -int_0^y Jac G(X, A(t)) dt
        # (rescaled), integrated spectrally along y
        from numpy.polynomial import chebyshev as npcheb
        from .cheb import _fit_matrix, _nodes_unit
        C = integrand @ _fit_matrix(dy_ + 1).T         # y coefficients per x
        Ci = npcheb.chebint(C.T, m=1, scl=0.5, axis=0).T
        t_nodes = _nodes_unit(dy_ + 1)
        at_nodes = npcheb.chebval(t_nodes, Ci.T, tensor=True)
        at_zero = npcheb.chebval(-1.0, Ci.T)
        vals = -(at_nodes - at_zero[:, None])
    # orientation: eps >= 0 with phi = f - s eps
    vmax, vmin = float(np.max(vals)), float(np.min(vals))
    scale = max(abs(vmax), abs(vmin), 1e-300)
    if vmax <= 1e-9 * scale:
        orient_next = 1
        eps_vals = -vals
    elif vmin >= -1e-9 * scale:
        orient_next = -1
        eps_vals = vals
    else:
        raise RenormError("orientation-failure",
                          "renormalised thickening changes sign",
                          vmin=vmin, vmax=vmax)
    eps_fun = project_zero_trace(fit_grid_2d(eps_vals, UNIT_BOX))
    thick = Thickening(eps_fun)
    if thick.is_zero:
        thick = Thickening.zero()
        orient_next = 1
    F_next = HenonLikeMap(f_next, thick, orient_next)
    eps_sup_after = thick.sup
    denom = eps_sup_before ** p
    growth = eps_sup_after / denom if denom > 0.0 else 0.0
    return RenormStep(F_next, pre, eps_sup_before, eps_sup_after,
                      growth, orient_next)


# ---------------------------------------------------------------------------
# parametrisation and the variational diagnostic


def _shape_side(f_fun: Fun1, config: Config) -> str:
    """Classify a failed rescaled return map: cascade under- or overshoot."""
    from .cheb import find_roots, identity_fun
    xs = np.linspace(0.0, 1.0, 513)
    vals = f_fun(xs)
    i = int(np.argmax(vals))
    if vals[i] <= xs[i] + 1e-9:
        return "low"                     # hump below the diagonal
    interior = [r for r in find_roots(f_fun - identity_fun(UNIT)) if r > 1e-9]
    if interior and abs(float(f_fun.deriv()(interior[0]))) \
            <= 1.0 + config.expansion_margin:
        return "low"                     # attracting interior fixed point
    return "high"


def extract_parametrisation(phi, box: Box = UNIT_BOX, degrees=None,
                            config: Config = DEFAULT):
    """Split a map (phi, pi_x) into (f, eps, orientation).

    ``phi`` is a callable phi(x, y) (vectorised) or a Fun2.  Returns
    (UnimodalMap-compatible Fun1, Thickening, orientation); raises
    ``parametrisation-failure`` when phi - phi(., 0) changes sign.
    """
    if degrees is None:
        degrees = config.degree_2d
    phi_fun = phi if isinstance(phi, Fun2) else \
        fit2(phi, box, degrees=degrees, check_tail=False)
    xs = cheb_nodes(box.x, degrees[0])
    ys = cheb_nodes(box.y, degrees[1])
    f_vals = phi_fun(xs, np.full_like(xs, box.y.lo))
    f_fun = fit(f_vals, box.x, degrees[0], config=config, check_tail=False)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d = phi_fun(X, Y) - f_vals[:, None]
    vmax, vmin = float(np.max(d)), float(np.min(d))
    scale = max(abs(vmax), abs(vmin))
    if scale <= ZERO_EPS_TOL:
        return f_fun, Thickening.zero(box), 1
    if vmax <= 1e-9 * scale:
        orient, eps_vals = 1, -d
    elif vmin >= -1e-9 * scale:
        orient, eps_vals = -1, d
    else:
        raise RenormError("parametrisation-failure",
                          "phi - f changes sign; eps would not be one-signed",
                          vmin=vmin, vmax=vmax)
    eps_fun = project_zero_trace(fit_grid_2d(eps_vals, box))
    return f_fun, Thickening(eps_fun), orient


@dataclass
class VariationalReport:
    w: int
    residual_sup: float
    eps_bar: float
    constant: float                    # residual / eps_bar^2
    probes: int


def variational_check(F: HenonLikeMap, w: int, n_probe: int = 24,
                      config: Config = DEFAULT) -> VariationalReport:
    """First-order expansion of phi^w against direct iteration.

    phi^w = f^w + L^w - s eps(x, y) prod_{i=1}^{w-1} f'(f^i x) + O(eps_bar^2)
    where L^w collects the along-orbit thickening contributions.  The
    reported constant is the sup residual divided by eps_bar^2.
    """
    if w < 1:
        raise RenormError("bad-input", "need w >= 1", w=w)
    f = F.f
    s = float(F.orientation)
    eps = F.thick.eps
    xs = np.linspace(F.box.x.lo + 0.02, F.box.x.hi - 0.02, n_probe)
    ys = np.linspace(F.box.y.lo, F.box.y.hi, 5)
    df = f.deriv()
    worst = 0.0
    for y in ys:
        ya = np.full_like(xs, y)
        direct = F.phi_k(xs.copy(), ya, w)
        # orbit of f and derivative products
        orbit = [xs.copy()]
        for _ in range(w):
            orbit.append(f.fun(orbit[-1]))
        # L^w: eps along the orbit, weighted by downstream derivative chains
        L = np.zeros_like(xs)
        chain = np.ones_like(xs)
        for j in range(w - 1, 0, -1):
            # term j: eps(f^j x, f^{j-1} x) * prod_{i=j+1}^{w-1} f'(f^i x)
            if j < w - 1:
                chain = chain * df(orbit[j + 1])
            L = L + eps(orbit[j], orbit[j - 1]) * chain
        first = np.ones_like(xs)
        for i in range(1, w):
            first = first * df(orbit[i])
        model = orbit[w] - s * (L + eps(xs, ya) * first)
        worst = max(worst, float(np.max(np.abs(direct - model))))
    eb = F.thick.eps_bar
    const = worst / eb ** 2 if eb > 0 else 0.0
    return VariationalReport(w, worst, eb, const, n_probe * 5)
