"""Newton solver for the renormalisation fixed point and its linearisation.

The operator acts on truncated Chebyshev coefficient vectors of unimodal
maps normalised by f(0) = f(1) = 0 on [0, 1].  The renormalisation of an
iterate tracks the boundary periodic orbit by Newton continuation from the
previous iterate, which keeps the coefficient-space operator smooth; the
full combinatorial cycle search only runs once on the seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cheb import Fun1, Interval, UNIT, cheb_nodes, fit
from .config import DEFAULT, Config
from .errors import RenormError
from .unimodal import (RenormCycle, UnimodalMap, UnimodalPermutation,
                       detect_renormalisable, rescale_to_unit, scope_functions,
                       scope_fixed_point, _fp_scalar, _newton_periodic)


@dataclass
class FixedPointResult:
    f_star: UnimodalMap
    sigma: float
    residual: float
    newton_iterations: int
    perm: UnimodalPermutation
    cycle: RenormCycle
    degree: int
    convex_on_J1: Optional[bool] = None     # diagnostic only


@dataclass
class SpectrumResult:
    unstable_eigenvalue: float
    eigenfunction: Fun1
    residual: float
    top_magnitudes: tuple


def _bare_map(coeffs) -> UnimodalMap:
    return UnimodalMap(Fun1(UNIT, coeffs), float("nan"), float("nan"))


class _TrackedOperator:
    """R in coefficient space with Newton-continued boundary orbit."""

    def __init__(self, perm: UnimodalPermutation, seed: UnimodalMap,
                 degree: int, config: Config):
        self.perm = perm
        self.degree = degree
        self.config = config
        cyc = detect_renormalisable(seed, perm, config)
        if cyc is None:
            raise RenormError("not-renormalisable",
                              "seed map has no cycle of the requested type")
        self.beta = cyc.beta
        self.beta_hat = cyc.beta_hat
        self.nodes = cheb_nodes(UNIT, degree)

    def project(self, f: UnimodalMap) -> np.ndarray:
        return fit(f.fun(self.nodes), UNIT, self.degree,
                   config=self.config, check_tail=False).coeffs

    def __call__(self, coeffs, update_state: bool = False) -> np.ndarray:
        f = _bare_map(coeffs)
        p = self.perm.p
        beta = _newton_periodic(f, self.beta, p)
        beta_hat = _newton_periodic(f, self.beta_hat, p, target=beta)
        if not 0.0 < min(beta, beta_hat) and max(beta, beta_hat) < 1.0:
            raise RenormError("newton-failed", "boundary orbit left the domain")
        central = Interval(min(beta, beta_hat), max(beta, beta_hat))
        slope, off = rescale_to_unit(central, beta)
        x = off + slope * self.nodes
        for _ in range(p):
            x = f.fun(x)
        g_vals = (x - off) / slope
        out = fit(g_vals, UNIT, self.degree, config=self.config,
                  check_tail=False).coeffs
        if update_state:
            self.beta, self.beta_hat = beta, beta_hat
            self.central = central
        return out

    def jacobian(self, coeffs, workers: int = 1) -> np.ndarray:
        h = self.config.fd_step
        base = self(coeffs)
        n = len(coeffs)

        def column(k):
            pert = coeffs.copy()
            pert[k] += h
            return (self(pert) - base) / h

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                cols = list(pool.map(column, range(n)))
        else:
            cols = [column(k) for k in range(n)]
        return np.column_stack(cols)


def default_degree(perm: UnimodalPermutation, config: Config = DEFAULT) -> int:
    return (config.fixedpoint_degree_doubling if perm.p == 2
            else config.fixedpoint_degree_general)


def solve_fixed_point(perm: UnimodalPermutation, seed: UnimodalMap,
                      tol: float = 1e-11, degree: int | None = None,
                      config: Config = DEFAULT, workers: int = 1
                      ) -> FixedPointResult:
    """Solve R f = f by Newton in coefficient space.

    Raises ``newton-failed`` (with the last iterate attached) when the
    residual stops decreasing or renormalisability is lost along the way.
    """
    if degree is None:
        degree = default_degree(perm, config)
    op = _TrackedOperator(perm, seed, degree, config)
    c = op.project(seed)
    ident = np.eye(len(c))
    last_res = np.inf
    for it in range(1, config.newton_max_iter + 1):
        try:
            r = op(c, update_state=True) - c
        except RenormError as exc:
            raise RenormError("newton-failed",
                              "renormalisability lost during iteration",
                              iteration=it, reason=exc.code,
                              last_iterate=c.tolist()) from exc
        res = _proxy_sup(r)
        if res < tol:
            return _finish(op, c, res, it, perm, degree, config)
        if res > 10.0 * max(last_res, 1e3 * tol) and it > 3:
            raise RenormError("newton-failed", "residual diverged",
                              iteration=it, residual=res,
                              last_iterate=c.tolist())
        last_res = min(last_res, res)
        J = op.jacobian(c, workers=workers)
        try:
            step = np.linalg.solve(J - ident, -r)
        except np.linalg.LinAlgError as exc:
            raise RenormError("newton-failed", "singular Newton system",
                              iteration=it) from exc
        c = c + step
    # final residual check
    r = op(c) - c
    res = _proxy_sup(r)
    if res < tol:
        return _finish(op, c, res, config.newton_max_iter, perm, degree, config)
    raise RenormError("newton-failed", "no convergence within iteration budget",
                      residual=res, last_iterate=c.tolist())


def _proxy_sup(coeff_residual: np.ndarray) -> float:
    """Sup-norm bound of a coefficient-space residual."""
    return float(np.sum(np.abs(coeff_residual)))


def _finish(op, c, res, iters, perm, degree, config) -> FixedPointResult:
    f_star = UnimodalMap.from_fun(Fun1(UNIT, c), strict=True, config=config)
    cycle = detect_renormalisable(f_star, perm, config)
    if cycle is None:
        raise RenormError("newton-failed", "converged point is not renormalisable")
    sigma = cycle.central.length
    if not 0.0 < sigma < 1.0:
        raise RenormError("newton-failed", "scaling ratio out of range",
                          sigma=sigma)
    # convexity diagnostic on J^1 (recorded, never asserted)
    xs = cycle.intervals[1].grid(64)
    d2 = f_star.fun.deriv(2)(xs)
    convex = bool(np.all(d2 > 0.0) or np.all(d2 < 0.0))
    return FixedPointResult(f_star, float(sigma), res, iters, perm, cycle,
                            degree, convex)


# ---------------------------------------------------------------------------
# spectrum


def _gauge_basis(n: int) -> np.ndarray:
    """Orthonormal basis of the two directions violating f(0) = f(1) = 0."""
    g1 = np.ones(n)
    g2 = np.array([(-1.0) ** k for k in range(n)])
    g1 /= np.linalg.norm(g1)
    g2 -= g1 * (g1 @ g2)
    g2 /= np.linalg.norm(g2)
    return np.column_stack([g1, g2])


def operator_spectrum(fp: FixedPointResult, perm: UnimodalPermutation | None = None,
                      config: Config = DEFAULT, workers: int = 1,
                      max_iter: int = 400) -> SpectrumResult:
    """Dominant eigenvalue of the finite-difference linearisation at f_star.

    Power iteration on the Jacobian with the two normalisation-violating
    directions deflated; the next magnitudes (diagnostic) come from a dense
    eigen-decomposition of the deflated matrix.
    """
    if fp.residual > 1e-8:
        raise RenormError("spectrum-failed", "fixed point residual too large",
                          residual=fp.residual)
    perm = perm or fp.perm
    op = _TrackedOperator(perm, fp.f_star, fp.degree, config)
    c = op.project(fp.f_star)
    J = op.jacobian(c, workers=workers)
    G = _gauge_basis(len(c))
    P = np.eye(len(c)) - G @ G.T
    JP = P @ J @ P

    rng = np.random.default_rng(12345)
    v = P @ rng.standard_normal(len(c))
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(max_iter):
        w = JP @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise RenormError("spectrum-failed", "power iteration collapsed")
        w /= nw
        lam_new = float(w @ (JP @ w)) / float(w @ w)
        if abs(lam_new - lam) < 1e-12 * max(1.0, abs(lam_new)) and it > 4:
            lam = lam_new
            v = w
            break
        lam, v = lam_new, w
    else:
        raise RenormError("spectrum-failed", "power iteration stagnated",
                          eigenvalue=lam)
    resid = float(np.linalg.norm(JP @ v - lam * v) / np.linalg.norm(v))
    eigenfun = Fun1(UNIT, v)
    mags = np.sort(np.abs(np.linalg.eigvals(JP)))[::-1][:5]
    return SpectrumResult(float(lam), eigenfun, resid, tuple(float(m) for m in mags))


# ---------------------------------------------------------------------------
# convergence probe


@dataclass
class RateProbe:
    distances: list
    hausdorff: list
    rho: Optional[float]
    at_fixed_point: bool = False
    stages: int = 0


def _hausdorff_1d(ivs_a, ivs_b) -> float:
    worst = 0.0
    for a, b in zip(ivs_a, ivs_b):
        worst = max(worst, abs(a.lo - b.lo), abs(a.hi - b.hi))
    return worst


def convergence_rate_probe(f: UnimodalMap, perm: UnimodalPermutation, n: int,
                           f_star: UnimodalMap | None = None,
                           config: Config = DEFAULT) -> RateProbe:
    """Geometric rate of R^k f toward the fixed point.

    Returns sup-norm distances, cycle Hausdorff distances, and a fitted rate
    from the decaying part of the sequence.  ``insufficient-data`` when
    fewer than three usable stages exist.
    """
    from .unimodal import renormalise_step
    if f_star is None:
        f_star = solve_fixed_point(perm, f, config=config).f_star
    star_cycle = detect_renormalisable(f_star, perm, config)
    xs = UNIT.grid(257)
    ref = f_star.fun(xs)
    cur = f
    distances, hausdorff = [], []
    for _ in range(n + 1):
        distances.append(float(np.max(np.abs(cur.fun(xs) - ref))))
        cyc = detect_renormalisable(cur, perm, config)
        if cyc is None:
            break
        hausdorff.append(_hausdorff_1d(cyc.intervals, star_cycle.intervals))
        try:
            cur, _ = renormalise_step(cur, perm, strict=False, config=config)
        except RenormError:
            break
    if all(d < 1e-10 for d in distances):
        return RateProbe(distances, hausdorff, None, at_fixed_point=True,
                         stages=len(distances))
    # fit on the monotone-decreasing stretch above the noise floor
    usable = [d for d in distances if d > 1e-12]
    k = 1
    while k < len(usable) and usable[k] < usable[k - 1]:
        k += 1
    usable = usable[:k]
    if len(usable) < 3:
        raise RenormError("insufficient-data", "fewer than 3 usable stages",
                          distances=distances)
    ks = np.arange(len(usable))
    rho = float(np.exp(np.polyfit(ks, np.log(usable), 1)[0]))
    return RateProbe(distances, hausdorff, rho, stages=len(distances))
