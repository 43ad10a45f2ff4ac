"""Tip decompositions, universality, line fields and the rigidity bound.

Derivatives of scope maps at the tip are computed analytically (implicit
differentiation through the horizontal inverse), so the squeeze and tilt
stay relatively accurate at any magnitude of the thickening; finite
differences are kept for tests only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cheb import Fun1, Interval, UNIT, cheb_nodes, fit
from .config import DEFAULT, Config
from .errors import RenormError
from .cantor import RenormTower, ScopeMap, tip
from .fixedpoint import FixedPointResult
from .unimodal import universal_u, scope_fixed_point
from .henon import HenonLikeMap


# ---------------------------------------------------------------------------
# decompositions at the tip


@dataclass
class TipDecomposition:
    n: int
    sigma_n: float            # signed affine eigenvalue
    s_n: float                # signed squeeze
    t_n: float                # signed tilt
    psi: ScopeMap
    tau_in: np.ndarray        # tau_{n+1}
    tau_out: np.ndarray       # Psi_n(tau_{n+1})

    def matrix(self) -> np.ndarray:
        return self.sigma_n * np.array([[self.s_n, self.t_n], [0.0, 1.0]])

    def remainder(self, z) -> float:
        """r_n(z): nonlinear part of Psi_n around the tip, x component."""
        z = np.asarray(z, dtype=float)
        image = self.psi(self.tau_in + z)
        lin = np.linalg.solve(self.matrix(), image - self.tau_out)
        return float(lin[0] - z[0])


def decompose_at_tip(tower: RenormTower, n: int,
                     config: Config | None = None) -> TipDecomposition:
    """Triangular derivative data of Psi_n at tau_{n+1}."""
    if config is None:
        config = tower.config
    taus = tip(tower, config).tau_per_height
    if n + 1 >= len(taus):
        raise RenormError("depth-unreachable", "tower too shallow for height",
                          n=n, depth=tower.depth)
    psi = tower.psi(n)
    tau_in = taus[n + 1]
    sigma, s, t = psi.decomposition_at(tau_in)
    return TipDecomposition(n, sigma, s, t, psi, tau_in, psi(tau_in))


@dataclass
class CompositeDecomposition:
    m: int
    n: int
    sigma_mn: float
    s_mn: float
    t_mn: float
    parts: tuple

    def matrix(self) -> np.ndarray:
        return self.sigma_mn * np.array([[self.s_mn, self.t_mn], [0.0, 1.0]])

    def remainder(self, z) -> float:
        """r_{m,n}(z) through the full scope chain."""
        z = np.asarray(z, dtype=float)
        pt = self.parts[-1].tau_in + z
        for part in reversed(self.parts):
            pt = part.psi(pt)
        lin = np.linalg.solve(self.matrix(), pt - self.parts[0].tau_out)
        return float(lin[0] - z[0])


def compose_decompositions(parts) -> CompositeDecomposition:
    """Closed-form composite: products of sigma and s, weighted sum for t."""
    parts = tuple(parts)
    for a, b in zip(parts, parts[1:]):
        if b.n != a.n + 1:
            raise RenormError("bad-input", "heights must be contiguous",
                              got=[p.n for p in parts])
    sigma = 1.0
    s = 1.0
    t = 0.0
    s_prefix = 1.0                        # s_{m,i-1}
    for part in parts:
        sigma *= part.sigma_n
        t += s_prefix * part.t_n
        s_prefix *= part.s_n
    s = s_prefix
    return CompositeDecomposition(parts[0].n, parts[-1].n, sigma, s, t, parts)


def chain_decomposition_at(tower: RenormTower, m: int, n: int, z):
    """(sigma, s, t, image) of D(Psi_m o .. o Psi_n) at an arbitrary point.

    t accumulates as sum_{i} s_{m,i-1}(..) t_i(..) with each factor evaluated
    along the orbit of z through the chain.
    """
    z = np.asarray(z, dtype=float)
    pts = [z]
    for k in range(n, m - 1, -1):
        pts.append(tower.psi(k)(pts[-1]))
    pts.reverse()        # pts[0] = final image, pts[-1] = z
    sigma, t = 1.0, 0.0
    s_prefix = 1.0
    for i, k in enumerate(range(m, n + 1)):
        sg, sk, tk = tower.psi(k).decomposition_at(pts[i + 1])
        sigma *= sg
        t += s_prefix * tk
        s_prefix *= sk
    return sigma, s_prefix, t, pts[0]


# ---------------------------------------------------------------------------
# universal data


@dataclass
class UniversalData:
    v_star: Fun1
    a: Fun1
    tau_star_x: float
    fixed_point_position: float       # fixed point of u_* inside [0, 1]
    multiplier: float


def universal_data(fp: FixedPointResult, config: Config = DEFAULT,
                   tol: float = 1e-11, max_iter: int = 200) -> UniversalData:
    """v_* (tip-centred linearizer of the presentation branch) and the tilt
    profile a.

    v_*(xi) = lim mu^{-n} (mt^{(n)}(x_hat + xi) - x_hat): the Koenigs
    coordinate of the presentation branch mt^1 at its fixed point x_hat (the
    critical value of f_*), normalised so v_*(0) = 0 and v_*'(0) = 1.  Then
    a(x) = v_*'(x - tau*_x) / v_*'(f_*(x) - tau*_x), positive on J and equal
    to 1 at fixed points of f_*.
    """
    if fp.residual > 1e-8:
        raise RenormError("no-convergence", "fixed point residual too large",
                          residual=fp.residual)
    from .unimodal import detect_renormalisable, scope_functions
    f_star = fp.f_star
    cycle = detect_renormalisable(f_star, fp.perm, config)
    mt = scope_functions(f_star, cycle, config=config)[1]
    x_hat, mu = scope_fixed_point(mt, config)
    dom = Interval(-x_hat, 1.0 - x_hat)
    nodes = cheb_nodes(dom, config.degree_1d)
    offs = nodes.copy()
    scale = 1.0
    prev = offs / scale
    vals = prev
    base = x_hat
    # offsets relative to the fixed point's own computed orbit; the Newton
    # residual of x_hat would otherwise swamp the mu^{-n} normalisation
    for _ in range(max_iter):
        offs = mt.diff_rel(np.full_like(offs, base), offs, 0.0)
        base = float(mt(base))
        scale *= mu
        vals = offs / scale
        d = float(np.max(np.abs(vals - prev)))
        if d < tol:
            break
        prev = vals
    else:
        raise RenormError("no-convergence", "linearizer iteration stalled",
                          last_delta=d)
    v_star = fit(vals, dom, config.degree_1d, config=config, check_tail=False)
    tau_x = x_hat
    dv = v_star.deriv()

    def a_values(x):
        num = dv(np.clip(x - tau_x, dom.lo, dom.hi))
        den = dv(np.clip(f_star.fun(x) - tau_x, dom.lo, dom.hi))
        return num / den

    a_fun = fit(a_values(cheb_nodes(UNIT, config.degree_1d)), UNIT,
                config.degree_1d, config=config, check_tail=False)
    if np.min(a_fun(UNIT.grid(200))) <= 0.0:
        raise RenormError("no-convergence", "tilt profile not positive")
    return UniversalData(v_star, a_fun, tau_x, x_hat, mu)


# ---------------------------------------------------------------------------
# universality report


@dataclass
class UniversalityReport:
    entries: list            # (n, e_n) for resolvable heights
    truncated_at: Optional[int]
    f_distances: list        # sup |f_n - f_star| per height
    rho_fit: Optional[float]
    tilt_rows: list          # (n, |t_n|, a(tau_x) * b^{p^n})


def universality_report(tower: RenormTower, u: UniversalData, b: float,
                        f_star=None, grid=(33, 9),
                        config: Config | None = None) -> UniversalityReport:
    """e_n = sup |,|d_y phi_n| / (b^{p^n} a(x)) - 1| per height.

    Heights whose b^{p^n} drops below 1e-250 (or whose thickening underflowed
    to zero) are truncated with a marker.  Also reports |f_n - f_*| and the
    tilt comparison rows.
    """
    if config is None:
        config = tower.config
    if b <= 0.0:
        raise RenormError("degenerate-jacobian", "need a positive average Jacobian")
    p = tower.perm.p
    xs = np.linspace(0.02, 0.98, grid[0])
    ys = np.linspace(0.0, 1.0, grid[1])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    log_a = np.log(u.a(X))
    entries = []
    truncated = None
    for n in range(tower.depth + 1):
        F = tower.F(n)
        scale = p ** n * math.log(b)
        if scale < math.log(1e-250) or F.is_degenerate:
            truncated = n
            break
        eps_y = F.thick.eps.deriv(axis=1)
        vals = np.abs(eps_y(X, Y))
        if np.any(vals <= 0.0):
            truncated = n
            break
        log_ratio = np.log(vals) - scale - log_a
        e_n = float(np.max(np.abs(np.expm1(log_ratio))))
        entries.append((n, e_n))
    # unimodal parts versus the fixed point
    f_distances = []
    if f_star is not None:
        xs_f = UNIT.grid(257)
        ref = f_star.fun(xs_f)
        for n in range(tower.depth + 1):
            f_distances.append(float(np.max(np.abs(
                tower.F(n).f.fun(xs_f) - ref))))
    rho = None
    usable = [d for d in f_distances if d > 1e-13]
    if len(usable) >= 3:
        ks = np.arange(len(usable))
        rho = float(np.exp(np.polyfit(ks, np.log(usable), 1)[0]))
    # tilt rows
    tilt_rows = []
    a_tau = float(u.a(u.tau_star_x))
    for n in range(1, tower.depth):
        try:
            dec = decompose_at_tip(tower, n, config)
        except RenormError:
            break
        predicted = a_tau * math.exp(p ** n * math.log(b)) \
            if p ** n * math.log(b) > math.log(1e-290) else 0.0
        tilt_rows.append((n, abs(dec.t_n), predicted))
    return UniversalityReport(entries, truncated, f_distances, rho, tilt_rows)


# ---------------------------------------------------------------------------
# kappa


@dataclass
class KappaEstimate:
    m: int
    kappa: float
    per_n: list
    fit_residual: float


def kappa_estimate(tower: RenormTower, m: int, y_max: float = 0.35,
                   n_grid: int = 9, config: Config | None = None
                   ) -> KappaEstimate:
    """kappa with r_{m,n}(0, y) ~ kappa y^2, extrapolated over n.

    ``kappa-unresolved`` when the quadratic fit never dominates its residual.
    """
    if config is None:
        config = tower.config
    if tower.depth < m + 3:
        raise RenormError("depth-unreachable", "tower depth must exceed m + 3")
    ys = np.linspace(-y_max, y_max, n_grid)
    ys = ys[np.abs(ys) > 1e-9]
    per_n = []
    decs = [decompose_at_tip(tower, i, config)
            for i in range(m, tower.depth)]
    for n in range(m + 1, tower.depth):
        comp = compose_decompositions(decs[: n - m + 1])
        vals = np.array([comp.remainder(np.array([0.0, y])) for y in ys])
        kappa = float(np.sum(vals * ys ** 2) / np.sum(ys ** 4))
        resid = float(np.max(np.abs(vals - kappa * ys ** 2)))
        per_n.append((n, kappa, resid))
    if not per_n:
        raise RenormError("kappa-unresolved", "no usable heights")
    kappa = per_n[-1][1]
    resid = per_n[-1][2]
    if abs(kappa) * y_max ** 2 < resid and abs(kappa) > 0:
        raise RenormError("kappa-unresolved", "fit residual dominates",
                          kappa=kappa, residual=resid)
    return KappaEstimate(m, kappa, per_n, resid)


# ---------------------------------------------------------------------------
# projectivised cocycle


@dataclass
class CocycleData:
    zeta: float
    eta: float
    theta: float

    def propagate_return(self, X: float) -> float:
        den = X + self.theta
        if den == 0.0:
            raise RenormError("projective-singularity", "line hits the kernel")
        return self.zeta * (X + self.eta) / den


def projectivized_cocycle(tower: RenormTower, n: int, z,
                          config: Config | None = None) -> CocycleData:
    """(zeta, eta, theta) of the projectivised D F_n^p at z."""
    if config is None:
        config = tower.config
    F = tower.F(n)
    p = tower.perm.p
    z = np.asarray(z, dtype=float)
    x = np.array([z[0]])
    y = np.array([z[1]])
    _, dx_p, dy_p = F.dphi_k(x.copy(), y.copy(), p)
    _, dx_q, dy_q = F.dphi_k(x.copy(), y.copy(), p - 1)
    if dx_p[0] == 0.0 or dx_q[0] == 0.0:
        raise RenormError("projective-singularity",
                          "vanishing horizontal derivative", z=z.tolist())
    zeta = float(dx_p[0] / dx_q[0])
    eta = float(dy_p[0] / dx_p[0])
    theta = float(dy_q[0] / dx_q[0])
    return CocycleData(zeta, eta, theta)


def propagate_through_scope(tower: RenormTower, n: int, z, X: float) -> float:
    """Line slope through D Psi_n at z: X -> s X + t."""
    _, s, t = tower.psi(n).decomposition_at(np.asarray(z, dtype=float))
    return s * X + t


# ---------------------------------------------------------------------------
# line-field divergence demo


@dataclass
class LineFieldRow:
    m: int
    base_distance: float
    projective_gap: float
    return_sensitivity: float = float("nan")   # |d Mobius / dX| at the line
    eta: float = float("nan")
    theta: float = float("nan")
    tilt_limit: float = float("nan")


def tilt_limit(tower: RenormTower, m: int, config: Config | None = None,
               max_n: int | None = None):
    """t_{m,*}: composite tilt at the tip, truncated at the float floor."""
    if config is None:
        config = tower.config
    if max_n is None:
        max_n = tower.depth
    decs = [decompose_at_tip(tower, i, config) for i in range(m, max_n)]
    t = 0.0
    s_prefix = 1.0
    last_inc = np.inf
    for dec in decs:
        inc = s_prefix * dec.t_n
        t_new = t + inc
        if abs(inc) < 1e-14 * max(abs(t_new), 1e-300):
            t = t_new
            break
        t = t_new
        s_prefix *= dec.s_n
        last_inc = inc
    return t


def linefield_divergence_demo(tower: RenormTower, m_values,
                              config: Config | None = None) -> list:
    """Candidate-line blow-up along the proof's construction.

    For each m: start the line X_m(tau_m) = t_{m,*}, push it through the
    projectivised return of F_m, then carry both lines down to height 0 and
    compare.  Rows report the base distance (shrinking) and the projective
    gap (exploding).
    """
    if config is None:
        config = tower.config
    if tower.F(0).is_degenerate:
        raise RenormError("degenerate-jacobian",
                          "demo requires a positive average Jacobian")
    taus = tip(tower, config).tau_per_height
    rows = []
    for m in m_values:
        if m + 1 >= len(taus):
            break
        tau_m = taus[m]
        F_m = tower.F(m)
        p = tower.perm.p
        X_tau = tilt_limit(tower, m, config)
        coc = projectivized_cocycle(tower, m, tau_m, config)
        den = X_tau + coc.theta
        if den == 0.0:
            break            # tilt scale fell below the float floor: truncate
        X_sig = coc.propagate_return(X_tau)
        sensitivity = abs(coc.zeta * (coc.theta - coc.eta)) / den ** 2
        sig_m = F_m.iterate(tau_m, p)
        if m == 0:
            base = float(np.linalg.norm(sig_m - tau_m))
            gap = abs(X_sig - X_tau)
            rows.append(LineFieldRow(m, base, gap, sensitivity, coc.eta,
                                     coc.theta, X_tau))
            continue
        # push down to height 0
        sg_t, s_t, t_t, base_tau = chain_decomposition_at(tower, 0, m - 1, tau_m)
        sg_s, s_s, t_s, base_sig = chain_decomposition_at(tower, 0, m - 1, sig_m)
        X0_tau = s_t * X_tau + t_t
        X0_sig = s_s * X_sig + t_s
        rows.append(LineFieldRow(m, float(np.linalg.norm(base_sig - base_tau)),
                                 abs(X0_sig - X0_tau), sensitivity, coc.eta,
                                 coc.theta, X_tau))
    return rows


# ---------------------------------------------------------------------------
# rigidity experiment


@dataclass
class HolderRow:
    m: int
    n: int
    d_plain: float
    d_tilde: float
    alpha_emp: float


@dataclass
class HolderResult:
    b_plain: float
    b_tilde: float
    bound: float
    bound_capped: float
    rows: list
    alpha_max: Optional[float]
    swapped: bool


def _witness_distance(tower: RenormTower, m: int, n: int,
                      config: Config) -> float:
    """Distance between the carried tip and first-return witness points."""
    taus = tip(tower, config).tau_per_height
    if n + 1 >= len(taus):
        raise RenormError("depth-unreachable", "tower too shallow",
                          need=n + 1, depth=tower.depth)
    p = tower.perm.p
    tau = taus[n + 1]
    sig = tower.F(n + 1).iterate(tau, p)
    # down to height m
    pt_tau, pt_sig = tau, sig
    for k in range(n, m - 1, -1):
        psi = tower.psi(k)
        pt_tau = psi(pt_tau)
        pt_sig = psi(pt_sig)
    Fm = tower.F(m)
    pt_tau = Fm(pt_tau)
    pt_sig = Fm(pt_sig)
    for k in range(m - 1, -1, -1):
        psi = tower.psi(k)
        pt_tau = psi(pt_tau)
        pt_sig = psi(pt_sig)
    return float(np.linalg.norm(pt_sig - pt_tau))


def holder_experiment(tower_a: RenormTower, tower_b: RenormTower,
                      m_values=None, allow_low_contrast: bool = False,
                      noise_floor: float = 1e-12,
                      config: Config | None = None) -> HolderResult:
    """Empirical Holder exponent versus the average-Jacobian bound.

    The map with the larger average Jacobian plays the tilde role (the
    proof's orientation); witness pairs follow its construction.  Rows whose
    plain-map distance falls below ``noise_floor`` are not computable in
    double precision and are skipped.
    """
    from .cantor import orbit_jacobian_estimate
    if config is None:
        config = tower_a.config
    depth_est = min(tower_a.depth, tower_b.depth, 8)
    b_a = orbit_jacobian_estimate(tower_a, depth_est)
    b_b = orbit_jacobian_estimate(tower_b, depth_est)
    if b_a <= 0.0 or b_b <= 0.0:
        raise RenormError("degenerate-jacobian",
                          "both towers must be non-degenerate")
    swapped = b_a > b_b          # tilde must be the larger-b map
    if swapped:
        tower_a, tower_b = tower_b, tower_a
        b_a, b_b = b_b, b_a
    b, b_tilde = b_a, b_b
    bound = 0.5 * (1.0 + math.log(b_tilde) / math.log(b))
    if abs(bound - 1.0) <= 0.02 and not allow_low_contrast:
        raise RenormError("insufficient-contrast",
                          "average Jacobians too close for the bound",
                          bound=bound)
    sigma = abs(tower_a.psi(min(tower_a.depth, 6)).sigma_signed)
    p = tower_a.perm.p
    if m_values is None:
        m_values = range(1, 4)
    rows = []
    for m in m_values:
        if abs(b_tilde ** (p ** m)) <= 10.0 * abs(b ** (p ** m)):
            continue
        n = m + int(math.floor(math.log(b ** (p ** m)) / math.log(sigma)))
        if n <= m:
            continue
        if n + 1 > min(tower_a.depth, tower_b.depth):
            continue
        try:
            d_plain = _witness_distance(tower_a, m, n, config)
            d_tilde = _witness_distance(tower_b, m, n, config)
        except RenormError:
            continue
        if d_plain < noise_floor or d_tilde < noise_floor:
            continue
        alpha = math.log(d_tilde) / math.log(d_plain)
        rows.append(HolderRow(m, n, d_plain, d_tilde, alpha))
    alpha_max = max((r.alpha_emp for r in rows), default=None)
    return HolderResult(b, b_tilde, bound, min(bound, 1.0), rows, alpha_max,
                        swapped)
