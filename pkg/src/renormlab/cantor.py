"""Renormalisation towers, Cantor-set pieces, the tip and the average Jacobian.

A tower holds the successive renormalisations F_n together with their scope
maps Psi_n = Hbar_n o Ibar_n.  Depth-n pieces are the images of the unit box
under chains Psi^{w_0}_0 o ... o Psi^{w_{n-1}}_{n-1} with Psi^w_n = F_n^w o
Psi_n; with that indexing the map acts on pieces exactly as the adding
machine (the carry case wraps through the conjugacy F^p o Psi = Psi o F_1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cheb import Box, Interval, UNIT_BOX
from .config import DEFAULT, Config
from .errors import RenormError
from .henon import (HenonLikeMap, PreRenorm, RenormStep, _row_solve,
                    find_central_box, renormalise_henon)
from .unimodal import (UnimodalPermutation, Word, adding_machine_successor)


class ScopeMap:
    """Psi = Hbar o Ibar: Dom(F_{n+1}) -> B0 inside Dom(F_n)."""

    def __init__(self, pre: PreRenorm, config: Config = DEFAULT):
        self.pre = pre
        self.config = config

    @property
    def sigma_signed(self) -> float:
        return self.pre.a_slope

    def _to_diag(self, pts):
        return self.pre.a_offset + self.pre.a_slope * pts

    def __call__(self, pts):
        """Apply Psi to an (n, 2) array (or a single point)."""
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        P = np.atleast_2d(pts)
        w = self._to_diag(P)
        u = _row_solve(self.pre.F, self.pre.p, w[:, 0], w[:, 1],
                       self.pre.bracket[0], self.pre.bracket[1], self.config)
        out = np.column_stack([u, w[:, 1]])
        return out[0] if single else out

    def w_apply(self, w: int, pts):
        """Psi^w = F^w o Psi."""
        out = np.atleast_2d(self(pts))
        F = self.pre.F
        for _ in range(w):
            out = np.column_stack([F.phi(out[:, 0], out[:, 1]), out[:, 0]])
        return out[0] if np.asarray(pts).ndim == 1 else out

    def derivative(self, z):
        """D Psi(z), upper triangular: sigma * [[s, t], [0, 1]]."""
        sig, s, t = self.decomposition_at(z)
        return sig * np.array([[s, t], [0.0, 1.0]])

    def decomposition_at(self, z):
        """(sigma, s, t) of D Psi(z) through implicit differentiation."""
        z = np.asarray(z, dtype=float)
        w = self._to_diag(z)
        F = self.pre.F
        u = _row_solve(F, self.pre.p, np.array([w[0]]), np.array([w[1]]),
                       self.pre.bracket[0], self.pre.bracket[1], self.config)
        _, du, dy = F.dphi_k(u, np.array([w[1]]), self.pre.p - 1)
        d, e = float(du[0]), float(dy[0])
        if abs(d) < self.config.deriv_floor:
            raise RenormError("structure-violation",
                              "scope derivative hit the critical locus")
        return self.sigma_signed, 1.0 / d, -e / d


@dataclass
class Stage:
    index: int
    F: HenonLikeMap
    pre: PreRenorm
    psi: ScopeMap
    step: RenormStep


@dataclass
class RenormTower:
    perm: UnimodalPermutation
    stages: list
    top_map: HenonLikeMap
    config: Config = field(default=DEFAULT, repr=False)

    @property
    def depth(self) -> int:
        return len(self.stages) - 1

    def F(self, n: int) -> HenonLikeMap:
        if n == len(self.stages):
            return self.top_map
        return self.stages[n].F

    def psi(self, n: int) -> ScopeMap:
        return self.stages[n].psi

    def eps_sups(self) -> list:
        out = [st.step.eps_sup_before for st in self.stages]
        out.append(self.stages[-1].step.eps_sup_after)
        return out

    def shift(self, k: int) -> "RenormTower":
        """Tower of F_k (stages k..depth)."""
        if k == 0:
            return self
        if k > self.depth:
            raise RenormError("depth-unreachable", "shift beyond tower depth",
                              k=k, depth=self.depth)
        sub = [Stage(st.index - k, st.F, st.pre, st.psi, st.step)
               for st in self.stages[k:]]
        return RenormTower(self.perm, sub, self.top_map, self.config)


def build_tower(F: HenonLikeMap, N: int, perm: UnimodalPermutation,
                config: Config = DEFAULT, validate_probes: int = 5
                ) -> RenormTower:
    """N + 1 renormalisation stages (heights 0..N), with stage validation.

    Failures carry the stage index.  Each stage checks the conjugacy
    F_{n+1} = I G Ibar at a few probe points.
    """
    stages = []
    cur = F
    rng = np.random.default_rng(20240709)
    for n in range(N + 1):
        try:
            pre = find_central_box(cur, perm, config)
            step = renormalise_henon(cur, perm, pre, config)
        except RenormError as exc:
            raise RenormError("depth-unreachable",
                              f"renormalisation failed at stage {n}",
                              stage=n, reason=exc.code, detail=str(exc)) from exc
        psi = ScopeMap(pre, config)
        if validate_probes:
            # conjugacy F_n^p o Psi_n = Psi_n o F_{n+1} at interior probes
            pts = rng.uniform(0.15, 0.85, size=(validate_probes, 2))
            lhs = psi(pts)
            x, y = lhs[:, 0].copy(), lhs[:, 1].copy()
            for _ in range(perm.p):
                x, y = cur.phi(x, y), x
            lhs = np.column_stack([x, y])
            nxt_pts = np.column_stack(
                [step.F_next.phi(pts[:, 0], pts[:, 1]), pts[:, 0]])
            rhs = psi(nxt_pts)
            err = float(np.max(np.abs(lhs - rhs)))
            if err > 1e-8:
                raise RenormError("depth-unreachable",
                                  "stage conjugacy check failed",
                                  stage=n, error=err)
        stages.append(Stage(n, cur, pre, psi, step))
        cur = step.F_next
    return RenormTower(perm, stages, cur, config)


# ---------------------------------------------------------------------------
# pieces


@dataclass
class Piece:
    word: Word
    points: np.ndarray          # sample images, shape (m, 2)
    center: np.ndarray          # image of the box center
    bbox: Box

    @property
    def diameter(self) -> float:
        span_x = self.bbox.x.length
        span_y = self.bbox.y.length
        return float(np.hypot(span_x, span_y))


@dataclass
class CantorApprox:
    depth: int
    pieces: dict
    tower: RenormTower

    @property
    def p(self) -> int:
        return self.tower.perm.p

    def measure(self, word: Word) -> float:
        return float(self.p) ** (-len(word.digits))

    def words(self):
        return list(self.pieces.keys())


def _box_samples(config: Config) -> np.ndarray:
    m = config.piece_boundary_points
    t = np.linspace(0.0, 1.0, m // 4 + 2)[:-1]
    edges = [np.column_stack([t, np.zeros_like(t)]),
             np.column_stack([np.ones_like(t), t]),
             np.column_stack([1.0 - t, np.ones_like(t)]),
             np.column_stack([np.zeros_like(t), 1.0 - t])]
    pts = np.vstack(edges)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    center = np.array([[0.5, 0.5]])
    return np.vstack([pts, corners, center])


def pieces_at_depth(tower: RenormTower, n: int,
                    config: Config | None = None) -> CantorApprox:
    """All p^n depth-n pieces, built bottom-up so chains share suffixes.

    Raises ``pieces-overlap`` when inflated bounding boxes intersect, the
    sign that the thickening is too large for this depth.
    """
    if config is None:
        config = tower.config
    if n < 1:
        raise RenormError("bad-input", "depth must be >= 1", depth=n)
    if n > tower.depth + 1:
        raise RenormError("depth-unreachable", "tower too shallow",
                          requested=n, available=tower.depth + 1)
    p = tower.perm.p
    base = _box_samples(config)
    # level[suffix] = images under Psi^{w_k}_k o ... for the deepest levels
    level = {(): base}
    for k in range(n - 1, -1, -1):
        psi = tower.psi(k)
        nxt = {}
        for suffix, pts in level.items():
            for w in range(p):
                nxt[(w,) + suffix] = psi.w_apply(w, pts)
        level = nxt
    pieces = {}
    pad = config.piece_bbox_inflation
    for digits, pts in level.items():
        word = Word(digits, p)
        bbox = Box(Interval(float(pts[:, 0].min()) - pad,
                            float(pts[:, 0].max()) + pad),
                   Interval(float(pts[:, 1].min()) - pad,
                            float(pts[:, 1].max()) + pad))
        pieces[word] = Piece(word, pts, pts[-1].copy(), bbox)
    _check_disjoint(pieces, pad)
    return CantorApprox(n, pieces, tower)


def _check_disjoint(pieces: dict, pad: float) -> None:
    """Interiors must be disjoint.

    Adjacent cylinders legitimately touch along boundary-orbit points (the
    cycle intervals share the periodic endpoint), so an intersection only
    counts when it exceeds the inflation scale in both coordinates.
    """
    tol = 3.0 * pad
    items = list(pieces.values())
    for i in range(len(items)):
        bi = items[i].bbox
        for j in range(i + 1, len(items)):
            bj = items[j].bbox
            ox = min(bi.x.hi, bj.x.hi) - max(bi.x.lo, bj.x.lo)
            oy = min(bi.y.hi, bj.y.hi) - max(bi.y.lo, bj.y.lo)
            if ox > tol and oy > tol:
                raise RenormError("pieces-overlap",
                                  "piece interiors intersect",
                                  a=str(items[i].word), b=str(items[j].word),
                                  overlap=(float(ox), float(oy)))


def code_to_point(c: CantorApprox, word: Word) -> np.ndarray:
    if len(word.digits) != c.depth:
        raise RenormError("bad-input", "word length must equal the depth",
                          word=str(word), depth=c.depth)
    return c.pieces[word].center


def conjugacy_residuals(c: CantorApprox) -> dict:
    """dist(F(center(w)), center(1 + w)) for every word, for the odometer check."""
    F = c.tower.F(0)
    out = {}
    for word, piece in c.pieces.items():
        succ = adding_machine_successor(word)
        image = F(piece.center)
        out[word] = float(np.linalg.norm(image - c.pieces[succ].center))
    return out


# ---------------------------------------------------------------------------
# the tip


@dataclass
class Tip:
    tau: np.ndarray
    tau_per_height: list


def tip(tower: RenormTower, config: Config | None = None) -> Tip:
    """tau_n per height: fixed point of the top scope map pushed down.

    The top fixed point is found by iterating Psi_top (a sigma-contraction);
    pushing down contracts any truncation error geometrically, so tau_0 is
    accurate far beyond the tower's own depth.
    """
    if config is None:
        config = tower.config
    if tower.depth < 1:
        raise RenormError("depth-unreachable", "tower depth must be >= 2")
    top = tower.psi(tower.depth)
    z = np.array([0.5, 0.5])
    prev = None
    for it in range(300):
        zn = top(z)
        if prev is not None and np.max(np.abs(zn - z)) < 1e-15:
            break
        prev, z = z, zn
    else:
        raise RenormError("tip-diverged", "top scope map did not contract")
    taus = [z]
    for n in range(tower.depth - 1, -1, -1):
        taus.append(tower.psi(n)(taus[-1]))
    taus.reverse()           # taus[n] = tip at height n, n = 0..depth
    return Tip(taus[0], taus)


# ---------------------------------------------------------------------------
# average Jacobian and distortion


@dataclass
class JacobianEstimate:
    b: float
    error_estimate: float
    cross_check: float
    depth: int


def _log_jacobians(F: HenonLikeMap, pts: np.ndarray) -> np.ndarray:
    eps_y = F.thick.eps.deriv(axis=1)
    vals = np.abs(eps_y(pts[:, 0], pts[:, 1]))
    if np.any(vals <= 0.0):
        raise RenormError("degenerate-jacobian",
                          "Jacobian vanishes at a piece center")
    return np.log(vals)


def average_jacobian(c: CantorApprox, config: Config | None = None
                     ) -> JacobianEstimate:
    """b = exp of the cylinder-measure average of log |Jac F|.

    Piece centers carry equal measure p^{-n}; the error estimate compares
    with the depth-(n-1) value; the cross check is the orbit-product
    estimator |Jac F^{p^n}(tau)|^{1 / p^n} whose error contracts by an extra
    p^{-n} factor.
    """
    tower = c.tower
    F = tower.F(0)
    if F.is_degenerate:
        return JacobianEstimate(0.0, 0.0, 0.0, c.depth)
    centers = np.array([piece.center for piece in c.pieces.values()])
    logb = float(np.mean(_log_jacobians(F, centers)))
    coarse = pieces_at_depth(tower, c.depth - 1) if c.depth >= 2 else None
    if coarse is not None:
        centers_c = np.array([p.center for p in coarse.pieces.values()])
        logb_c = float(np.mean(_log_jacobians(F, centers_c)))
        err = abs(np.exp(logb) - np.exp(logb_c))
    else:
        err = float("nan")
    cross = orbit_jacobian_estimate(tower, c.depth)
    return JacobianEstimate(float(np.exp(logb)), err, cross, c.depth)


def orbit_jacobian_estimate(tower: RenormTower, n: int) -> float:
    """|Jac F^{p^n}(tau)|^{1/p^n} along the tip orbit."""
    F = tower.F(0)
    if F.is_degenerate:
        return 0.0
    tau = tip(tower).tau
    m = tower.perm.p ** n
    orb = F.orbit(tau, m - 1)
    logs = _log_jacobians(F, orb)
    return float(np.exp(np.mean(logs)))


@dataclass
class DistortionReport:
    per_depth: dict           # depth -> max over pieces/pairs of log-ratio
    decaying: bool


def distortion_report(c: CantorApprox, config: Config | None = None
                      ) -> DistortionReport:
    """Max distortion of F^m over depth-k pieces, m in {1, p, .., p^k}."""
    tower = c.tower
    F = tower.F(0)
    if F.is_degenerate:
        raise RenormError("degenerate-jacobian",
                          "distortion undefined for degenerate maps")
    out = {}
    for k in range(1, c.depth + 1):
        ca = c if k == c.depth else pieces_at_depth(tower, k)
        worst = 0.0
        p = tower.perm.p
        for piece in ca.pieces.values():
            pts = piece.points
            z0 = pts[np.argmin(pts[:, 0])]
            z1 = pts[np.argmax(pts[:, 0])]
            m = p ** k
            orb0 = F.orbit(z0, m - 1)
            orb1 = F.orbit(z1, m - 1)
            l0 = np.cumsum(_log_jacobians(F, orb0))
            l1 = np.cumsum(_log_jacobians(F, orb1))
            for mm in [p ** j for j in range(k + 1)]:
                worst = max(worst, abs(float(l0[mm - 1] - l1[mm - 1])))
        out[k] = worst
    depths = sorted(out)
    decaying = all(out[depths[i + 1]] <= out[depths[i]] * 1.05
                   for i in range(len(depths) - 1))
    return DistortionReport(out, decaying)


def export_csv(c: CantorApprox, path: str) -> None:
    """Pieces and measures as CSV (word, bbox, center, log-Jacobian)."""
    F = c.tower.F(0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "x_lo", "x_hi", "y_lo", "y_hi",
                         "center_x", "center_y", "measure", "log_jacobian"])
        for word, piece in sorted(c.pieces.items(), key=lambda kv: str(kv[0])):
            if F.is_degenerate:
                logj = float("-inf")
            else:
                logj = float(_log_jacobians(F, piece.center[None, :])[0])
            writer.writerow([str(word), piece.bbox.x.lo, piece.bbox.x.hi,
                             piece.bbox.y.lo, piece.bbox.y.hi,
                             piece.center[0], piece.center[1],
                             c.measure(word), logj])
