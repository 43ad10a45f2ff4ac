"""Chebyshev-coefficient algebra for real-analytic functions.

``Fun1``/``Fun2`` hold truncated Chebyshev expansions on an interval or a
rectangle.  Fitting uses the canonical first-kind interpolation grid, which
makes the value-to-coefficient map exact for polynomials up to the stored
degree and reproduces grid samples to machine precision.

Analyticity is tracked through coefficient tail decay: a fit whose trailing
coefficients stay above the configured tolerance raises
``insufficient-resolution``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from . import _kernels as K
from .config import DEFAULT, Config
from .errors import RenormError


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise RenormError("invalid-interval", "endpoints must be finite",
                              lo=self.lo, hi=self.hi)
        if not self.lo < self.hi:
            raise RenormError("invalid-interval", "requires lo < hi",
                              lo=self.lo, hi=self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, margin: float = 0.0) -> bool:
        return bool(np.all(np.asarray(x) >= self.lo - margin)
                    and np.all(np.asarray(x) <= self.hi + margin))

    def inflate(self, pad: float) -> "Interval":
        return Interval(self.lo - pad, self.hi + pad)

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)


UNIT = Interval(0.0, 1.0)


@dataclass(frozen=True)
class Box:
    x: Interval
    y: Interval

    def contains(self, pt, margin: float = 0.0) -> bool:
        return (self.x.contains(pt[0], margin) and self.y.contains(pt[1], margin))


UNIT_BOX = Box(UNIT, UNIT)


@dataclass(frozen=True)
class Affine2:
    """z -> linear @ z + offset with invertible linear part."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float).reshape(2, 2)
        off = np.asarray(self.offset, dtype=float).reshape(2)
        if abs(np.linalg.det(lin)) < 1e-300:
            raise RenormError("singular-affine", "linear part not invertible")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return z @ self.linear.T + self.offset

    def inverse(self) -> "Affine2":
        inv = np.linalg.inv(self.linear)
        return Affine2(inv, -inv @ self.offset)


# ---------------------------------------------------------------------------
# fitting grids


@lru_cache(maxsize=64)
def _nodes_unit(n: int) -> np.ndarray:
    """First-kind Chebyshev points on [-1, 1], descending, n points."""
    j = np.arange(n)
    return np.cos(np.pi * (2 * j + 1) / (2 * n))


@lru_cache(maxsize=64)
def _fit_matrix(n: int) -> np.ndarray:
    """Maps samples at the n first-kind nodes to n Chebyshev coefficients."""
    j = np.arange(n)
    k = np.arange(n)[:, None]
    M = np.cos(np.pi * k * (2 * j + 1) / (2 * n)) * (2.0 / n)
    M[0] *= 0.5
    return M


def cheb_nodes(domain: Interval, degree: int) -> np.ndarray:
    t = _nodes_unit(degree + 1)
    return domain.mid + 0.5 * domain.length * t


def _tail_fraction(coeffs: np.ndarray) -> float:
    n = coeffs.shape[-1] if coeffs.ndim == 1 else max(coeffs.shape)
    tail = max(2, n // 8)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return 0.0
    if coeffs.ndim == 1:
        return float(np.max(np.abs(coeffs[-tail:])) / scale)
    tx = max(2, coeffs.shape[0] // 8)
    ty = max(2, coeffs.shape[1] // 8)
    worst = max(np.max(np.abs(coeffs[-tx:, :])), np.max(np.abs(coeffs[:, -ty:])))
    return float(worst / scale)


# ---------------------------------------------------------------------------
# one variable


class Fun1:
    """Real-analytic function on an interval, stored as T_k coefficients."""

    __slots__ = ("domain", "coeffs")

    def __init__(self, domain: Interval, coeffs):
        self.domain = domain
        self.coeffs = np.ascontiguousarray(np.atleast_1d(coeffs), dtype=np.float64)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 0:
            return K.cheb_eval_scalar(self.coeffs, self.domain.lo, self.domain.hi,
                                      float(arr))
        flat = np.ascontiguousarray(arr.ravel())
        out = K.cheb_eval(self.coeffs, self.domain.lo, self.domain.hi, flat)
        return np.asarray(out).reshape(arr.shape)

    def diff_at(self, a, b):
        """self(a) - self(b), stable for a close to b."""
        a_arr = np.atleast_1d(np.asarray(a, dtype=np.float64))
        b_arr = np.broadcast_to(np.asarray(b, dtype=np.float64), a_arr.shape)
        out = K.cheb_diff(self.coeffs, self.domain.lo, self.domain.hi,
                          np.ascontiguousarray(a_arr), np.ascontiguousarray(b_arr))
        return float(out[0]) if np.asarray(a).ndim == 0 else np.asarray(out)

    def diff_rel(self, base, da, db):
        """self(base + da) - self(base + db); offsets stay exact smalls."""
        base_arr = np.atleast_1d(np.asarray(base, dtype=np.float64))
        da_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(da, dtype=np.float64), base_arr.shape))
        db_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(db, dtype=np.float64), base_arr.shape))
        out = K.cheb_diff_rel(self.coeffs, self.domain.lo, self.domain.hi,
                              np.ascontiguousarray(base_arr), da_arr, db_arr)
        scalar = (np.asarray(base).ndim == 0 and np.asarray(da).ndim == 0
                  and np.asarray(db).ndim == 0)
        return float(out[0]) if scalar else np.asarray(out)

    def deriv(self, order: int = 1) -> "Fun1":
        scale = 2.0 / self.domain.length
        c = npcheb.chebder(self.coeffs, m=order, scl=scale)
        if len(c) == 0:
            c = np.zeros(1)
        return Fun1(self.domain, c)

    def tail_fraction(self) -> float:
        return _tail_fraction(self.coeffs)

    # light coefficient arithmetic (same domain only)
    def _binop(self, other, sign):
        if isinstance(other, Fun1):
            if other.domain != self.domain:
                raise RenormError("domain-mismatch",
                                  "operands live on different intervals")
            n = max(len(self.coeffs), len(other.coeffs))
            a = np.zeros(n)
            a[: len(self.coeffs)] = self.coeffs
            b = np.zeros(n)
            b[: len(other.coeffs)] = other.coeffs
            return Fun1(self.domain, a + sign * b)
        c = self.coeffs.copy()
        c[0] += sign * float(other)
        return Fun1(self.domain, c)

    def __add__(self, other):
        return self._binop(other, 1.0)

    def __sub__(self, other):
        return self._binop(other, -1.0)

    def __mul__(self, scalar):
        return Fun1(self.domain, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return (f"Fun1(domain=[{self.domain.lo:g}, {self.domain.hi:g}], "
                f"degree={self.degree})")


def identity_fun(domain: Interval) -> Fun1:
    return Fun1(domain, [domain.mid, 0.5 * domain.length])


def fit(values, domain: Interval, degree: int | None = None,
        config: Config = DEFAULT, check_tail: bool = True) -> Fun1:
    """Interpolate samples (or a callable) on the canonical grid.

    ``values`` is either a callable evaluated on the grid or an array of
    samples already taken at ``cheb_nodes(domain, degree)``.
    """
    if degree is None:
        degree = config.degree_1d
    nodes = cheb_nodes(domain, degree)
    if callable(values):
        samples = np.asarray([values(x) for x in nodes], dtype=np.float64) \
            if not _vectorizable(values) else np.asarray(values(nodes), dtype=np.float64)
    else:
        samples = np.asarray(values, dtype=np.float64)
        if samples.shape != nodes.shape:
            raise RenormError("bad-grid",
                              "samples must match the canonical grid",
                              expected=len(nodes), got=len(samples))
    coeffs = _fit_matrix(degree + 1) @ samples
    fun = Fun1(domain, coeffs)
    if check_tail and fun.tail_fraction() > config.tail_rel_1d:
        raise RenormError("insufficient-resolution",
                          "coefficient tail does not decay",
                          degree=degree, tail=fun.tail_fraction())
    return fun


def _vectorizable(fn: Callable) -> bool:
    try:
        out = fn(np.asarray([0.5, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def fit_grid_2d(values: np.ndarray, box: Box) -> "Fun2":
    """Coefficients from samples on the tensor first-kind grid."""
    nx, ny = values.shape
    C = _fit_matrix(nx) @ values @ _fit_matrix(ny).T
    return Fun2(box, C)


def compose1(f: Fun1, g: Fun1, degree: int | None = None,
             config: Config = DEFAULT) -> Fun1:
    """f after g, fitted on the grid of g's domain.

    The range of g (estimated on a dense grid) must stay inside f's domain up
    to ``compose_margin``; tiny excursions are clamped, larger ones raise
    ``domain-escape``.
    """
    if degree is None:
        degree = max(config.degree_1d, f.degree, g.degree)
    probe = g(g.domain.grid(512))
    margin = config.compose_margin
    worst = max(f.domain.lo - probe.min(), probe.max() - f.domain.hi)
    if worst > margin:
        idx = int(np.argmax(np.maximum(f.domain.lo - probe,
                                       probe - f.domain.hi)))
        raise RenormError("domain-escape", "range of g leaves domain of f",
                          x=float(g.domain.grid(512)[idx]),
                          value=float(probe[idx]), excess=float(worst))
    nodes = cheb_nodes(g.domain, degree)
    inner = np.clip(g(nodes), f.domain.lo, f.domain.hi)
    return fit(f(inner), g.domain, degree, config=config, check_tail=False)


def differentiate(f, order: int = 1, axis: int = 0):
    """Derivative of a Fun1 (order'th) or Fun2 (along axis)."""
    if order < 1:
        raise RenormError("bad-order", "order must be >= 1", order=order)
    if isinstance(f, Fun1):
        return f.deriv(order)
    return f.deriv(axis=axis, order=order)


# ---------------------------------------------------------------------------
# root finding


def _newton_bisect(fn, dfn, a, b, fa, fb, tol):
    """Root of fn in [a, b] with a sign change, Newton safeguarded by bisection."""
    x = 0.5 * (a + b)
    for _ in range(120):
        fx = fn(x)
        if fa * fx <= 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        d = dfn(x)
        if d != 0.0:
            step = fx / d
            xn = x - step
            if not (a < xn < b):
                xn = 0.5 * (a + b)
        else:
            xn = 0.5 * (a + b)
        if abs(xn - x) < tol:
            return xn
        x = xn
    return x


def find_roots(f: Fun1, target: float = 0.0, config: Config = DEFAULT) -> list:
    """All solutions of f(x) = target in the domain, sorted.

    Sign-change scan at ``root_scan_step`` resolution followed by
    bisection-safeguarded Newton; grid minima of |f - target| are polished as
    well so that even-order touch points (for example a double root at the
    critical point) are found.
    """
    dom = f.domain
    n = int(np.ceil(1.0 / config.root_scan_step)) + 1
    xs = dom.grid(n)
    vals = f(xs) - target
    df = f.deriv()
    fn = lambda x: f(x) - target
    dfn = df

    roots: list[float] = []

    def push(x):
        if abs(fn(x)) > 1e-12:
            return
        for r in roots:
            if abs(r - x) < 1e-9 * max(1.0, dom.length):
                return
        roots.append(min(max(x, dom.lo), dom.hi))

    # endpoints may be exact roots
    for e in (dom.lo, dom.hi):
        if abs(fn(e)) < 1e-13:
            push(e)

    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        push(_newton_bisect(fn, dfn, xs[i], xs[i + 1], vals[i], vals[i + 1],
                            config.root_tol))
    for i in np.nonzero(vals == 0.0)[0]:
        push(xs[i])

    # touch points: local minima of |f - target| that are numerically tiny
    absv = np.abs(vals)
    interior = np.arange(1, n - 1)
    mask = (absv[interior] <= absv[interior - 1]) & (absv[interior] <= absv[interior + 1])
    h = dom.length * config.root_scan_step
    thresh = max(100.0 * h * h * max(1.0, float(np.max(np.abs(df(xs[::17]))))), 1e-11)
    for i in interior[mask]:
        if absv[i] > thresh:
            continue
        # Newton toward a critical point of f - target, then accept if a root
        x = xs[i]
        d2 = df.deriv()
        for _ in range(60):
            d1 = df(x)
            d2v = d2(x)
            if d2v == 0.0:
                break
            xn = x - d1 / d2v
            if not dom.contains(xn, margin=h):
                break
            if abs(xn - x) < config.root_tol:
                x = xn
                break
            x = xn
        push(x)

    # merge clusters that belong to one (possibly multiple) root: the whole
    # segment between near-coincident candidates sits at root level
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if merged and r - merged[-1] < 1e-5 * dom.length and \
                abs(fn(0.5 * (r + merged[-1]))) < 1e-11:
            if abs(fn(r)) < abs(fn(merged[-1])):
                merged[-1] = r
        else:
            merged.append(r)
    return merged


# ---------------------------------------------------------------------------
# classical one-dimensional quantities


def schwarzian(f: Fun1, x: float, config: Config = DEFAULT) -> float:
    """f'''/f' - (3/2) (f''/f')^2 at x."""
    d1 = f.deriv()(x)
    if abs(d1) <= 1e-12:
        raise RenormError("critical-point",
                          "Schwarzian undefined where f' vanishes", x=x)
    d2 = f.deriv(2)(x)
    d3 = f.deriv(3)(x)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def cross_ratio(inner: Interval, outer: Interval) -> float:
    """|J| |T| / (|L| |R|) for J strictly inside T."""
    L = inner.lo - outer.lo
    R = outer.hi - inner.hi
    if L <= 0.0 or R <= 0.0:
        raise RenormError("degenerate-gap",
                          "inner interval must be strictly inside outer",
                          left_gap=L, right_gap=R)
    return inner.length * outer.length / (L * R)


# ---------------------------------------------------------------------------
# two variables


class Fun2:
    """Real-analytic function on a rectangle, tensor T_i(x) T_j(y) basis."""

    __slots__ = ("box", "coeffs")

    def __init__(self, box: Box, coeffs):
        self.box = box
        self.coeffs = np.ascontiguousarray(np.atleast_2d(coeffs), dtype=np.float64)

    @property
    def degrees(self) -> tuple:
        return (self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1)

    def _dom(self):
        return (self.box.x.lo, self.box.x.hi, self.box.y.lo, self.box.y.hi)

    def __call__(self, x, y):
        xa = np.asarray(x, dtype=np.float64)
        ya = np.asarray(y, dtype=np.float64)
        if xa.ndim == 0 and ya.ndim == 0:
            return K.cheb2_eval_scalar(self.coeffs, *self._dom(), float(xa), float(ya))
        xb, yb = np.broadcast_arrays(xa, ya)
        flat = K.cheb2_eval(self.coeffs, *self._dom(),
                            np.ascontiguousarray(xb.ravel(), dtype=np.float64),
                            np.ascontiguousarray(yb.ravel(), dtype=np.float64))
        return np.asarray(flat).reshape(xb.shape)

    def diff_x(self, a, b, y):
        """self(a, y) - self(b, y), stable for a close to b."""
        a_arr = np.atleast_1d(np.asarray(a, dtype=np.float64))
        b_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(b, dtype=np.float64), a_arr.shape))
        y_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(y, dtype=np.float64), a_arr.shape))
        out = K.cheb2_diff_x(self.coeffs, *self._dom(),
                             np.ascontiguousarray(a_arr), b_arr, y_arr)
        return float(out[0]) if np.asarray(a).ndim == 0 else np.asarray(out)

    def diff_y(self, x, ya, yb):
        """self(x, ya) - self(x, yb), stable for ya close to yb."""
        ya_arr = np.atleast_1d(np.asarray(ya, dtype=np.float64))
        x_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(x, dtype=np.float64), ya_arr.shape))
        yb_arr = np.ascontiguousarray(np.broadcast_to(
            np.asarray(yb, dtype=np.float64), ya_arr.shape))
        out = K.cheb2_diff_y(self.coeffs, *self._dom(), x_arr,
                             np.ascontiguousarray(ya_arr), yb_arr)
        return float(out[0]) if np.asarray(ya).ndim == 0 else np.asarray(out)

    def diff_x_rel(self, base, da, db, y):
        """self(base + da, y) - self(base + db, y) with exact small offsets."""
        base_arr = np.atleast_1d(np.asarray(base, dtype=np.float64))
        shape = base_arr.shape
        conv = lambda v: np.ascontiguousarray(np.broadcast_to(
            np.asarray(v, dtype=np.float64), shape))
        out = K.cheb2_diff_x_rel(self.coeffs, *self._dom(),
                                 np.ascontiguousarray(base_arr),
                                 conv(da), conv(db), conv(y))
        return float(out[0]) if np.asarray(base).ndim == 0 and \
            np.asarray(da).ndim == 0 else np.asarray(out)

    def diff_y_rel(self, x, base, da, db):
        """self(x, base + da) - self(x, base + db) with exact small offsets."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
        shape = x_arr.shape
        conv = lambda v: np.ascontiguousarray(np.broadcast_to(
            np.asarray(v, dtype=np.float64), shape))
        out = K.cheb2_diff_y_rel(self.coeffs, *self._dom(),
                                 np.ascontiguousarray(x_arr),
                                 conv(base), conv(da), conv(db))
        return float(out[0]) if np.asarray(x).ndim == 0 and \
            np.asarray(da).ndim == 0 else np.asarray(out)

    def deriv(self, axis: int = 0, order: int = 1) -> "Fun2":
        if axis == 0:
            scale = 2.0 / self.box.x.length
            c = npcheb.chebder(self.coeffs, m=order, scl=scale, axis=0)
        elif axis == 1:
            scale = 2.0 / self.box.y.length
            c = npcheb.chebder(self.coeffs, m=order, scl=scale, axis=1)
        else:
            raise RenormError("bad-axis", "axis must be 0 (x) or 1 (y)", axis=axis)
        if c.size == 0:
            c = np.zeros((1, 1))
        return Fun2(self.box, c)

    def tail_fraction(self) -> float:
        return _tail_fraction(self.coeffs)

    def sup_abs(self, n: int = 48) -> float:
        xs = self.box.x.grid(n)
        ys = self.box.y.grid(n)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return float(np.max(np.abs(self(X, Y))))

    def __repr__(self):
        return f"Fun2(degrees={self.degrees})"


def fit2(values, box: Box, degrees: tuple | None = None,
         config: Config = DEFAULT, check_tail: bool = True) -> Fun2:
    """Fit a callable f(x, y) or a sample matrix on the tensor grid."""
    if degrees is None:
        degrees = config.degree_2d
    nx, ny = degrees[0] + 1, degrees[1] + 1
    xs = cheb_nodes(box.x, degrees[0])
    ys = cheb_nodes(box.y, degrees[1])
    if callable(values):
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        samples = np.asarray(values(X, Y), dtype=np.float64)
    else:
        samples = np.asarray(values, dtype=np.float64)
        if samples.shape != (nx, ny):
            raise RenormError("bad-grid", "sample grid has wrong shape",
                              expected=(nx, ny), got=samples.shape)
    fun = fit_grid_2d(samples, box)
    if check_tail and fun.tail_fraction() > config.tail_rel_2d:
        raise RenormError("insufficient-resolution",
                          "coefficient tail does not decay",
                          degrees=degrees, tail=fun.tail_fraction())
    return fun
