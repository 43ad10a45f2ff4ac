"""Remainder and first-variation identities for composed planar maps.

A smooth map F is decomposed around a base point as

    F(z0 + z1) = F(z0) + DF(z0) (id + R_F(z0)) (z1)

and the remainder of a composition satisfies

    R_FG(z0) = R_G(z0) + DG(z0)^{-1} R_F(G z0) (DG(z0)(id + R_G(z0))).

The first variation of an n-fold composition with perturbations E_i of F_i is

    dC = sum_{i=0}^{n-1} D(F_1..F_i)|_{F_{i+1}..F_n(z)} E_{i+1}(F_{i+2}..F_n(z))

with the empty composition read as the identity (so the i = 0 term is just
E_1 evaluated along the unperturbed inner orbit, and n = 1 gives E_1(z)).
"""

from __future__ import annotations

import numpy as np

from .errors import RenormError


class SmoothMap2:
    """Planar map bundled with its derivative, for the identities below."""

    def __init__(self, fn, dfn):
        self._fn = fn
        self._dfn = dfn

    def __call__(self, z):
        return np.asarray(self._fn(np.asarray(z, dtype=float)), dtype=float)

    def derivative(self, z):
        return np.asarray(self._dfn(np.asarray(z, dtype=float)), dtype=float)

    @staticmethod
    def affine(A, b):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        return SmoothMap2(lambda z: A @ z + b, lambda z: A)

    @staticmethod
    def quadratic(lin, quad, offset):
        """z -> offset + lin @ z + (z^T quad[k] z)_k for k = 0, 1."""
        lin = np.asarray(lin, dtype=float)
        quad = np.asarray(quad, dtype=float)      # shape (2, 2, 2)
        offset = np.asarray(offset, dtype=float)

        def fn(z):
            q = np.array([z @ quad[0] @ z, z @ quad[1] @ z])
            return offset + lin @ z + q

        def dfn(z):
            dq = np.array([(quad[0] + quad[0].T) @ z, (quad[1] + quad[1].T) @ z])
            return lin + dq

        return SmoothMap2(fn, dfn)


def _deriv(F, z):
    d = F.derivative(np.asarray(z, dtype=float))
    return np.asarray(d, dtype=float).reshape(2, 2)


def remainder_decomposition(F, z0, z1):
    """(F(z0 + z1), DF(z0), remainder vector R_F(z0)(z1))."""
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    value = F(z0 + z1)
    D = _deriv(F, z0)
    det = np.linalg.det(D)
    if abs(det) < 1e-14:
        raise RenormError("singular-derivative",
                          "DF(z0) is not invertible", det=float(det))
    rem = np.linalg.solve(D, value - F(z0)) - z1
    return value, D, rem


def remainder_of_composition(F, G, z0, z1):
    """R_{F o G}(z0)(z1) assembled from the remainders of F and G."""
    z0 = np.asarray(z0, dtype=float)
    z1 = np.asarray(z1, dtype=float)
    _, DG, rg = remainder_decomposition(G, z0, z1)
    w = DG @ (z1 + rg)
    _, _, rf = remainder_decomposition(F, G(z0), w)
    return rg + np.linalg.solve(DG, rf)


def composition_first_variation(maps, perturbations, z):
    """First variation of F_1 o ... o F_n under F_i -> F_i + E_i at z.

    ``perturbations`` are callables returning 2-vectors.  Points escaping a
    map's evaluation raise ``domain-escape`` from the maps themselves when
    they enforce domains; plain callables are trusted.
    """
    n = len(maps)
    if len(perturbations) != n:
        raise RenormError("bad-input", "need one perturbation per map",
                          maps=n, perturbations=len(perturbations))
    z = np.asarray(z, dtype=float)

    # inner orbit: tail_pts[i] = F_{i+1} o ... o F_n (z), i = 0..n
    tail_pts = [None] * (n + 1)
    tail_pts[n] = z
    for i in range(n - 1, -1, -1):
        tail_pts[i] = np.asarray(maps[i](tail_pts[i + 1]), dtype=float)

    total = np.zeros(2)
    for i in range(0, n):
        # D(F_1..F_i) at tail_pts[i], identity when i = 0
        D = np.eye(2)
        pt = tail_pts[i]
        for j in range(i - 1, -1, -1):
            D = _deriv(maps[j], pt) @ D
            pt = np.asarray(maps[j](pt), dtype=float)
        total = total + D @ np.asarray(perturbations[i](tail_pts[i + 1]),
                                       dtype=float)
    return total
