"""Central tolerance and resolution settings.

All numeric knobs live in one immutable record so that every module pulls its
defaults from the same place.  Functions accept an optional ``config``
argument; ``DEFAULT`` is used when none is given.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Config:
    # spectral resolution
    degree_1d: int = 64
    degree_2d: tuple = (48, 16)
    tail_rel_1d: float = 1e-7          # relative tail-decay bound for 1d fits
    tail_rel_2d: float = 1e-5          # same for 2d fits (per index direction)

    # root finding
    root_scan_step: float = 1e-4       # scan resolution, fraction of domain length
    root_tol: float = 1e-13
    deriv_floor: float = 1e-8          # "near-critical" derivative threshold

    # composition / domain checks
    compose_margin: float = 1e-8

    # unimodal map membership
    endpoint_tol: float = 1e-10
    expansion_margin: float = 1e-6

    # fixed point solver
    fd_step: float = 1e-7
    newton_max_iter: int = 30
    fixedpoint_degree_doubling: int = 40
    fixedpoint_degree_general: int = 60

    # Henon renormalisation
    gamma_margin_frac: float = 0.05    # critical-locus margin, fraction of box width
    boundary_samples: int = 200
    henon_newton_iter: int = 60

    # Cantor pieces
    piece_boundary_points: int = 12
    piece_bbox_inflation: float = 1e-6

    def with_(self, **kw) -> "Config":
        return replace(self, **kw)


DEFAULT = Config()
