"""Command line interface: map ingestion, experiments, machine-readable output.

Input maps are JSON documents with a versioned schema:

    {
      "version": 1,
      "kind": "logistic",                 // logistic | polynomial | fixed-point-seed
      "parameters": {"a": 3.59549},
      "thickening": {"form": "linear-y", "eps_bar": 0.01,
                     "data": {"c": 0.01}},
      "permutation": "p=2; 0->1,1->0"
    }

Unknown fields are rejected.  Every command writes a self-describing result
document (JSON by default, CSV tables with ``--format csv``) and exits 0
exactly when every enabled assertion passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .cheb import UNIT, fit
from .config import DEFAULT
from .errors import RenormError
from .henon import HenonLikeMap, Thickening
from .unimodal import UnimodalMap, UnimodalPermutation, logistic, parse_permutation
from . import asymptotics, cantor, fixedpoint, logistic as cascades, unimodal

SCHEMA_VERSION = 1
_TOP_KEYS = {"version", "kind", "parameters", "thickening", "permutation"}
_THICK_KEYS = {"form", "eps_bar", "data"}


def load_map_spec(path: str):
    """Parse a map document into (HenonLikeMap, permutation, echo dict)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RenormError("bad-input", f"cannot read map document {path!r}",
                          detail=str(exc)) from exc
    if not isinstance(doc, dict):
        raise RenormError("bad-input", "map document must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise RenormError("bad-input", "unknown fields in map document",
                          fields=sorted(unknown))
    if doc.get("version") != SCHEMA_VERSION:
        raise RenormError("bad-input", "unsupported schema version",
                          version=doc.get("version"))
    perm = parse_permutation(doc.get("permutation", "p=2; 0->1,1->0"))
    kind = doc.get("kind")
    params = doc.get("parameters", {})
    if kind == "logistic":
        if "a" not in params:
            raise RenormError("bad-input", "logistic maps need parameters.a")
        f = logistic(float(params["a"]), degree=24)
    elif kind == "polynomial":
        coeffs = params.get("coeffs")
        if not coeffs:
            raise RenormError("bad-input", "polynomial maps need parameters.coeffs")
        poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        f = UnimodalMap.from_fun(fit(lambda x: poly(x), UNIT), strict=True)
    elif kind == "fixed-point-seed":
        seed_a = float(params.get("seed_a", _default_seed(perm)))
        fp = fixedpoint.solve_fixed_point(perm, logistic(seed_a, degree=24))
        f = fp.f_star
    else:
        raise RenormError("bad-input", f"unknown map kind {kind!r}")
    thick = _build_thickening(doc.get("thickening"))
    return HenonLikeMap(f, thick, 1), perm, doc


def _default_seed(perm: UnimodalPermutation) -> float:
    params = cascades.superstable_cascade(perm.p, 3)
    return params[-1]


def _build_thickening(spec) -> Thickening:
    if spec is None:
        return Thickening.zero()
    unknown = set(spec) - _THICK_KEYS
    if unknown:
        raise RenormError("bad-input", "unknown fields in thickening",
                          fields=sorted(unknown))
    form = spec.get("form")
    data = spec.get("data", {})
    eps_bar = spec.get("eps_bar")
    if form == "linear-y":
        thick = Thickening.linear_y(float(data["c"]))
    elif form == "separable":
        g_coeffs = np.asarray(data["g"], dtype=float)
        poly = np.polynomial.Polynomial(g_coeffs)
        thick = Thickening.separable(float(data["c"]), lambda x: poly(x))
    elif form == "coeff-matrix":
        thick = Thickening.from_matrix(np.asarray(data["coeffs"], dtype=float))
    else:
        raise RenormError("bad-input", f"unknown thickening form {form!r}")
    if eps_bar is not None and thick.sup > float(eps_bar) * (1 + 1e-9):
        raise RenormError("bad-input", "thickening exceeds declared eps_bar",
                          sup=thick.sup, eps_bar=eps_bar)
    return thick


# ---------------------------------------------------------------------------
# result documents


class Result:
    def __init__(self, command: str, inputs):
        self.doc = {
            "command": command,
            "version": f"renormlab/{__version__} schema {SCHEMA_VERSION}",
            "inputs": inputs,
            "tables": {},
            "assertions": [],
        }

    def table(self, name: str, columns, rows):
        self.doc["tables"][name] = {
            "columns": list(columns),
            "rows": [[_jsonable(v) for v in row] for row in rows],
        }

    def value(self, name, value):
        self.doc.setdefault("values", {})[name] = _jsonable(value)

    def check(self, name: str, passed: bool, **info):
        entry = {"name": name, "passed": bool(passed)}
        entry.update({k: _jsonable(v) for k, v in info.items()})
        self.doc["assertions"].append(entry)

    @property
    def ok(self) -> bool:
        return all(a["passed"] for a in self.doc["assertions"])

    def write(self, out, fmt: str):
        if fmt == "json":
            text = json.dumps(self.doc, indent=2, sort_keys=True)
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            for name, tab in self.doc["tables"].items():
                writer.writerow([f"# table: {name}"])
                writer.writerow(tab["columns"])
                writer.writerows(tab["rows"])
            for a in self.doc["assertions"]:
                writer.writerow([f"# assertion: {a['name']}",
                                 "pass" if a["passed"] else "fail"])
            text = buf.getvalue()
        if out in (None, "-"):
            sys.stdout.write(text + "\n")
        else:
            with open(out, "w") as fh:
                fh.write(text + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_fixed_point(args) -> Result:
    perm = parse_permutation(args.perm)
    seed_a = args.seed_a or _default_seed(perm)
    seed = logistic(seed_a, degree=24)
    fp = fixedpoint.solve_fixed_point(perm, seed, tol=args.tol,
                                      workers=args.workers)
    spectrum = fixedpoint.operator_spectrum(fp, perm, workers=args.workers)
    res = Result("fixed-point", {"perm": str(perm), "seed_a": seed_a,
                                 "tol": args.tol})
    res.value("sigma", fp.sigma)
    res.value("residual", fp.residual)
    res.value("newton_iterations", fp.newton_iterations)
    res.value("unstable_eigenvalue", spectrum.unstable_eigenvalue)
    res.value("eigen_residual", spectrum.residual)
    res.value("convex_on_J1", fp.convex_on_J1)
    res.table("f_star_coefficients", ["k", "c_k"],
              list(enumerate(fp.f_star.fun.coeffs.tolist())))
    res.table("top_eigenvalue_magnitudes", ["rank", "magnitude"],
              list(enumerate(spectrum.top_magnitudes)))
    res.check("residual-below-tol", fp.residual < args.tol,
              residual=fp.residual, tol=args.tol)
    res.check("sigma-in-unit-interval", 0.0 < fp.sigma < 1.0, sigma=fp.sigma)
    res.check("one-unstable-eigenvalue",
              sum(m > 1.0 for m in spectrum.top_magnitudes) == 1,
              magnitudes=list(spectrum.top_magnitudes))
    return res


def _tower_from_args(args, depth=None):
    F, perm, doc = load_map_spec(args.spec)
    tower = cantor.build_tower(F, depth if depth is not None else args.depth,
                               perm)
    return F, perm, doc, tower


def cmd_tower(args) -> Result:
    _, perm, doc, tower = _tower_from_args(args)
    res = Result("tower", doc)
    sups = tower.eps_sups()
    res.table("eps_sup", ["stage", "eps_sup"], list(enumerate(sups)))
    logs = [math.log(v) for v in sups if v > 0.0]
    slopes = [logs[i + 1] / logs[i] for i in range(len(logs) - 1)
              if logs[i] < 0.0]
    res.table("log_slope", ["stage", "slope"], list(enumerate(slopes)))
    res.check("eps-decreasing",
              all(sups[i + 1] < sups[i] for i in range(len(sups) - 1)
                  if sups[i] > 0.0))
    return res


def cmd_cantor(args) -> Result:
    _, perm, doc, tower = _tower_from_args(args, depth=max(args.depth, 2))
    pieces_depth = min(args.depth, tower.depth + 1)
    ca = cantor.pieces_at_depth(tower, pieces_depth)
    res = Result("cantor", doc)
    rows = []
    for word, piece in sorted(ca.pieces.items(), key=lambda kv: str(kv[0])):
        rows.append([str(word), piece.bbox.x.lo, piece.bbox.x.hi,
                     piece.bbox.y.lo, piece.bbox.y.hi,
                     piece.center[0], piece.center[1], ca.measure(word)])
    res.table("pieces", ["word", "x_lo", "x_hi", "y_lo", "y_hi",
                         "center_x", "center_y", "measure"], rows)
    residuals = cantor.conjugacy_residuals(ca)
    worst = max(residuals.values())
    res.value("worst_conjugacy_residual", worst)
    res.check("piece-count", len(ca.pieces) == perm.p ** pieces_depth)
    diam = {w: p.diameter for w, p in ca.pieces.items()}
    from .unimodal import adding_machine_successor
    res.check("adding-machine-conjugacy",
              all(residuals[w] <= diam[adding_machine_successor(w)] + 1e-9
                  for w in residuals))
    if args.csv_out:
        cantor.export_csv(ca, args.csv_out)
    return res


def cmd_jacobian(args) -> Result:
    F, perm, doc, tower = _tower_from_args(args)
    res = Result("jacobian", doc)
    if F.is_degenerate:
        res.value("b", 0.0)
        res.check("degenerate-exact-zero", True)
        return res
    depth = min(args.depth, tower.depth)
    ca = cantor.pieces_at_depth(tower, depth)
    est = cantor.average_jacobian(ca)
    res.value("b", est.b)
    res.value("error_estimate", est.error_estimate)
    res.value("cross_check", est.cross_check)
    res.check("estimators-agree",
              abs(est.b - est.cross_check)
              <= max(est.error_estimate, 1e-12) + 1e-12,
              difference=abs(est.b - est.cross_check))
    return res


def cmd_universality(args) -> Result:
    F, perm, doc, tower = _tower_from_args(args)
    fp = fixedpoint.solve_fixed_point(perm, logistic(_default_seed(perm),
                                                     degree=24))
    ud = asymptotics.universal_data(fp)
    b = cantor.orbit_jacobian_estimate(tower, min(tower.depth, 8))
    rep = asymptotics.universality_report(tower, ud, b, f_star=fp.f_star)
    res = Result("universality", doc)
    res.value("b", b)
    res.value("rho_fit", rep.rho_fit)
    res.table("e_n", ["n", "e_n"], rep.entries)
    res.table("tilt", ["n", "tilt", "a_b_power"], rep.tilt_rows)
    res.table("f_distance", ["n", "sup_distance"],
              list(enumerate(rep.f_distances)))
    es = [e for _, e in rep.entries]
    res.check("e_n-decreasing",
              all(es[i + 1] < es[i] for i in range(len(es) - 1)))
    return res


def cmd_linefield(args) -> Result:
    F, perm, doc, tower = _tower_from_args(args)
    res = Result("linefield", doc)
    rows = asymptotics.linefield_divergence_demo(tower,
                                                 range(1, args.depth))
    res.table("rows", ["m", "base_distance", "projective_gap",
                       "return_sensitivity"],
              [[r.m, r.base_distance, r.projective_gap, r.return_sensitivity]
               for r in rows])
    bases = [r.base_distance for r in rows]
    sens = [r.return_sensitivity for r in rows]
    res.check("base-distance-shrinking",
              all(bases[i + 1] < bases[i] for i in range(len(bases) - 1)))
    res.check("return-sensitivity-exploding",
              all(sens[i + 1] > 10.0 * sens[i] for i in range(len(sens) - 1)))
    gaps = [r.projective_gap for r in rows]
    res.check("projective-gap-growing",
              len(gaps) >= 3 and
              all(gaps[i + 1] > 10.0 * gaps[i] for i in range(len(gaps) - 1)))
    return res


def cmd_rigidity(args) -> Result:
    F_a, perm_a, doc_a = load_map_spec(args.spec)
    F_b, perm_b, doc_b = load_map_spec(args.spec_b)
    tower_a = cantor.build_tower(F_a, args.depth, perm_a)
    tower_b = cantor.build_tower(F_b, args.depth, perm_b)
    res = Result("rigidity", {"a": doc_a, "b": doc_b})
    try:
        hr = asymptotics.holder_experiment(tower_a, tower_b,
                                           allow_low_contrast=True)
    except RenormError as exc:
        res.check("experiment-ran", False, error=exc.code)
        return res
    res.value("b", hr.b_plain)
    res.value("b_tilde", hr.b_tilde)
    res.value("bound", hr.bound_capped)
    res.value("bound_uncapped", hr.bound)
    res.table("witnesses", ["m", "n", "d", "d_tilde", "alpha_emp"],
              [[r.m, r.n, r.d_plain, r.d_tilde, r.alpha_emp] for r in hr.rows])
    sufficient = abs(hr.bound - 1.0) > 0.02
    res.check("sufficient-contrast", sufficient, bound=hr.bound)
    if hr.rows:
        res.check("alpha-within-bound", hr.alpha_max <= hr.bound + 0.05,
                  alpha_max=hr.alpha_max, bound=hr.bound)
    return res


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int,
                        default=int(os.environ.get("RENORMLAB_WORKERS", "1")),
                        help="worker threads for parallelisable stages")
    common.add_argument("--out", default=None,
                        help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="renormlab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    fp = sub.add_parser("fixed-point", parents=[common],
                        help="solve the renormalisation fixed point")
    fp.add_argument("--perm", default="p=2; 0->1,1->0")
    fp.add_argument("--tol", type=float, default=1e-11)
    fp.add_argument("--seed-a", type=float, default=None)
    fp.set_defaults(fn=cmd_fixed_point)

    for name, fn in (("tower", cmd_tower), ("cantor", cmd_cantor),
                     ("jacobian", cmd_jacobian),
                     ("universality", cmd_universality),
                     ("linefield", cmd_linefield)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("spec", help="map document (JSON)")
        p.add_argument("--depth", type=int, default=5)
        if name == "cantor":
            p.add_argument("--csv-out", default=None)
        p.set_defaults(fn=fn)

    rg = sub.add_parser("rigidity", parents=[common])
    rg.add_argument("spec", help="first map document")
    rg.add_argument("spec_b", help="second map document")
    rg.add_argument("--depth", type=int, default=10)
    rg.set_defaults(fn=cmd_rigidity)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.fn(args)
    except RenormError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2 if exc.code == "bad-input" else 3
    result.write(args.out, args.format)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
