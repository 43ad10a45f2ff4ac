import numpy as np
import pytest

from renormlab import (Fun1, Interval, RenormError, UNIT, compose1,
                       cross_ratio, differentiate, fit, fit2, find_roots,
                       identity_fun, schwarzian)
from renormlab.cheb import UNIT_BOX, cheb_nodes


def quad_fun(degree=8):
    return fit(lambda x: 4.0 * x * (1.0 - x), UNIT, degree=degree)


def test_fit_constant_is_c0_only():
    f = fit(lambda x: np.ones_like(x), UNIT, degree=12)
    assert abs(f.coeffs[0] - 1.0) < 1e-14
    assert np.max(np.abs(f.coeffs[1:])) < 1e-14


def test_fit_quadratic_exact_degree_two():
    f = quad_fun(degree=10)
    assert np.max(np.abs(f.coeffs[3:])) < 1e-13
    xs = np.linspace(0, 1, 257)
    assert np.max(np.abs(f(xs) - 4 * xs * (1 - xs))) < 1e-13


def test_fit_roundtrip_at_nodes():
    f = fit(np.sin, UNIT, degree=30)
    nodes = cheb_nodes(UNIT, 30)
    assert np.max(np.abs(f(nodes) - np.sin(nodes))) < 1e-13


def test_fit_sin_against_direct_evaluation():
    # oracle: the library sine itself
    f = fit(np.sin, UNIT, degree=30)
    xs = np.linspace(0, 1, 1000)
    assert np.max(np.abs(f(xs) - np.sin(xs))) < 1e-12


def test_fit_insufficient_resolution():
    steep = lambda x: 1.0 / (1.0 + 400.0 * (x - 0.3) ** 2)
    with pytest.raises(RenormError) as err:
        fit(steep, UNIT, degree=10)
    assert err.value.code == "insufficient-resolution"


def test_compose_identity():
    g = fit(lambda x: 0.25 + 0.5 * x * x, UNIT, degree=12)
    h = compose1(identity_fun(UNIT), g)
    xs = np.linspace(0, 1, 101)
    assert np.max(np.abs(h(xs) - g(xs))) < 1e-13


def test_compose_quadratic_critical_value():
    q = quad_fun()
    h = compose1(q, q)
    assert abs(h(0.5)) < 1e-12        # Q(Q(1/2)) = Q(1) = 0


def test_compose_matches_double_evaluation():
    f = fit(lambda x: 3.5 * x * (1 - x), UNIT, degree=12)
    h = compose1(f, f)
    assert abs(h(0.3) - f(float(f(0.3)))) < 1e-11


def test_compose_domain_escape():
    g = fit(lambda x: 2.0 * x, UNIT, degree=4, check_tail=False)
    f = quad_fun()
    with pytest.raises(RenormError) as err:
        compose1(f, g)
    assert err.value.code == "domain-escape"
    assert "x" in err.value.context


def test_differentiate_constant_and_critical_point():
    c = fit(lambda x: np.full_like(x, 2.5), UNIT, degree=6)
    assert np.max(np.abs(c.deriv()(np.linspace(0, 1, 50)))) < 1e-13
    q = quad_fun()
    assert abs(q.deriv()(0.5)) < 1e-13


def test_differentiate_matches_finite_differences():
    f = fit(lambda x: np.sin(3.0 * x) + x * x, UNIT, degree=40)
    df = f.deriv()
    xs = np.linspace(0.05, 0.95, 100)
    h = 1e-6
    fd = (f(xs + h) - f(xs - h)) / (2 * h)
    rel = np.abs(df(xs) - fd) / np.maximum(1.0, np.abs(fd))
    assert np.max(rel) < 1e-7


def test_differentiate_fun2_axis():
    eps = fit2(lambda x, y: 0.3 * y, UNIT_BOX, degrees=(2, 2), check_tail=False)
    dy = differentiate(eps, axis=1)
    xs = np.linspace(0, 1, 9)
    assert np.max(np.abs(dy(xs, xs) - 0.3)) < 1e-13


def test_find_roots_simple_and_double():
    q = quad_fun()
    roots0 = find_roots(q, 0.0)
    assert len(roots0) == 2
    assert abs(roots0[0]) < 1e-12 and abs(roots0[1] - 1.0) < 1e-12
    roots1 = find_roots(q, 1.0)
    assert len(roots1) == 1
    assert abs(roots1[0] - 0.5) < 1e-6          # double root at the fold
    assert abs(q(roots1[0]) - 1.0) < 1e-12


def test_find_roots_fixed_points_newton_oracle():
    a = 3.5
    f = fit(lambda x: a * x * (1 - x), UNIT, degree=10)
    roots = find_roots(f - identity_fun(UNIT), 0.0)

    def newton(x):
        for _ in range(60):
            g = a * x * (1 - x) - x
            dg = a * (1 - 2 * x) - 1.0
            x = x - g / dg
        return x

    expected = sorted({round(newton(0.1), 12), round(newton(0.9), 12)})
    assert len(roots) == 2
    for r, e in zip(roots, expected):
        assert abs(r - e) < 1e-10


def test_schwarzian_affine_zero():
    aff = fit(lambda x: 0.2 + 0.3 * x, UNIT, degree=4)
    for x in (0.1, 0.5, 0.9):
        assert abs(schwarzian(aff, x)) < 1e-9


def test_schwarzian_closed_form():
    q = quad_fun()
    assert abs(schwarzian(q, 0.0) + 6.0) < 1e-9


def test_schwarzian_critical_point_error():
    q = quad_fun()
    with pytest.raises(RenormError) as err:
        schwarzian(q, 0.5)
    assert err.value.code == "critical-point"


def test_schwarzian_cocycle():
    rng = np.random.default_rng(3)
    for _ in range(5):
        ca = rng.uniform(0.2, 0.5)
        f = fit(lambda x: 0.2 + ca * x + 0.1 * x ** 3, UNIT, degree=10)
        g = fit(lambda x: 0.1 + 0.6 * x - 0.2 * x ** 2, UNIT, degree=10)
        comp = compose1(f, g)
        x = rng.uniform(0.1, 0.9)
        lhs = schwarzian(comp, x)
        rhs = schwarzian(f, float(g(x))) * float(g.deriv()(x)) ** 2 \
            + schwarzian(g, x)
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))


def test_cross_ratio_values():
    assert abs(cross_ratio(Interval(0.25, 0.75), UNIT) - 8.0) < 1e-14
    assert abs(cross_ratio(Interval(0.4, 0.6), UNIT) - 1.25) < 1e-14


def test_cross_ratio_affine_invariance():
    inner, outer = Interval(0.3, 0.55), Interval(0.1, 0.9)
    v1 = cross_ratio(inner, outer)
    s, o = 3.7, -1.2
    v2 = cross_ratio(Interval(s * inner.lo + o, s * inner.hi + o),
                     Interval(s * outer.lo + o, s * outer.hi + o))
    assert abs(v1 - v2) < 1e-12


def test_cross_ratio_degenerate_gap():
    with pytest.raises(RenormError) as err:
        cross_ratio(Interval(0.0, 0.5), UNIT)
    assert err.value.code == "degenerate-gap"


def test_diff_rel_exact_for_tiny_offsets():
    # x^2 on [0,1]: f(b + d) - f(b) = 2 b d + d^2 exactly
    f = fit(lambda x: x * x, UNIT, degree=6)
    base, d = 0.37, 1e-30
    got = f.diff_rel(base, d, 0.0)
    expected = 2 * base * d + d * d
    assert abs(got - expected) < 1e-12 * abs(expected)
    # ordinary subtraction is hopeless at this scale
    assert f(base + d) - f(base) == 0.0


def test_fun2_diff_y_rel_tiny_offsets():
    eps = fit2(lambda x, y: (0.5 + x) * y * y, UNIT_BOX, degrees=(4, 4),
               check_tail=False)
    x, base, d = 0.3, 0.6, 1e-25
    got = eps.diff_y_rel(x, base, d, 0.0)
    expected = (0.5 + x) * (2 * base * d + d * d)
    assert abs(got - expected) < 1e-11 * abs(expected)


def test_fun2_diff_x_rel_matches_plain_difference():
    eps = fit2(lambda x, y: np.sin(x) * y + 0.2 * x * x, UNIT_BOX,
               degrees=(12, 4), check_tail=False)
    got = eps.diff_x_rel(0.4, 0.05, 0.0, 0.7)
    expected = eps(0.45, 0.7) - eps(0.4, 0.7)
    assert abs(got - expected) < 1e-13
