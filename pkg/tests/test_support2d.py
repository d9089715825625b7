import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weinstock_lab import bodies as B
from weinstock_lab import functionals as F
from weinstock_lab import support2d as S
from weinstock_lab.errors import QuadratureFailure


def trapezoid_polar(rho, drho, n=1_000_000):
    """Uniform periodic trapezoid sums for L, A, J and the first moments."""
    phi = 2 * np.pi * np.arange(n) / n
    r, dr = rho(phi), drho(phi)
    speed = np.hypot(r, dr)
    m = lambda v: 2 * np.pi * float(np.mean(v))  # noqa: E731
    return {
        "L": m(speed),
        "A": m(0.5 * r * r),
        "J": m(r * r * speed),
        "mx": m(r * np.cos(phi) * speed),
        "my": m(r * np.sin(phi) * speed),
    }


def test_cardioid_gap_about_barycenter():
    laj = S.polar_laj(B.cardioid())
    q = trapezoid_polar(lambda p: 1 - np.cos(p), np.sin)
    J = q["J"] - (q["mx"] ** 2 + q["my"] ** 2) / q["L"]
    assert laj.L == pytest.approx(q["L"], rel=1e-10)
    assert laj.A == pytest.approx(q["A"], rel=1e-10)
    assert laj.J == pytest.approx(J, rel=1e-10)
    assert laj.gap == pytest.approx(-4 * math.pi / 75, abs=1e-10)


def test_cardioid_barycenter_and_origin_moment():
    assert np.allclose(S.polar_barycenter(B.cardioid()), [-0.8, 0.0], atol=1e-12)
    q = trapezoid_polar(lambda p: 1 - np.cos(p), np.sin)
    assert S.polar_laj(B.cardioid(), center="origin").J == pytest.approx(q["J"], rel=1e-10)
    with pytest.raises(ValueError):
        S.polar_laj(B.cardioid(), center="elsewhere")


def test_polar_circle_and_ellipse():
    laj = S.polar_laj(B.circle_polar(2.0))
    assert (laj.L, laj.A, laj.J) == pytest.approx((4 * math.pi, 4 * math.pi, 16 * math.pi), rel=1e-12)
    assert abs(laj.gap) < 1e-10
    ell = S.polar_laj(B.ellipse_polar(1.5, 0.5))
    poly = B.ellipse_polygon(1.5, 0.5, 20000)
    assert ell.A == pytest.approx(F.volume(poly), rel=1e-7)
    assert ell.J == pytest.approx(F.boundary_momentum(poly), rel=1e-7)
    assert ell.gap > 0


def test_quadrature_failure_is_raised():
    wild = B.PolarCurve(rho=lambda p: 1 + 0.5 * np.sin(1e4 * p) ** 2, name="wild")
    with pytest.raises(QuadratureFailure):
        S.polar_laj(wild, tol=1e-14, limit=5)


@pytest.mark.parametrize("k", [3, 4, 5, 6, 8, 12, 64])
def test_regular_polygon_closed_forms(k):
    poly, closed = S.regular_polygon(k)
    assert F.perimeter(poly) == pytest.approx(closed.L, rel=1e-12)
    assert F.volume(poly) == pytest.approx(closed.A, rel=1e-12)
    assert F.boundary_momentum(poly) == pytest.approx(closed.J, rel=1e-12)
    assert np.allclose(F.support_numbers(poly), 1.0)


def test_regular_polygon_rejects_small_k():
    with pytest.raises(ValueError):
        S.regular_polygon(2)


def test_support_laj_matches_functionals():
    body = B.random_support_body(np.random.default_rng(4))
    laj = S.laj_from_support(body)
    assert laj.L == pytest.approx(F.perimeter(body))
    assert laj.A == pytest.approx(F.volume(body))
    assert laj.J == pytest.approx(F.boundary_momentum(body))


def test_disk_gap_is_zero():
    g = S.weinstock_gap(B.support_body(1.3))
    J = F.boundary_momentum(B.support_body(1.3))
    assert abs(g.gap) < 1e-14 * J and g.p_sq < 1e-28 and g.chain_holds


def test_single_mode_gap_closed_form():
    # h = 1 + c cos(2 theta): int p^2 = pi c^2 and the cubic terms integrate to 0
    c = 0.1
    body = B.support_body(1.0, [[0, 0], [c, 0]])
    g = S.weinstock_gap(body)
    L = 2 * math.pi
    expected = math.pi * (L / math.pi) * math.pi * c * c
    assert g.gap == pytest.approx(expected, rel=1e-12)
    assert g.p_sq == pytest.approx(math.pi * c * c, rel=1e-12)


def test_gamma_asymptotics():
    a = S.lambda_gamma_asymptotics(0.5)
    assert a.predicted_slope == pytest.approx(-1 / 12)
    assert a.relative_error < 0.05
    assert np.all(a.ratio_minus_one < 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.9))
def test_gap_identity_and_chain(seed, amplitude):
    body = B.random_support_body(np.random.default_rng(seed), amplitude=amplitude)
    g = S.weinstock_gap(body)
    assert g.residual <= 1e-10
    assert g.gap >= g.lower_bound - 1e-14 and g.lower_bound >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gap_translation_behaviour(seed):
    body = B.random_support_body(np.random.default_rng(seed), shift=0.0)
    # translation changes only J; moving the barycenter away raises pi J - L A
    moved = B.translate(B.normalize(body), [0.05, 0.02])
    assert S.weinstock_gap(moved).gap > S.weinstock_gap(B.normalize(body)).gap
