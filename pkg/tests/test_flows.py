import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weinstock_lab import bodies as B
from weinstock_lab import flows as FL
from weinstock_lab import functionals as F
from weinstock_lab.errors import CurvatureUnavailable, InsufficientSamples


def suite():
    rng = np.random.default_rng(2024)
    out = [B.random_support_body(rng, amplitude=0.5, shift=0.2) for _ in range(6)]
    out += [
        B.ellipse_support(0.6, 1.0, 32),
        B.ellipse_support(0.8, 1.2, 48, center=(0.1, 0.05)),
        B.support_body(1.0, [[0.1, 0.0], [0.1, 0.05]]),
        B.support_body(2.0, [[0.0, 0.3], [0.0, 0.0], [0.05, 0.02]]),
    ]
    return out


SUITE = suite()


def _pad(c, m):
    out = np.zeros((m, 2))
    out[: len(c)] = c
    return out


def fd_derivative(body, a0, coeffs, s=1e-5):
    """Central difference of the ratio along ``h + s phi`` with ``phi`` in Fourier form."""
    m = max(body.modes, len(coeffs))
    base, dirn = _pad(body.coeffs, m), _pad(coeffs, m)
    plus = B.SupportBody2(body.a0 + s * a0, base + s * dirn)
    minus = B.SupportBody2(body.a0 - s * a0, base - s * dirn)
    return (F.lam(plus) - F.lam(minus)) / (2 * s)


def _bump(theta):
    return np.exp(np.cos(theta - 0.7))


def fields(body):
    k = np.arange(1, body.modes + 1)
    bump = B.fourier_coefficients(_bump(B.theta_grid(1024)), 40)
    return {
        "one": (lambda t: np.ones_like(t), (1.0, np.zeros((0, 2)))),
        "inverse_curvature": (FL.inverse_curvature(body), (body.a0, body.coeffs * (1 - k**2)[:, None])),
        "bump": (_bump, bump),
    }


@pytest.mark.parametrize("index", range(len(SUITE)))
@pytest.mark.parametrize("name", ["one", "inverse_curvature", "bump"])
def test_shape_derivative_matches_finite_differences(index, name):
    body = SUITE[index]
    phi, (a0, coeffs) = fields(body)[name]
    formula = FL.shape_derivative(body, phi)
    fd = fd_derivative(body, a0, coeffs)
    assert formula == pytest.approx(fd, rel=1e-4)


def test_shape_derivative_zero_on_centered_disk():
    assert FL.shape_derivative(B.support_body(1.0), 1.0) == 0.0
    assert abs(FL.shape_derivative(B.support_body(2.5), lambda t: np.ones_like(t))) <= 1e-15


def test_shape_derivative_constant_field_forms():
    body = SUITE[0]
    a = FL.shape_derivative(body, 1.0)
    b = FL.shape_derivative(body, np.ones(B.GRID_SIZE))
    assert a == b
    with pytest.raises(ValueError):
        FL.shape_derivative(body, np.ones(7))


def test_polygon_curvature_needs_many_vertices():
    with pytest.raises(CurvatureUnavailable):
        FL.shape_derivative(B.square(), 1.0)


def test_polygon_shape_derivative_approximates_smooth_body():
    body = B.ellipse_support(0.7, 1.0, 64)
    poly = body.to_polygon(2048)
    d = FL.shape_derivative_terms(poly, 1.0)
    assert d.approximate
    assert d.value == pytest.approx(FL.shape_derivative(body, 1.0), rel=1e-3)


def test_ellipse_flow_seed_has_negative_excess_and_descends():
    body = B.ellipse_support(0.25, 1.0, 128)
    assert F.excess(body) < 0
    assert FL.shape_derivative(body, FL.inverse_curvature(body)) < 0


def test_evolve_modes():
    body = B.support_body(1.0, [[0.2, 0.1], [0.1, 0.0], [0.0, 0.02]])
    t = 0.3
    ev = FL.evolve_support(body, t)
    assert ev.a0 == pytest.approx(math.exp(t))
    assert np.allclose(ev.coeffs[0], [0.2, 0.1])  # translations are frozen
    assert np.allclose(ev.coeffs[1], np.array([0.1, 0.0]) * math.exp(-3 * t))


def test_semigroup():
    body = SUITE[3]
    for s, t in ((0.1, 0.2), (0.5, 0.25), (0.0, 1.0)):
        a = FL.evolve_support(FL.evolve_support(body, s), t)
        b = FL.evolve_support(body, s + t)
        assert abs(a.a0 - b.a0) <= 1e-14 * abs(b.a0)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-14 * abs(b.a0)


def test_imcf_perimeter_growth_and_diagnostics():
    state = FL.imcf_evolve(SUITE[8], T=1.0, dt_record=0.01)
    diag = FL.flow_diagnostics(state)
    assert diag.perimeter_rel_error <= 1e-12
    assert diag.rmax_bound_holds and diag.mvneg_holds and diag.pointneg_holds
    assert diag.mvzero_residual <= 1e-12
    # second-order differences on a gentle body
    assert diag.dVdt_rel_error <= 1e-3


def test_imcf_csv_columns():
    state = FL.imcf_evolve(SUITE[0], T=0.05, dt_record=0.01)
    lines = state.to_csv().splitlines()
    assert lines[0] == "t,V,P,W,lambda,excess,rmax"
    assert len(lines) == 7


def test_imcf_lambda_monotone_for_negative_excess_seed():
    body = B.ellipse_support(0.25, 1.0, 128)
    diag = FL.flow_diagnostics(FL.imcf_evolve(body, T=1.0, dt_record=0.01))
    assert diag.lambda_monotone
    assert diag.excess_sign_change is not None and diag.excess_sign_change > 0


def test_insufficient_samples():
    state = FL.imcf_evolve(SUITE[0], T=0.01, dt_record=0.01)
    with pytest.raises(InsufficientSamples):
        FL.flow_diagnostics(state)


def test_volume_rate_matches_derivative_of_exact_volume():
    body = SUITE[2]
    d = 1e-4
    fd = (F.volume(FL.evolve_support(body, d)) - F.volume(FL.evolve_support(body, -d))) / (2 * d)
    assert FL.volume_rate(body) == pytest.approx(fd, rel=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_perimeter_exponential_property(seed, t):
    body = B.random_support_body(np.random.default_rng(seed))
    assert F.perimeter(FL.evolve_support(body, t)) == pytest.approx(F.perimeter(body) * math.exp(t), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ros_inequality(seed):
    body = B.random_support_body(np.random.default_rng(seed), amplitude=0.8)
    assert FL.ros_check(body).margin >= -1e-12


def test_ros_equality_on_disk():
    r = FL.ros_check(B.support_body(1.5))
    assert r.lhs == pytest.approx(r.rhs, rel=1e-14)
