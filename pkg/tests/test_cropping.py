import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from weinstock_lab import bodies as B
from weinstock_lab import cropping as C
from weinstock_lab import functionals as F
from weinstock_lab.errors import CutMissesBody, CutThroughOrigin, NoDescentFound
from weinstock_lab.support2d import regular_polygon

SQRT2 = math.sqrt(2)


def circle_ngon(seed, k=30):
    t = np.sort(np.random.default_rng(seed).uniform(0, 2 * np.pi, k))
    return B.Polygon2(np.stack([np.cos(t), np.sin(t)], axis=1))


def removed_piece_volume(body, res):
    """Qhull volume of the part above the cut: vertices beyond the plane plus the cut section."""
    u = res.direction
    offset = res.original.r_max - res.eps
    v = body.vertices
    above = v[v @ u > offset]
    section = []
    if isinstance(body, B.Polygon2):
        pairs = [(i, (i + 1) % len(v)) for i in range(len(v))]
    else:
        f = body.faces
        pairs = {tuple(sorted(e)) for e in np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])}
    for i, j in pairs:
        si, sj = v[i] @ u - offset, v[j] @ u - offset
        if si * sj < 0:
            section.append(v[i] + si / (si - sj) * (v[j] - v[i]))
    return ConvexHull(np.vstack([above, section])).volume


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.01, 0.3])
def test_square_corner_closed_form(eps):
    r = C.crop(B.square(), eps)
    assert abs(r.dV + eps**2) <= 1e-12
    assert abs(r.dP + 2 * (SQRT2 - 1) * eps) <= 1e-12
    assert np.allclose(r.direction, [1 / SQRT2, 1 / SQRT2])
    assert r.cap_area == pytest.approx(2 * eps, rel=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.02])
def test_cube_corner_closed_form(eps):
    r = C.crop(B.cube(), eps)
    leg = math.sqrt(3) * eps
    assert r.dV == pytest.approx(-(leg**3) / 6, rel=1e-10)
    assert r.dP == pytest.approx(-(1.5 - math.sqrt(3) / 2) * leg**2, rel=1e-10)
    assert r.cap_area == pytest.approx(math.sqrt(3) / 2 * leg**2, rel=1e-10)
    assert r.cap_diameter == pytest.approx(SQRT2 * leg, rel=1e-10)


@pytest.mark.parametrize(
    "body",
    [B.square(), circle_ngon(1), B.random_ngon(np.random.default_rng(4)), B.cube(),
     B.random_polytope(np.random.default_rng(9))],
    ids=["square", "30gon", "12gon", "cube", "polytope"],
)
def test_clipping_volume_conservation(body, eps=0.07):
    r = C.crop(body, eps)
    piece = removed_piece_volume(body, r)
    assert F.volume(r.cropped_body) + piece == pytest.approx(F.volume(body), rel=1e-12)


def test_square_cut_sweep():
    eps = [0.1, 0.05, 0.025, 0.0125]
    rep = C.lemma_reverse_check(B.square(), eps)
    assert np.allclose(rep.ratios, np.array(eps) / (2 * (SQRT2 - 1)), rtol=1e-10)
    assert rep.passed and rep.deltas_negative and rep.diameter_bound_holds


@pytest.mark.parametrize("body", [circle_ngon(3), B.cube()], ids=["30gon", "cube"])
def test_cut_sweep_random_and_cube(body):
    rep = C.lemma_reverse_check(body, [0.1, 0.05, 0.025, 0.0125])
    assert rep.ratio_bounded and rep.residual_vanishing and rep.expansion_vanishing
    assert rep.deltas_negative and rep.diameter_bound_holds
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(C.CROP_CSV_COLUMNS) and len(lines) == 5


def test_cut_sweep_rejects_bad_eps_lists():
    with pytest.raises(ValueError):
        C.lemma_reverse_check(B.square(), [0.01, 0.02, 0.03])
    with pytest.raises(ValueError):
        C.lemma_reverse_check(B.square(), [0.1, 0.05])


def test_regular_64gon_first_order_agreement_at_corner_scale():
    # the corner sits R - 1 ~ 1.2e-3 above the inscribed circle; below that depth the cut is a corner cut
    poly, _ = regular_polygon(64)
    eps = [8e-4, 4e-4, 2e-4, 1e-4, 5e-5]
    res = [C.crop(poly, e) for e in eps]
    assert all(r.delta_lambda_actual < 0 for r in res)
    rel = [abs(r.expansion_error) / abs(r.delta_lambda_predicted) for r in res]
    assert all(b < a for a, b in zip(rel, rel[1:]))
    assert rel[-1] < 0.05


def test_regular_64gon_expansion_residual_vanishes_at_deeper_cuts():
    poly, _ = regular_polygon(64)
    rep = C.lemma_reverse_check(poly, [0.05, 0.02, 0.01, 0.005])
    assert rep.expansion_vanishing and rep.residual_vanishing


def test_crop_errors_and_direction_override():
    sq = B.square()
    with pytest.raises(CutMissesBody):
        C.crop(sq, 0.0)
    with pytest.raises(CutThroughOrigin):
        C.crop(sq, 1.5)
    r = C.crop(sq, 0.2, direction=[1.0, 0.0])
    assert r.dV == pytest.approx(-0.4)
    assert r.dP == pytest.approx(-0.4)  # the two side edges each lose 0.2


def test_step3_descent_square():
    v = C.step3_descent(B.square())
    assert v.found and v.regime == "positive-excess"
    assert v.excess == pytest.approx(SQRT2 - 4 / 3)
    assert F.lam(v.witness.cropped_body) < F.lam(B.square())


def test_step3_descent_ellipse_like_128gon():
    v = C.step3_descent(B.ellipse_polygon(1.1, 0.9, 128))
    assert v.excess > 0 and v.found
    assert v.witness.delta_lambda_actual < 0


def test_step3_descent_near_disk():
    poly = B.disk_polygon(512)
    v = C.step3_descent(poly)
    assert not v.found
    assert abs(v.curvature_gap) < 1e-4
    with pytest.raises(NoDescentFound):
        C.step3_descent(poly, raise_on_failure=True)


def test_step3_descent_negative_excess_regime():
    v = C.step3_descent(B.ellipse_polygon(0.3, 1 / 0.3, 256))
    assert v.regime == "negative-excess" and not v.found and v.tried == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5))
def test_cut_sign_structure_2d(seed, frac):
    poly = B.normalize(B.random_polygon(np.random.default_rng(seed)))
    r_max, _ = F.farthest_point(poly)
    try:
        r = C.crop(poly, frac * r_max)
    except (CutMissesBody, CutThroughOrigin):
        return
    assert r.dV < 0 and r.dP < 0
    assert r.cap_diameter <= r.diameter_bound * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5))
def test_cut_sign_structure_3d(seed, frac):
    body = B.normalize(B.random_polytope(np.random.default_rng(seed)))
    r_max, _ = F.farthest_point(body)
    try:
        r = C.crop(body, frac * r_max)
    except (CutMissesBody, CutThroughOrigin):
        return
    assert r.dV < 0 and r.dP < 0
    assert r.cap_diameter <= r.diameter_bound * (1 + 1e-12)
