"""Cutting a convex polytope by a hyperplane near its farthest point.

The kept part is ``{x : x . u <= r_max - eps}`` with ``u = x_max / r_max``.
Every change in volume, perimeter and boundary momentum is obtained by
recomputing the exact functionals of the clipped body, and compared with
the first-order prediction

    d_lambda ~ (2 E dV + (r_max^2 - W/P) dP) / (V^(2/n) P).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .bodies import Polygon2, Polytope3
from .errors import CutMissesBody, CutThroughOrigin, InvalidBody, NoDescentFound, NotConvex
from .functionals import (
    FunctionalReport,
    boundary_momentum,
    lam,
    perimeter,
    report,
    volume,
)

Polytope = Union[Polygon2, Polytope3]


def clip_polygon(poly: Polygon2, normal, offset: float) -> Polygon2:
    """``poly`` intersected with the halfplane ``x . normal <= offset``."""
    v = poly.vertices
    d = v @ np.asarray(normal, dtype=float) - offset
    tol = 1e-14 * poly.scale()
    d = np.where(np.abs(d) <= tol, 0.0, d)
    out = []
    m = len(v)
    for i in range(m):
        j = (i + 1) % m
        if d[i] <= 0:
            out.append(v[i])
        if d[i] * d[j] < 0:
            s = d[i] / (d[i] - d[j])
            out.append(v[i] + s * (v[j] - v[i]))
    return Polygon2(np.array(out))


def clip_polytope(body: Polytope3, normal, offset: float):
    """Clip by ``x . normal <= offset``; the cap is fan-triangulated from its centroid.

    Returns the clipped polytope and the cap's vertex loop.
    """
    normal = np.asarray(normal, dtype=float)
    v = body.vertices
    d = v @ normal - offset
    tol = 1e-14 * body.scale()
    d = np.where(np.abs(d) <= tol, 0.0, d)

    verts: List[np.ndarray] = []
    index = {}

    def vid(i):
        key = ("v", i)
        if key not in index:
            index[key] = len(verts)
            verts.append(v[i])
        return index[key]

    def eid(i, j):
        a, b = min(i, j), max(i, j)
        key = ("e", a, b)
        if key not in index:
            s = d[a] / (d[a] - d[b])
            index[key] = len(verts)
            verts.append(v[a] + s * (v[b] - v[a]))
        return index[key]

    faces = []
    for tri in body.faces:
        poly = []
        for k in range(3):
            i, j = tri[k], tri[(k + 1) % 3]
            if d[i] <= 0:
                poly.append(vid(i))
            if d[i] * d[j] < 0:
                poly.append(eid(i, j))
        for k in range(1, len(poly) - 1):
            faces.append((poly[0], poly[k], poly[k + 1]))

    faces = [f for f in faces if len(set(f)) == 3]
    # boundary of the kept surface = edges used once; the cap closes them
    directed = {}
    for f in faces:
        for k in range(3):
            directed[(f[k], f[(k + 1) % 3])] = True
    open_edges = [(a, b) for (a, b) in directed if (b, a) not in directed]
    if not open_edges:
        raise CutMissesBody("the cutting plane does not meet the polytope")
    loop_vertices = sorted({a for a, _ in open_edges})
    verts_arr = np.array(verts)
    center = verts_arr[loop_vertices].mean(axis=0)
    c = len(verts_arr)
    verts_arr = np.vstack([verts_arr, center])
    faces += [(b, a, c) for a, b in open_edges]
    clipped = Polytope3(verts_arr, np.array(faces))
    return clipped, verts_arr[loop_vertices]


def _cap_measure(cap_points: np.ndarray, normal: np.ndarray) -> float:
    if len(cap_points) < 3:
        return 0.0
    # project onto the plane and take the hull area
    from scipy.spatial import ConvexHull

    e1 = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 0.1:
        e1 = np.cross(normal, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    uv = np.stack([cap_points @ e1, cap_points @ e2], axis=1)
    return float(ConvexHull(uv).volume)


def _diameter(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


@dataclass
class CropResult:
    original: FunctionalReport
    cropped_body: Polytope
    eps: float
    direction: np.ndarray
    dV: float
    dP: float
    dW: float
    delta_lambda_actual: float
    delta_lambda_predicted: float
    cap_area: float
    cap_diameter: float

    @property
    def deltas(self):
        return self.dV, self.dP, self.dW

    @property
    def lemma_residual(self) -> float:
        """``dW - 2 r_max dV - r_max^2 dP``."""
        r = self.original.r_max
        return self.dW - 2 * r * self.dV - r * r * self.dP

    @property
    def expansion_error(self) -> float:
        return self.delta_lambda_actual - self.delta_lambda_predicted

    @property
    def diameter_bound(self) -> float:
        """``2 sqrt(2 r_max eps)``, an upper bound for the cap diameter."""
        return 2 * math.sqrt(2 * self.original.r_max * self.eps)


def crop(body: Polytope, eps: float, direction=None) -> CropResult:
    """Cut ``body`` at depth ``eps`` below its farthest point.

    ``direction`` overrides the cut normal (exploration only); by default
    the normal points to ``x_max``.
    """
    if not isinstance(body, (Polygon2, Polytope3)):
        raise TypeError("crop needs a Polygon2 or Polytope3")
    rep = report(body)
    rmax, xmax = rep.r_max, np.array(rep.x_max)
    if direction is None:
        u = xmax / rmax
        top = rmax
    else:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
        top = float(np.max(body.vertices @ u))
    if not eps > 0:
        raise CutMissesBody("eps must be positive")
    offset = top - eps
    if offset <= 0:
        raise CutThroughOrigin(f"eps={eps} removes the origin (top={top})")
    bottom = float(np.min(body.vertices @ u))
    if offset <= bottom:
        raise CutMissesBody("the cut removes the whole body")

    try:
        if isinstance(body, Polygon2):
            cropped = clip_polygon(body, u, offset)
            s = body.vertices @ u - offset
            # cut segment: intersection of the line with the polygon boundary
            pts = []
            v = body.vertices
            for i in range(len(v)):
                j = (i + 1) % len(v)
                if s[i] * s[j] < 0:
                    t = s[i] / (s[i] - s[j])
                    pts.append(v[i] + t * (v[j] - v[i]))
                elif s[i] == 0:
                    pts.append(v[i])
            cap = np.array(pts)
            cap_area = float(np.linalg.norm(cap[0] - cap[-1])) if len(cap) >= 2 else 0.0
        else:
            cropped, cap = clip_polytope(body, u, offset)
            cap_area = _cap_measure(cap, u)
    except (InvalidBody, NotConvex) as exc:
        raise CutMissesBody(f"cut at eps={eps} leaves a degenerate body: {exc}") from exc

    n = body.n
    V, P, W = rep.V, rep.P, rep.W
    dV = volume(cropped) - V
    dP = perimeter(cropped) - P
    dW = boundary_momentum(cropped) - W
    predicted = (2 * rep.excess * dV + (rmax**2 - W / P) * dP) / (V ** (2.0 / n) * P)
    return CropResult(
        original=rep,
        cropped_body=cropped,
        eps=eps,
        direction=u,
        dV=dV,
        dP=dP,
        dW=dW,
        delta_lambda_actual=lam(cropped) - rep.lam,
        delta_lambda_predicted=predicted,
        cap_area=cap_area,
        cap_diameter=_diameter(cap) if len(cap) >= 2 else 0.0,
    )


CROP_CSV_COLUMNS = ("eps", "dV", "dP", "dW", "dlam_actual", "dlam_predicted", "ratio", "residual")


@dataclass
class LemmaReverseReport:
    eps: np.ndarray
    ratios: np.ndarray  # |dV| / |dP|
    residuals: np.ndarray  # (dW - 2 r dV - r^2 dP) / (|dV| + |dP|)
    expansion: np.ndarray  # |dlam_actual - dlam_predicted| / (|dV| + |dP|)
    results: List[CropResult] = field(repr=False, default_factory=list)
    noise: float = 0.10

    @property
    def ratio_bounded(self) -> bool:
        return bool(self.ratios[-1] <= 2 * np.max(self.ratios[:3]))

    @staticmethod
    def _vanishing(values: np.ndarray, noise: float) -> bool:
        a = np.abs(values)
        steps_ok = np.all(a[1:] <= (1 + noise) * a[:-1] + 1e-15)
        return bool(steps_ok and a[-1] < a[0])

    @property
    def residual_vanishing(self) -> bool:
        return self._vanishing(self.residuals, self.noise)

    @property
    def expansion_vanishing(self) -> bool:
        return self._vanishing(self.expansion, self.noise)

    @property
    def deltas_negative(self) -> bool:
        return all(r.dV < 0 and r.dP < 0 for r in self.results)

    @property
    def diameter_bound_holds(self) -> bool:
        return all(r.cap_diameter <= r.diameter_bound * (1 + 1e-12) for r in self.results)

    @property
    def passed(self) -> bool:
        return self.ratio_bounded and self.residual_vanishing and self.expansion_vanishing

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CROP_CSV_COLUMNS)
        for r, ratio, res in zip(self.results, self.ratios, self.residuals):
            w.writerow([repr(float(x)) for x in (r.eps, r.dV, r.dP, r.dW, r.delta_lambda_actual,
                                                 r.delta_lambda_predicted, ratio, res)])
        return buf.getvalue()


def lemma_reverse_check(body: Polytope, eps_list: Sequence[float]) -> LemmaReverseReport:
    eps = np.asarray(eps_list, dtype=float)
    if len(eps) < 3 or np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps_list must hold at least 3 decreasing positive values")
    results = [crop(body, e) for e in eps]
    size = np.array([abs(r.dV) + abs(r.dP) for r in results])
    return LemmaReverseReport(
        eps=eps,
        ratios=np.array([abs(r.dV) / abs(r.dP) for r in results]),
        residuals=np.array([r.lemma_residual for r in results]) / size,
        expansion=np.array([abs(r.expansion_error) for r in results]) / size,
        results=results,
    )


@dataclass
class DescentVerdict:
    excess: float
    curvature_gap: float  # r_max^2 - W/P
    regime: str  # "negative-excess", "positive-excess", "zero-excess"
    witness: Optional[CropResult]
    tried: List[float]

    @property
    def found(self) -> bool:
        return self.witness is not None


def step3_descent(
    body: Polytope,
    n_eps: int = 40,
    rel_tol: float = 1e-9,
    excess_tol: float = 1e-12,
    raise_on_failure: bool = False,
) -> DescentVerdict:
    """Look for a cut that lowers the ratio by more than ``rel_tol`` (relative).

    Depths are swept geometrically, ``eps = r_max 2^-j``. With negative
    excess a cut is not the right deformation; the verdict says so and no
    sweep is run.
    """
    rep = report(body)
    gap = rep.r_max**2 - rep.W / rep.P
    if rep.excess < -excess_tol * rep.r_max:
        return DescentVerdict(rep.excess, gap, "negative-excess", None, [])
    regime = "zero-excess" if abs(rep.excess) <= excess_tol * rep.r_max else "positive-excess"
    tried = []
    for j in range(1, n_eps + 1):
        e = rep.r_max * 0.5**j
        tried.append(e)
        try:
            res = crop(body, e)
        except (CutMissesBody, CutThroughOrigin):
            continue
        if res.delta_lambda_actual < -rel_tol * rep.lam:
            return DescentVerdict(rep.excess, gap, regime, res, tried)
    if raise_on_failure:
        raise NoDescentFound(f"no cut lowered lambda by more than {rel_tol:g} (relative)")
    return DescentVerdict(rep.excess, gap, regime, None, tried)
