"""Shape derivative of the ratio and the planar inverse mean curvature flow.

For a support function ``h`` the outward normal velocity of the boundary
point with normal angle ``theta`` is ``dh/dt``. Moving every point with
speed ``1/kappa = h + h''`` therefore reads ``h_t = h + h''``, a linear
equation that is diagonal in the Fourier basis: mode ``k`` is multiplied
by ``exp((1 - k^2) t)``. Perimeter grows like ``e^t``, translation modes
are frozen, and all higher modes decay.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np

from .bodies import GRID_SIZE, Polygon2, SupportBody2
from .errors import CurvatureUnavailable, InsufficientSamples
from .functionals import boundary_momentum, farthest_point, perimeter, volume

MIN_CURVATURE_VERTICES = 64
MONOTONE_TOL = 1e-9

Field = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


# --------------------------------------------------------------------------
# boundary sampling shared by the shape derivative and the Ros check
# --------------------------------------------------------------------------


@dataclass
class BoundaryQuadrature:
    """Quadrature nodes on the boundary.

    ``weights`` integrate against arc length, ``curvature`` is ``kappa``
    (the mean curvature for ``n = 2``), ``support`` is ``<x, nu>``.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    curvature: np.ndarray
    support: np.ndarray
    radius_sq: np.ndarray
    theta: Optional[np.ndarray] = None
    approximate: bool = False


def boundary_quadrature(body: Union[SupportBody2, Polygon2]) -> BoundaryQuadrature:
    if isinstance(body, SupportBody2):
        theta, h, dh, d2h = body.grid_values()
        rad = h + d2h
        c, s = np.cos(theta), np.sin(theta)
        return BoundaryQuadrature(
            points=np.stack([h * c - dh * s, h * s + dh * c], axis=1),
            normals=np.stack([c, s], axis=1),
            weights=rad * (2 * np.pi / len(theta)),
            curvature=1.0 / rad,
            support=h,
            radius_sq=h * h + dh * dh,
            theta=theta,
        )
    if isinstance(body, Polygon2):
        if len(body) < MIN_CURVATURE_VERTICES:
            raise CurvatureUnavailable(
                f"discrete curvature needs at least {MIN_CURVATURE_VERTICES} vertices, got {len(body)}"
            )
        x = body.vertices
        prev, nxt = np.roll(x, 1, axis=0), np.roll(x, -1, axis=0)
        a = np.linalg.norm(x - prev, axis=1)
        b = np.linalg.norm(nxt - x, axis=1)
        c = np.linalg.norm(nxt - prev, axis=1)
        area2 = (x - prev)[:, 0] * (nxt - x)[:, 1] - (x - prev)[:, 1] * (nxt - x)[:, 0]
        curvature = 2 * area2 / (a * b * c)  # inverse circumradius of (prev, x, next)
        chord = nxt - prev
        normals = np.stack([chord[:, 1], -chord[:, 0]], axis=1) / c[:, None]
        return BoundaryQuadrature(
            points=x,
            normals=normals,
            weights=0.5 * (a + b),
            curvature=curvature,
            support=np.einsum("ij,ij->i", x, normals),
            radius_sq=np.sum(x * x, axis=1),
            approximate=True,
        )
    raise CurvatureUnavailable(f"no curvature for {type(body).__name__}")


def _field_values(phi: Field, quad: BoundaryQuadrature) -> np.ndarray:
    if callable(phi):
        arg = quad.theta if quad.theta is not None else np.arctan2(quad.normals[:, 1], quad.normals[:, 0])
        return np.asarray(phi(arg), dtype=float) * np.ones(len(quad.weights))
    vals = np.asarray(phi, dtype=float)
    if vals.ndim == 0:
        return np.full(len(quad.weights), float(vals))
    if len(vals) != len(quad.weights):
        raise ValueError(f"field has {len(vals)} values, boundary has {len(quad.weights)} nodes")
    return vals


# --------------------------------------------------------------------------
# shape derivative
# --------------------------------------------------------------------------


@dataclass
class ShapeDerivative:
    curvature_term: float  # int (n-1) H (|x|^2 - W/P) phi
    normal_term: float  # 2 int (<x,nu> - W/(nV)) phi
    factor: float  # 1 / (P V^(2/n))
    approximate: bool

    @property
    def value(self) -> float:
        """Derivative of ``W / (P V^(2/n))`` along the normal field."""
        return self.factor * (self.curvature_term + self.normal_term)


def shape_derivative_terms(body: Union[SupportBody2, Polygon2], phi: Field) -> ShapeDerivative:
    n = 2
    quad = boundary_quadrature(body)
    f = _field_values(phi, quad)
    V, P, W = volume(body), perimeter(body), boundary_momentum(body)
    r2 = quad.radius_sq
    curv = float(np.sum(quad.weights * (n - 1) * quad.curvature * (r2 - W / P) * f))
    normal = float(2 * np.sum(quad.weights * (quad.support - W / (n * V)) * f))
    return ShapeDerivative(curv, normal, 1.0 / (P * V ** (2.0 / n)), quad.approximate)


def shape_derivative(body: Union[SupportBody2, Polygon2], phi: Field) -> float:
    """First variation of the ratio when the boundary moves with normal speed ``phi``.

    ``phi`` is a callable of the normal angle, an array of nodal values
    (support grid or polygon vertices) or a constant.
    """
    return shape_derivative_terms(body, phi).value


def inverse_curvature(body: SupportBody2) -> np.ndarray:
    """``1/H = h + h''`` on the support grid."""
    _, h, _, d2h = body.grid_values()
    return h + d2h


# --------------------------------------------------------------------------
# IMCF
# --------------------------------------------------------------------------


def evolve_support(body: SupportBody2, t: float) -> SupportBody2:
    """Exact IMCF solution at time ``t``."""
    k = np.arange(1, body.modes + 1)
    return SupportBody2(body.a0 * np.exp(t), body.coeffs * np.exp((1 - k**2) * t)[:, None])


class FlowSample(NamedTuple):
    t: float
    V: float
    P: float
    W: float
    lam: float
    excess: float
    r_max: float


def sample(body: SupportBody2, t: float) -> FlowSample:
    V, P, W = volume(body), perimeter(body), boundary_momentum(body)
    rmax, _ = farthest_point(body)
    return FlowSample(t, V, P, W, W / (P * V), rmax - W / (2 * V), rmax)


@dataclass
class FlowState:
    body: SupportBody2
    t: float
    initial: SupportBody2
    history: List[FlowSample] = field(default_factory=list)

    def body_at(self, t: float) -> SupportBody2:
        return evolve_support(self.initial, t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "V", "P", "W", "lambda", "excess", "rmax"])
        for s in self.history:
            w.writerow([repr(float(v)) for v in (s.t, s.V, s.P, s.W, s.lam, s.excess, s.r_max)])
        return buf.getvalue()


def imcf_evolve(body: SupportBody2, T: float = 2.0, dt_record: float = 0.01) -> FlowState:
    steps = int(round(T / dt_record))
    times = np.linspace(0.0, T, steps + 1) if steps > 0 else np.array([0.0, T])
    history = [sample(evolve_support(body, t), float(t)) for t in times]
    return FlowState(body=evolve_support(body, T), t=T, initial=body, history=history)


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------


def volume_rate(body: SupportBody2) -> float:
    """``int 1/H dsigma = int (h + h'')^2 dtheta``."""
    rad = inverse_curvature(body)
    return 2 * np.pi * float(np.mean(rad * rad))


@dataclass
class FlowDiagnostics:
    t: np.ndarray
    dVdt_fd: np.ndarray
    dVdt_formula: np.ndarray
    dVdt_rel_error: float
    perimeter_rel_error: float
    rmax_slack: np.ndarray  # r_max(0) e^t - r_max(t)
    mvneg: np.ndarray
    pointneg_max: np.ndarray  # max |<x,nu>| - W/(nV) - E, must be <= 0
    mvzero_residual: float
    lam_increments: np.ndarray
    excess_sign_change: Optional[float]

    @property
    def rmax_bound_holds(self) -> bool:
        return bool(np.all(self.rmax_slack >= -1e-12 * (1 + np.abs(self.rmax_slack))))

    @property
    def mvneg_holds(self) -> bool:
        return bool(np.all(self.mvneg <= 1e-12))

    @property
    def pointneg_holds(self) -> bool:
        return bool(np.all(self.pointneg_max <= 1e-10))

    @property
    def lambda_monotone(self) -> bool:
        return bool(np.all(self.lam_increments <= MONOTONE_TOL))

    @property
    def lambda_monotone_while_negative_excess(self) -> bool:
        if self.excess_sign_change is None:
            return self.lambda_monotone
        keep = self.t[1:] <= self.excess_sign_change
        return bool(np.all(self.lam_increments[keep] <= MONOTONE_TOL))


def mvzero_quadrature_residual(body: SupportBody2) -> float:
    """Relative gap between ``int |x|^2 dsigma`` on the boundary and the ``J`` formula."""
    quad = boundary_quadrature(body)
    W = boundary_momentum(body)
    P = perimeter(body)
    r2 = quad.radius_sq
    return abs(float(np.sum(quad.weights * (r2 - W / P)))) / W


def flow_diagnostics(state: FlowState) -> FlowDiagnostics:
    hist = state.history
    if len(hist) < 3:
        raise InsufficientSamples("need at least 3 recorded samples")
    t = np.array([s.t for s in hist])
    V = np.array([s.V for s in hist])
    P = np.array([s.P for s in hist])
    W = np.array([s.W for s in hist])
    E = np.array([s.excess for s in hist])
    rmax = np.array([s.r_max for s in hist])
    lam = np.array([s.lam for s in hist])

    bodies = [state.body_at(ti) for ti in t]
    rate = np.array([volume_rate(b) for b in bodies])
    fd = np.gradient(V, t, edge_order=2)
    pointneg = []
    mvzero = 0.0
    for b, w, v, e in zip(bodies, W, V, E):
        _, h, _, _ = b.grid_values()
        pointneg.append(float(np.max(np.abs(h)) - w / (2 * v) - e))
        mvzero = max(mvzero, mvzero_quadrature_residual(b))

    neg = E < 0
    change = None
    if neg[0] and not np.all(neg):
        change = float(t[np.argmin(neg)])

    return FlowDiagnostics(
        t=t,
        dVdt_fd=fd,
        dVdt_formula=rate,
        dVdt_rel_error=float(np.max(np.abs(fd - rate) / rate)),
        perimeter_rel_error=float(np.max(np.abs(P / (P[0] * np.exp(t - t[0])) - 1))),
        rmax_slack=rmax[0] * np.exp(t - t[0]) - rmax,
        mvneg=2 * V - P * W / (2 * V),
        pointneg_max=np.array(pointneg),
        mvzero_residual=mvzero,
        lam_increments=np.diff(lam),
        excess_sign_change=change,
    )


@dataclass
class RosCheck:
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def ros_check(body: Union[SupportBody2, Polygon2]) -> RosCheck:
    """``int 1/H dsigma`` against its value on the disk of equal area (``2 V``)."""
    quad = boundary_quadrature(body)
    lhs = float(np.sum(quad.weights / quad.curvature))
    return RosCheck(lhs, 2 * volume(body))


__all__ = [
    "BoundaryQuadrature",
    "FlowDiagnostics",
    "FlowSample",
    "FlowState",
    "GRID_SIZE",
    "RosCheck",
    "ShapeDerivative",
    "boundary_quadrature",
    "evolve_support",
    "flow_diagnostics",
    "imcf_evolve",
    "inverse_curvature",
    "ros_check",
    "shape_derivative",
    "shape_derivative_terms",
    "volume_rate",
]
