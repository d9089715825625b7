"""Volume, perimeter, boundary momentum and the scale-invariant ratio.

For polytopes every quantity is exact: ``|x|^2`` is quadratic, so the
edge rule ``|e| (|a|^2 + a.b + |b|^2) / 3`` and the three-edge-midpoint
rule on triangles integrate it without error. Support-function bodies use
the trapezoid rule on the uniform periodic grid, which is exact for the
trigonometric polynomials involved.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn

from .bodies import Body, Polygon2, Polytope3, SupportBody2, normalize
from .errors import DimensionUnsupported

VERDICT_TOL = 1e-9


def unit_ball_volume(n: int) -> float:
    return float(math.pi ** (n / 2) / gamma_fn(n / 2 + 1))


def lambda_ball(n: int) -> float:
    """Value of the ratio on any centered ball: ``omega_n^(-2/n)``."""
    return unit_ball_volume(n) ** (-2.0 / n)


def _mean2pi(values) -> float:
    return 2 * np.pi * float(np.mean(values))


def volume(body: Body) -> float:
    if isinstance(body, Polygon2):
        return body.signed_area()
    if isinstance(body, Polytope3):
        a, b, c = body.triangles()
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0
    if isinstance(body, SupportBody2):
        _, h, _, d2h = body.grid_values()
        return 0.5 * _mean2pi(h * h + h * d2h)
    raise TypeError(f"unsupported body {type(body).__name__}")


def perimeter(body: Body) -> float:
    if isinstance(body, Polygon2):
        a, b = body.edges()
        return float(np.sum(np.linalg.norm(b - a, axis=1)))
    if isinstance(body, Polytope3):
        a, b, c = body.triangles()
        return 0.5 * float(np.sum(np.linalg.norm(np.cross(b - a, c - a), axis=1)))
    if isinstance(body, SupportBody2):
        _, h, _, _ = body.grid_values()
        return _mean2pi(h)
    raise TypeError(f"unsupported body {type(body).__name__}")


def boundary_momentum(body: Body) -> float:
    """``W = int_{boundary} |x|^2 dsigma``."""
    if isinstance(body, Polygon2):
        a, b = body.edges()
        lengths = np.linalg.norm(b - a, axis=1)
        quad = (np.sum(a * a, 1) + np.sum(a * b, 1) + np.sum(b * b, 1)) / 3
        return float(lengths @ quad)
    if isinstance(body, Polytope3):
        a, b, c = body.triangles()
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        m = [(a + b) / 2, (b + c) / 2, (c + a) / 2]
        quad = sum(np.sum(p * p, 1) for p in m) / 3
        return float(areas @ quad)
    if isinstance(body, SupportBody2):
        _, h, _, d2h = body.grid_values()
        return _mean2pi(h**3 + 0.5 * h * h * d2h)
    raise TypeError(f"unsupported body {type(body).__name__}")


def lam(body: Body) -> float:
    """``W / (P V^(2/n))``."""
    n = body.n
    return boundary_momentum(body) / (perimeter(body) * volume(body) ** (2.0 / n))


def lambda_gamma(body: Body, gamma: float) -> float:
    """``W / (P^(1+gamma) V^(1-gamma/2))``, planar bodies only."""
    if body.n != 2:
        raise DimensionUnsupported("lambda_gamma is defined for planar bodies")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return boundary_momentum(body) / (perimeter(body) ** (1 + gamma) * volume(body) ** (1 - gamma / 2))


def lambda_gamma_disk(gamma: float) -> float:
    return 1.0 / (2**gamma * math.pi ** (1 + gamma / 2))


def farthest_point(body: Body):
    """``(r_max, x_max)``; ties between polytope vertices go to the lowest index."""
    if isinstance(body, (Polygon2, Polytope3)):
        r = np.linalg.norm(body.vertices, axis=1)
        rmax = r.max()
        idx = int(np.flatnonzero(r >= rmax * (1 - 1e-12))[0])
        return float(r[idx]), np.array(body.vertices[idx])
    if isinstance(body, SupportBody2):
        theta, h, dh, _ = body.grid_values()
        r2 = h * h + dh * dh
        i = int(np.argmax(r2))
        step = theta[1] - theta[0]

        def neg_r2(t):
            return -(body.evaluate(t) ** 2 + body.evaluate(t, 1) ** 2)

        res = minimize_scalar(
            neg_r2, bounds=(theta[i] - step, theta[i] + step), method="bounded", options={"xatol": 1e-13}
        )
        t = res.x if -res.fun >= r2[i] else theta[i]
        x = body.boundary_points(t)
        return float(np.linalg.norm(x)), np.asarray(x)
    raise TypeError(f"unsupported body {type(body).__name__}")


def excess(body: Body) -> float:
    """``r_max - W / (n V)``."""
    rmax, _ = farthest_point(body)
    return rmax - boundary_momentum(body) / (body.n * volume(body))


def r_max_and_excess(body: Body):
    rmax, xmax = farthest_point(body)
    return rmax, xmax, rmax - boundary_momentum(body) / (body.n * volume(body))


def brock_ratio(body: Body) -> float:
    n = body.n
    return boundary_momentum(body) / volume(body) ** ((n + 1) / n)


def brock_ball(n: int) -> float:
    """``W(B)/V(B)^((n+1)/n)`` for the unit ball: ``n omega_n^(-1/n)``."""
    return n * unit_ball_volume(n) ** (-1.0 / n)


def isoperimetric_deficit(body: Body) -> float:
    """``P^n / (n^n omega_n V^(n-1)) - 1``; zero only on balls."""
    n = body.n
    return perimeter(body) ** n / (n**n * unit_ball_volume(n) * volume(body) ** (n - 1)) - 1


def mvzero_residual(body: Body) -> float:
    """``int (|x|^2 - W/P) dsigma``: vanishes identically."""
    return boundary_momentum(body) - boundary_momentum(body) / perimeter(body) * perimeter(body)


def mvneg_value(body: Body) -> float:
    """``int (<x,nu> - W/(nV)) dsigma = nV - P W / (nV)``; nonpositive."""
    n, V = body.n, volume(body)
    return n * V - perimeter(body) * boundary_momentum(body) / (n * V)


def support_numbers(body: Polygon2) -> np.ndarray:
    """``<x, nu>`` on each polygon edge."""
    a, b = body.edges()
    e = b - a
    nu = np.stack([e[:, 1], -e[:, 0]], axis=1) / np.linalg.norm(e, axis=1)[:, None]
    return np.einsum("ij,ij->i", a, nu)


@dataclass
class FunctionalReport:
    kind: str
    n: int
    V: float
    P: float
    W: float
    r_max: float
    x_max: list
    lam: float
    excess: float
    margin: float
    brock: float
    lam_normalized: float
    margin_normalized: float
    lambda_gamma: list = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def main_inequality_holds(self) -> bool:
        return self.margin_normalized >= -VERDICT_TOL and self.margin >= -VERDICT_TOL

    @property
    def brock_holds(self) -> bool:
        return self.brock >= brock_ball(self.n) * (1 - VERDICT_TOL)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    CSV_COLUMNS = ("kind", "n", "V", "P", "W", "r_max", "lambda", "excess", "margin", "seed")

    def csv_row(self) -> list:
        return [self.kind, self.n, repr(self.V), repr(self.P), repr(self.W), repr(self.r_max),
                repr(self.lam), repr(self.excess), repr(self.margin),
                "" if self.seed is None else self.seed]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.CSV_COLUMNS)
        w.writerow(self.csv_row())
        return buf.getvalue()


_KINDS = {Polygon2: "polygon2", Polytope3: "polytope3", SupportBody2: "support2"}


def report(body: Body, gammas: Sequence[float] = (), seed: Optional[int] = None) -> FunctionalReport:
    """All functionals of ``body``, at its given position and after centering.

    ``margin`` is measured as given; ``margin_normalized`` after moving
    the boundary barycenter to the origin.
    """
    n = body.n
    V, P, W = volume(body), perimeter(body), boundary_momentum(body)
    rmax, xmax = farthest_point(body)
    lam_here = W / (P * V ** (2.0 / n))
    centered = normalize(body)
    lam_c = lam(centered)
    return FunctionalReport(
        kind=_KINDS[type(body)],
        n=n,
        V=V,
        P=P,
        W=W,
        r_max=rmax,
        x_max=[float(v) for v in xmax],
        lam=lam_here,
        excess=rmax - W / (n * V),
        margin=lam_here - lambda_ball(n),
        brock=W / V ** ((n + 1) / n),
        lam_normalized=lam_c,
        margin_normalized=lam_c - lambda_ball(n),
        lambda_gamma=[[g, lambda_gamma(body, g)] for g in gammas] if n == 2 else [],
        seed=seed,
    )
