"""Support-function machinery for planar convex bodies.

Perimeter, area and boundary momentum of a body with support function
``h`` are

    L = int h,   A = 1/2 int (h^2 + h h''),   J = int (h^3 + h^2 h'' / 2),

all over ``[0, 2 pi]``. Writing ``h = L/(2 pi) + p`` turns ``pi J - L A``
into a weighted integral of ``p^2`` whose weight is bounded below by
``L / (2 pi)`` on convex bodies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .bodies import PolarCurve, Polygon2, SupportBody2
from .errors import QuadratureFailure
from .functionals import lambda_gamma, lambda_gamma_disk


@dataclass(frozen=True)
class LAJTriple:
    L: float
    A: float
    J: float

    @property
    def gap(self) -> float:
        """``pi J - L A``."""
        return math.pi * self.J - self.L * self.A


def boundary_point(body: SupportBody2, theta):
    """Point of the boundary with outer normal ``(cos theta, sin theta)``."""
    return body.boundary_points(theta)


def laj_from_support(body: SupportBody2) -> LAJTriple:
    _, h, _, d2h = body.grid_values()
    return LAJTriple(
        L=2 * np.pi * float(np.mean(h)),
        A=np.pi * float(np.mean(h * h + h * d2h)),
        J=2 * np.pi * float(np.mean(h**3 + 0.5 * h * h * d2h)),
    )


@dataclass(frozen=True)
class WeinstockGap:
    gap: float  # pi J - L A
    p_sq: float  # int p^2
    lower_bound: float  # (L/2) int p^2
    expanded: float  # pi int (L/pi p^2 + p^3 + p^2 p''/2)
    weighted: float  # pi int p^2 (L/2pi + (L/2pi + p)/2 + (L/2pi + p + p'')/2)
    residual: float  # max relative mismatch among the three expressions
    scale: float  # pi J, the size of the terms that cancel in the gap

    @property
    def chain_holds(self) -> bool:
        slack = 1e-12 * self.scale
        return self.lower_bound >= 0 and self.gap >= self.lower_bound - slack


def weinstock_gap(body: SupportBody2) -> WeinstockGap:
    _, h, _, d2h = body.grid_values()
    laj = laj_from_support(body)
    c = laj.L / (2 * np.pi)
    p = h - c
    d2p = d2h  # the constant has no second derivative
    mean = lambda v: 2 * np.pi * float(np.mean(v))  # noqa: E731
    p_sq = mean(p * p)
    expanded = np.pi * mean(laj.L / np.pi * p * p + p**3 + 0.5 * p * p * d2p)
    weighted = np.pi * mean(p * p * (c + 0.5 * (c + p) + 0.5 * (c + p + d2p)))
    residual = max(abs(laj.gap - expanded), abs(laj.gap - weighted)) / (np.pi * laj.J)
    return WeinstockGap(
        gap=laj.gap,
        p_sq=p_sq,
        lower_bound=0.5 * laj.L * p_sq,
        expanded=expanded,
        weighted=weighted,
        residual=residual,
        scale=np.pi * laj.J,
    )


def _quad(fun, a, b, tol, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info, *rest = integrate.quad(fun, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    if rest:
        raise QuadratureFailure(f"adaptive quadrature did not converge on [{a}, {b}]: {rest[0]}")
    return val


def _polar_integrals(curve: PolarCurve, tol: float, limit: int) -> dict:
    knots = sorted({0.0, 2 * np.pi, *[float(b) % (2 * np.pi) for b in curve.breakpoints]})

    def speed(phi):
        r, dr = curve.rho(phi), curve.derivative(phi)
        return math.sqrt(r * r + dr * dr)

    def total(fun):
        return sum(_quad(fun, a, b, tol, limit) for a, b in zip(knots[:-1], knots[1:]))

    return {
        "L": total(speed),
        "A": total(lambda p: 0.5 * curve.rho(p) ** 2),
        "J": total(lambda p: curve.rho(p) ** 2 * speed(p)),
        "mx": total(lambda p: curve.rho(p) * math.cos(p) * speed(p)),
        "my": total(lambda p: curve.rho(p) * math.sin(p) * speed(p)),
    }


def polar_barycenter(curve: PolarCurve, tol: float = 1e-12, limit: int = 200) -> np.ndarray:
    q = _polar_integrals(curve, tol, limit)
    return np.array([q["mx"], q["my"]]) / q["L"]


def polar_laj(curve: PolarCurve, center: str = "barycenter", tol: float = 1e-12, limit: int = 200) -> LAJTriple:
    """``L``, ``A``, ``J`` of a polar curve by adaptive quadrature.

    ``J`` is taken about the boundary barycenter by default; pass
    ``center="origin"`` for the moment about the polar origin.
    """
    if center not in ("barycenter", "origin"):
        raise ValueError("center must be 'barycenter' or 'origin'")
    q = _polar_integrals(curve, tol, limit)
    J = q["J"]
    if center == "barycenter":
        J -= (q["mx"] ** 2 + q["my"] ** 2) / q["L"]  # W(x - c) = W - P |c|^2, c = m / P
    return LAJTriple(q["L"], q["A"], J)


def regular_polygon(k: int):
    """Regular ``k``-gon with inradius 1 and its closed-form ``(L, A, J)``."""
    if k < 3:
        raise ValueError("k must be at least 3")
    alpha = math.pi / k
    R = 1.0 / math.cos(alpha)
    t = alpha + 2 * alpha * np.arange(k)
    poly = Polygon2(R * np.stack([np.cos(t), np.sin(t)], axis=1))
    tan = math.tan(alpha)
    closed = LAJTriple(
        L=2 * math.pi * tan / alpha,
        A=math.pi * tan / alpha,
        J=(2 * math.pi / alpha) * (tan + tan**3 / 3),
    )
    return poly, closed


@dataclass(frozen=True)
class GammaAsymptotics:
    gamma: float
    ks: tuple
    alpha_sq: np.ndarray
    ratio_minus_one: np.ndarray
    slope: float

    @property
    def predicted_slope(self) -> float:
        return -self.gamma / 6

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.predicted_slope) / abs(self.predicted_slope)


def lambda_gamma_asymptotics(gamma: float, ks: Sequence[int] = (64, 128, 256, 512)) -> GammaAsymptotics:
    """Least-squares slope of ``lambda_gamma(P_k)/lambda_gamma(B) - 1`` against ``alpha^2``."""
    a2 = np.array([(math.pi / k) ** 2 for k in ks])
    y = np.array([lambda_gamma(regular_polygon(k)[0], gamma) / lambda_gamma_disk(gamma) - 1 for k in ks])
    slope = float(a2 @ y / (a2 @ a2))
    return GammaAsymptotics(gamma, tuple(ks), a2, y, slope)
