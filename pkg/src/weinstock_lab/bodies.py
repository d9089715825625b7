"""Convex bodies in the plane and in space.

Three exact representations are provided:

* :class:`Polygon2`   convex polygon, counterclockwise vertex list;
* :class:`Polytope3`  triangulated convex polytope with outward faces;
* :class:`SupportBody2` planar body given by a truncated Fourier series
  of its support function ``h(theta)``.

:class:`PolarCurve` holds a star-shaped (possibly nonconvex) curve
``rho(phi)``; it only feeds the polar quadratures in :mod:`support2d`.

All bodies are immutable. Their array fields are flagged read-only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    DegenerateInput,
    FewerThanThreeHullVertices,
    InvalidBody,
    NotConvex,
    NotPositive,
)

GRID_SIZE = 4096
DEFAULT_MODES = 64
POLYGON_TOL = 1e-12
POLYTOPE_TOL = 1e-9


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _bbox_diag(points: np.ndarray) -> float:
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


# --------------------------------------------------------------------------
# Polygon2
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polygon2:
    """Strictly convex polygon with counterclockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vertices)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidBody("polygon vertices must have shape (N, 2)")
        if len(v) < 3:
            raise InvalidBody("a polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidBody("non-finite vertex coordinates")
        object.__setattr__(self, "vertices", v)

        scale = _bbox_diag(v)
        edges = np.roll(v, -1, axis=0) - v
        if np.min(np.linalg.norm(edges, axis=1)) <= POLYGON_TOL * scale:
            raise InvalidBody("two consecutive vertices coincide")
        if self.signed_area() <= 0:
            raise InvalidBody("vertices must be counterclockwise with positive area")
        turns = _cross2(edges, np.roll(edges, -1, axis=0))
        if np.min(turns) <= POLYGON_TOL * scale**2:
            raise NotConvex("polygon is not strictly convex (reflex or collinear vertex)")

    @property
    def n(self) -> int:
        return 2

    def __len__(self):
        return len(self.vertices)

    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def edges(self):
        """Return (start, end) arrays of the edges."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def scale(self) -> float:
        return _bbox_diag(self.vertices)

    def scaled(self, s: float) -> "Polygon2":
        return Polygon2(self.vertices * s)

    def __repr__(self):
        return f"Polygon2(<{len(self.vertices)} vertices>)"


def convex_hull_2d(points) -> np.ndarray:
    """Monotone-chain hull; counterclockwise, collinear and near-duplicate points dropped."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidBody("points must have shape (N, 2)")
    pts = np.unique(pts, axis=0)  # lexicographic sort
    if len(pts) < 3:
        raise FewerThanThreeHullVertices(f"only {len(pts)} distinct points")
    scale = _bbox_diag(pts)

    def chain(seq):
        # exact sign test here; a tolerance would let near-duplicates pop true corners
        out: list = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    hull = chain(pts)[:-1] + chain(pts[::-1])[:-1]

    # drop vertices that would fail the strict-convexity check of Polygon2
    changed = True
    while changed and len(hull) >= 3:
        changed = False
        for i in range(len(hull)):
            a, b, c = hull[i - 1], hull[i], hull[(i + 1) % len(hull)]
            u, v = b - a, c - b
            if min(np.hypot(*u), np.hypot(*v)) <= 2 * POLYGON_TOL * scale or \
                    u[0] * v[1] - u[1] * v[0] <= 2 * POLYGON_TOL * scale**2:
                del hull[i]
                changed = True
                break
    if len(hull) < 3:
        raise FewerThanThreeHullVertices("points are collinear")
    return np.array(hull)


def polygon_from_vertices(points) -> Polygon2:
    """Convex hull of ``points`` as a :class:`Polygon2`."""
    return Polygon2(convex_hull_2d(points))


# --------------------------------------------------------------------------
# Polytope3
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polytope3:
    """Closed, outward-oriented triangulated convex polytope."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vertices)
        f = _frozen(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidBody("polytope vertices must have shape (N, 3)")
        if f.ndim != 2 or f.shape[1] != 3 or len(f) < 4:
            raise InvalidBody("faces must be at least 4 index triples")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidBody("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        self._check_closed()
        self._check_convex_outward()

    def _check_closed(self):
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        if len(np.unique(directed, axis=0)) != len(directed):
            raise InvalidBody("a directed edge is used twice (inconsistent orientation)")
        undirected = np.sort(directed, axis=1)
        _, counts = np.unique(undirected, axis=0, return_counts=True)
        if np.any(counts != 2):
            raise InvalidBody("surface is not closed: some edge is not shared by exactly 2 faces")

    def _check_convex_outward(self):
        v = self.vertices
        scale = _bbox_diag(v)
        a, b, c = (v[self.faces[:, i]] for i in range(3))
        normals = np.cross(b - a, c - a)
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-14 * scale**2  # zero-area slivers carry no plane
        unit = normals[ok] / norms[ok, None]
        offsets = np.einsum("ij,ij->i", unit, a[ok])
        centroid = v.mean(axis=0)
        face_centroids = (a[ok] + b[ok] + c[ok]) / 3
        if np.any(np.einsum("ij,ij->i", unit, face_centroids - centroid) <= 0):
            raise InvalidBody("face orientation is not outward")
        tol = POLYTOPE_TOL * scale
        for start in range(0, len(unit), 1024):
            blk = slice(start, start + 1024)
            excess = v @ unit[blk].T - offsets[blk]
            if excess.max() > tol:
                raise NotConvex("a vertex lies outside a face plane")

    @property
    def n(self) -> int:
        return 3

    def triangles(self):
        v = self.vertices
        return v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]

    def scale(self) -> float:
        return _bbox_diag(self.vertices)

    def scaled(self, s: float) -> "Polytope3":
        return Polytope3(self.vertices * s, self.faces)

    def __repr__(self):
        return f"Polytope3(<{len(self.vertices)} vertices, {len(self.faces)} faces>)"


def hull3(points) -> Polytope3:
    """Triangulated convex hull of a 3D point cloud (Qhull backend)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise DegenerateInput("need at least 4 points in 3D")
    scale = _bbox_diag(pts)
    centered = pts - pts.mean(axis=0)
    if scale == 0 or np.linalg.svd(centered, compute_uv=False)[-1] <= POLYTOPE_TOL * scale:
        raise DegenerateInput("points are coplanar within tolerance")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(str(exc)) from exc

    used = np.unique(hull.simplices)
    remap = np.full(len(pts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = pts[used]
    faces = remap[hull.simplices]

    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    normals = np.cross(b - a, c - a)
    flip = np.einsum("ij,ij->i", normals, hull.equations[:, :3]) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return Polytope3(verts, faces)


# --------------------------------------------------------------------------
# SupportBody2
# --------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _basis(n_grid: int, n_modes: int):
    theta = 2 * np.pi * np.arange(n_grid) / n_grid
    k = np.arange(1, n_modes + 1)
    arg = np.outer(theta, k)
    cos, sin = np.cos(arg), np.sin(arg)
    for a in (theta, cos, sin):
        a.setflags(write=False)
    return theta, cos, sin


def theta_grid(n_grid: int = GRID_SIZE) -> np.ndarray:
    return _basis(n_grid, 0)[0]


@dataclass(frozen=True, eq=False)
class SupportBody2:
    """Planar convex body with support function
    ``h(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta)``.

    ``coeffs[k-1] = (a_k, b_k)``. The origin must be interior (``h > 0``)
    and the radius of curvature ``h + h''`` positive on the validation grid.
    """

    a0: float
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "a0", float(self.a0))
        _, h, _, d2h = self.grid_values()
        if np.min(h + d2h) <= 0:
            raise NotConvex("h + h'' is not positive on the validation grid")
        if np.min(h) <= 0:
            raise NotPositive("origin is not interior: h <= 0 somewhere")

    @property
    def n(self) -> int:
        return 2

    @property
    def modes(self) -> int:
        return len(self.coeffs)

    def evaluate(self, theta, deriv: int = 0) -> np.ndarray:
        """``d^deriv h / d theta^deriv`` at arbitrary angles."""
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.modes + 1)
        arg = np.multiply.outer(theta, k)
        a, b = self.coeffs[:, 0], self.coeffs[:, 1]
        return self._combine(np.cos(arg), np.sin(arg), k, a, b, deriv)

    def _combine(self, cos, sin, k, a, b, deriv):
        const = self.a0 if deriv == 0 else 0.0
        # derivative of cos/sin pair cycles with period 4
        kd = k.astype(float) ** deriv
        ca, cb = {
            0: (a, b),
            1: (b, -a),
            2: (-a, -b),
            3: (-b, a),
        }[deriv % 4]
        return const + cos @ (kd * ca) + sin @ (kd * cb)

    def grid_values(self, n_grid: int = GRID_SIZE):
        """``theta, h, h', h''`` on the uniform periodic grid."""
        theta, cos, sin = _basis(n_grid, self.modes)
        k = np.arange(1, self.modes + 1)
        a, b = self.coeffs[:, 0], self.coeffs[:, 1]
        return (
            theta,
            self._combine(cos, sin, k, a, b, 0),
            self._combine(cos, sin, k, a, b, 1),
            self._combine(cos, sin, k, a, b, 2),
        )

    def boundary_points(self, theta) -> np.ndarray:
        """Boundary point with outer normal ``(cos theta, sin theta)``."""
        theta = np.asarray(theta, dtype=float)
        h, dh = self.evaluate(theta), self.evaluate(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([h * c - dh * s, h * s + dh * c], axis=-1)

    def to_polygon(self, n_samples: int = GRID_SIZE) -> Polygon2:
        theta = theta_grid(n_samples)
        return Polygon2(self.boundary_points(theta))

    def scaled(self, s: float) -> "SupportBody2":
        return SupportBody2(self.a0 * s, self.coeffs * s)

    def scale(self) -> float:
        return 2.0 * float(np.max(np.abs(self.grid_values()[1])))

    def __repr__(self):
        return f"SupportBody2(a0={self.a0:g}, <{self.modes} modes>)"


def fourier_coefficients(values, n_modes: Optional[int] = None):
    """Project periodic grid samples onto ``(a0, [(a_k, b_k)])``.

    Exact for trigonometric polynomials of degree below ``len(values) / 2``.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    freq = np.fft.rfft(values) / n
    if n_modes is None:
        n_modes = n // 2 - 1
    freq = freq[: n_modes + 1]
    coeffs = np.stack([2 * freq[1:].real, -2 * freq[1:].imag], axis=1)
    return float(freq[0].real), coeffs


def support_body(a0: float, coeffs=()) -> SupportBody2:
    """Validated :class:`SupportBody2`."""
    return SupportBody2(a0, np.asarray(coeffs, dtype=float).reshape(-1, 2))


def ellipse_support(a: float, b: float, n_modes: int = DEFAULT_MODES, center=(0.0, 0.0)) -> SupportBody2:
    """Truncated Fourier support function of the ellipse with semi-axes ``a``, ``b``."""
    theta = theta_grid(8 * max(n_modes, 64))
    h = np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)
    a0, coeffs = fourier_coefficients(h, n_modes)
    body = SupportBody2(a0, coeffs)
    if any(center):
        body = translate(body, center)
    return body


# --------------------------------------------------------------------------
# PolarCurve
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolarCurve:
    """Closed curve ``r = rho(phi)``, ``phi in [0, 2 pi]``.

    ``drho`` may be omitted; a five-point central difference is used then.
    ``breakpoints`` are angles where the curve is not smooth (quadrature
    splits there).
    """

    rho: Callable[[np.ndarray], np.ndarray]
    drho: Optional[Callable[[np.ndarray], np.ndarray]] = None
    convex_expected: bool = False
    breakpoints: tuple = ()
    name: str = "polar"

    def __post_init__(self):
        phi = np.linspace(0.0, 2 * np.pi, 257)
        r = np.asarray(self.rho(phi), dtype=float)
        if np.min(r) < 0:
            raise InvalidBody("rho must be nonnegative")
        if not math.isclose(float(r[0]), float(r[-1]), rel_tol=1e-12, abs_tol=1e-12):
            raise InvalidBody("rho(0) != rho(2 pi)")

    def derivative(self, phi):
        if self.drho is not None:
            return self.drho(phi)
        step = 1e-4
        f = self.rho
        return (f(phi - 2 * step) - 8 * f(phi - step) + 8 * f(phi + step) - f(phi + 2 * step)) / (12 * step)


def cardioid() -> PolarCurve:
    return PolarCurve(
        rho=lambda p: 1.0 - np.cos(p),
        drho=np.sin,
        convex_expected=False,
        breakpoints=(0.0, 2 * np.pi),
        name="cardioid",
    )


def ellipse_polar(a: float, b: float) -> PolarCurve:
    """Centered ellipse with semi-axes ``a`` (x) and ``b`` (y) in polar form."""

    def rho(p):
        return a * b / np.sqrt((b * np.cos(p)) ** 2 + (a * np.sin(p)) ** 2)

    def drho(p):
        q = (b * np.cos(p)) ** 2 + (a * np.sin(p)) ** 2
        dq = 2 * (a * a - b * b) * np.sin(p) * np.cos(p)
        return -0.5 * a * b * dq / q**1.5

    return PolarCurve(rho=rho, drho=drho, convex_expected=True, name=f"ellipse({a},{b})")


def circle_polar(radius: float = 1.0) -> PolarCurve:
    return PolarCurve(
        rho=lambda p: np.full_like(np.asarray(p, dtype=float), radius),
        drho=lambda p: np.zeros_like(np.asarray(p, dtype=float)),
        convex_expected=True,
        name="circle",
    )


Body = Union[Polygon2, Polytope3, SupportBody2]


# --------------------------------------------------------------------------
# rigid motions and barycenter
# --------------------------------------------------------------------------


def translate(body: Body, vector) -> Body:
    t = np.asarray(vector, dtype=float)
    if isinstance(body, Polygon2):
        return Polygon2(body.vertices + t)
    if isinstance(body, Polytope3):
        return Polytope3(body.vertices + t, body.faces)
    if isinstance(body, SupportBody2):
        coeffs = np.array(body.coeffs)
        if len(coeffs) == 0:
            coeffs = np.zeros((1, 2))
        coeffs[0] += t  # h(theta) + t . (cos theta, sin theta)
        return SupportBody2(body.a0, coeffs)
    raise TypeError(f"cannot translate {type(body).__name__}")


def boundary_integral_of_x(body: Body) -> np.ndarray:
    """Exact ``int_{boundary} x dsigma``."""
    if isinstance(body, Polygon2):
        a, b = body.edges()
        lengths = np.linalg.norm(b - a, axis=1)
        return lengths @ (0.5 * (a + b))
    if isinstance(body, Polytope3):
        a, b, c = body.triangles()
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        return areas @ ((a + b + c) / 3)
    if isinstance(body, SupportBody2):
        theta, h, dh, d2h = body.grid_values()
        rad = h + d2h
        x = h * np.cos(theta) - dh * np.sin(theta)
        y = h * np.sin(theta) + dh * np.cos(theta)
        return 2 * np.pi * np.array([np.mean(x * rad), np.mean(y * rad)])
    raise TypeError(f"unsupported body {type(body).__name__}")


def boundary_barycenter(body: Body) -> np.ndarray:
    """``(1/P) int_{boundary} x dsigma``."""
    from .functionals import perimeter

    return boundary_integral_of_x(body) / perimeter(body)


def normalize(body: Body) -> Body:
    """Translate so that the boundary barycenter sits at the origin."""
    return translate(body, -boundary_barycenter(body))


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------


def disk_polygon(k: int, radius: float = 1.0, phase: float = 0.0) -> Polygon2:
    """Regular ``k``-gon inscribed in the circle of given radius."""
    t = phase + 2 * np.pi * np.arange(k) / k
    return Polygon2(radius * np.stack([np.cos(t), np.sin(t)], axis=1))


def square(side: float = 2.0) -> Polygon2:
    """Centered axis-aligned square; vertex 0 is the upper-right corner."""
    s = side / 2
    return Polygon2([[s, s], [-s, s], [-s, -s], [s, -s]])


def rectangle(width: float, height: float) -> Polygon2:
    w, h = width / 2, height / 2
    return Polygon2([[w, h], [-w, h], [-w, -h], [w, -h]])


def ellipse_polygon(a: float, b: float, k: int = 4096) -> Polygon2:
    t = 2 * np.pi * np.arange(k) / k
    return Polygon2(np.stack([a * np.cos(t), b * np.sin(t)], axis=1))


def cube(half: float = 1.0) -> Polytope3:
    corners = np.array([[x, y, z] for x in (1, -1) for y in (1, -1) for z in (1, -1)], dtype=float)
    return hull3(half * corners)


def fibonacci_sphere(n: int, radius: float = 1.0) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sphere_polytope(n: int = 5000, radius: float = 1.0) -> Polytope3:
    """Hull of ``n`` near-uniform points on the sphere."""
    return hull3(fibonacci_sphere(n, radius))


def random_polygon(rng: np.random.Generator, n_min: int = 5, n_max: int = 50) -> Polygon2:
    """Hull of uniform points in the unit disk."""
    while True:
        m = int(rng.integers(n_min, n_max + 1))
        r = np.sqrt(rng.random(m))
        t = 2 * np.pi * rng.random(m)
        try:
            return polygon_from_vertices(np.stack([r * np.cos(t), r * np.sin(t)], axis=1))
        except (FewerThanThreeHullVertices, InvalidBody, NotConvex):
            continue


def random_polytope(rng: np.random.Generator, n_min: int = 8, n_max: int = 60) -> Polytope3:
    """Hull of uniform points in the unit ball."""
    while True:
        m = int(rng.integers(n_min, n_max + 1))
        g = rng.standard_normal((m, 3))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts = g * rng.random((m, 1)) ** (1 / 3)
        try:
            return hull3(pts)
        except (DegenerateInput, InvalidBody, NotConvex):
            continue


def random_ngon(rng: np.random.Generator, k: int = 12, stretch: float = 0.5) -> Polygon2:
    """Convex ``k``-gon: ``k`` random angles on the unit circle, randomly stretched and sheared."""
    while True:
        t = np.sort(2 * np.pi * rng.random(k))
        if np.min(np.diff(np.concatenate([t, [t[0] + 2 * np.pi]]))) < 0.05:
            continue
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
        m = np.eye(2) + stretch * rng.uniform(-1, 1, (2, 2))
        if np.linalg.det(m) <= 0.2:
            continue
        try:
            return Polygon2(pts @ m.T)
        except (InvalidBody, NotConvex):
            continue


def random_support_body(
    rng: np.random.Generator, n_modes: int = 8, amplitude: float = 0.3, shift: float = 0.1
) -> SupportBody2:
    """Random smooth convex body around the origin."""
    k = np.arange(2, n_modes + 1)
    while True:
        c = rng.uniform(-1, 1, (n_modes, 2))
        c[1:] *= (amplitude / (k**2 - 1) / len(k))[:, None]
        c[0] = rng.uniform(-shift, shift, 2)
        try:
            return SupportBody2(1.0, c)
        except (NotConvex, NotPositive):
            continue


# --------------------------------------------------------------------------
# JSON body format
# --------------------------------------------------------------------------


def body_to_dict(body: Body) -> dict:
    if isinstance(body, Polygon2):
        return {"kind": "polygon2", "vertices": body.vertices.tolist()}
    if isinstance(body, Polytope3):
        return {"kind": "polytope3", "vertices": body.vertices.tolist(), "faces": body.faces.tolist()}
    if isinstance(body, SupportBody2):
        return {"kind": "support2", "a0": body.a0, "coeffs": body.coeffs.tolist()}
    raise TypeError(f"unsupported body {type(body).__name__}")


def body_from_dict(data: dict) -> Body:
    kind = data.get("kind")
    if kind == "polygon2":
        return Polygon2(data["vertices"])
    if kind == "polytope3":
        if "faces" in data and data["faces"]:
            return Polytope3(data["vertices"], data["faces"])
        return hull3(data["vertices"])
    if kind == "support2":
        return support_body(data["a0"], data.get("coeffs", []))
    raise InvalidBody(f"unknown body kind {kind!r}")


def load_body(path: Union[str, Path]) -> Body:
    with open(path) as fh:
        return body_from_dict(json.load(fh))


def save_body(body: Body, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(body_to_dict(body), fh)

