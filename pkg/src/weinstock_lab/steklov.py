"""Steklov and Wentzell eigenvalues of convex polygons with P1 finite elements.

The polygon is fan-triangulated from its centroid and refined uniformly.
Interior unknowns are eliminated from the stiffness matrix (a discrete
Dirichlet-to-Neumann map ``S``), leaving the dense symmetric pencil

    (S + beta K_tau) u = mu M u

on the boundary nodes, where ``M`` is the boundary mass matrix and
``K_tau`` the 1D stiffness matrix along the boundary polyline. Conforming
elements on an exactly meshed polygon make every discrete eigenvalue an
upper bound for the continuous one.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .bodies import Polygon2, normalize
from .errors import NegativeBeta, SolverFailure
from .functionals import boundary_momentum, lambda_ball, perimeter, volume

FEM_SLACK = 0.02


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray  # counterclockwise cycle
    refinement_level: int = 0

    @property
    def h_max(self) -> float:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return float(np.max(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)))

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        return np.unique(e, axis=0)

    def boundary_edges(self) -> np.ndarray:
        b = self.boundary_nodes
        return np.stack([b, np.roll(b, -1)], axis=1)


def _area_centroid(poly: Polygon2) -> np.ndarray:
    v = poly.vertices
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    return (cross @ (v + w)) / (3 * cross.sum())


def refine(mesh: Mesh) -> Mesh:
    """Uniform 4-way refinement through edge midpoints."""
    t = mesh.triangles
    F, N = len(t), len(mesh.nodes)
    pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(pairs, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    mid = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    nodes = np.vstack([mesh.nodes, mid])
    mab, mbc, mca = N + inv[:F], N + inv[F : 2 * F], N + inv[2 * F :]
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    tris = np.concatenate(
        [
            np.stack([a, mab, mca], 1),
            np.stack([b, mbc, mab], 1),
            np.stack([c, mca, mbc], 1),
            np.stack([mab, mbc, mca], 1),
        ]
    )
    bn = mesh.boundary_nodes
    bkey = np.sort(np.stack([bn, np.roll(bn, -1)], 1), axis=1)
    code = uniq[:, 0] * (N + 1) + uniq[:, 1]
    bmid = N + np.searchsorted(code, bkey[:, 0] * (N + 1) + bkey[:, 1])
    boundary = np.stack([bn, bmid], 1).reshape(-1)
    return Mesh(nodes, tris, boundary, mesh.refinement_level + 1)


def mesh_polygon(poly: Polygon2, refinements: int = 0) -> Mesh:
    """Fan triangulation from the centroid followed by uniform refinements."""
    k = len(poly.vertices)
    nodes = np.vstack([_area_centroid(poly), poly.vertices])
    i = np.arange(k)
    tris = np.stack([np.zeros(k, dtype=np.int64), i + 1, (i + 1) % k + 1], 1)
    mesh = Mesh(nodes, tris, i + 1, 0)
    for _ in range(refinements):
        mesh = refine(mesh)
    return mesh


def mesh_disk(refinements: int, base_k: int = 16, radius: float = 1.0) -> Mesh:
    """Mesh of the disk: the refined ``base_k``-gon mesh mapped radially onto the circle.

    Boundary nodes land on the circle, so the geometric error shrinks with
    the mesh size instead of being frozen by the base polygon.
    """
    t = 2 * np.pi * np.arange(base_k) / base_k
    poly = Polygon2(radius * np.stack([np.cos(t), np.sin(t)], 1))
    mesh = mesh_polygon(poly, refinements)
    x = mesh.nodes
    r = np.linalg.norm(x, axis=1)
    phi = np.arctan2(x[:, 1], x[:, 0])
    alpha = np.pi / base_k
    # angle from the nearest edge-midpoint direction
    off = np.mod(phi, 2 * alpha) - alpha
    rho_poly = radius * np.cos(alpha) / np.cos(off)
    scale = np.where(r > 0, radius / rho_poly, 1.0)
    return Mesh(x * scale[:, None], mesh.triangles, mesh.boundary_nodes, mesh.refinement_level)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    p = mesh.nodes
    t = mesh.triangles
    p0, p1, p2 = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    d = np.stack([p1 - p2, p2 - p0, p0 - p1], axis=1)  # edge opposite each vertex
    area = 0.5 * ((p1 - p0)[:, 0] * (p2 - p0)[:, 1] - (p1 - p0)[:, 1] * (p2 - p0)[:, 0])
    if np.any(area <= 0):
        raise SolverFailure("mesh has non-positively oriented triangles")
    local = np.einsum("fik,fjk->fij", d, d) / (4 * area)[:, None, None]
    rows = np.repeat(t, 3, axis=1).reshape(-1)
    cols = np.tile(t, (1, 3)).reshape(-1)
    n = len(p)
    return sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()


def boundary_matrices(mesh: Mesh):
    """Mass and tangential stiffness along the boundary cycle (local boundary ordering)."""
    b = mesh.boundary_nodes
    m = len(b)
    lengths = np.linalg.norm(mesh.nodes[np.roll(b, -1)] - mesh.nodes[b], axis=1)
    i = np.arange(m)
    j = (i + 1) % m
    M = np.zeros((m, m))
    K = np.zeros((m, m))
    np.add.at(M, (i, i), lengths / 3)
    np.add.at(M, (j, j), lengths / 3)
    np.add.at(M, (i, j), lengths / 6)
    np.add.at(M, (j, i), lengths / 6)
    np.add.at(K, (i, i), 1 / lengths)
    np.add.at(K, (j, j), 1 / lengths)
    np.add.at(K, (i, j), -1 / lengths)
    np.add.at(K, (j, i), -1 / lengths)
    return M, K


@dataclass(eq=False)
class BoundaryOperators:
    """Discrete Dirichlet-to-Neumann map and boundary matrices of one mesh."""

    mesh: Mesh
    S: np.ndarray
    M: np.ndarray
    K_tau: np.ndarray


def boundary_operators(mesh: Mesh, block: int = 256) -> BoundaryOperators:
    K = assemble_stiffness(mesh).tocsc()
    b = mesh.boundary_nodes
    interior = np.setdiff1d(np.arange(len(mesh.nodes)), b)
    K_II = K[interior][:, interior].tocsc()
    K_IB = K[interior][:, b].tocsc()
    K_BB = K[b][:, b].toarray()
    try:
        lu = splu(K_II)
    except RuntimeError as exc:
        raise SolverFailure(f"interior stiffness is singular: {exc}") from exc
    S = K_BB.copy()
    K_BI = K_IB.T.tocsr()
    for start in range(0, len(b), block):
        cols = slice(start, min(start + block, len(b)))
        X = lu.solve(K_IB[:, cols].toarray())
        S[:, cols] -= K_BI @ X
    S = 0.5 * (S + S.T)
    M, K_tau = boundary_matrices(mesh)
    return BoundaryOperators(mesh, S, M, K_tau)


def solve_pencil(ops: BoundaryOperators, beta: float, k: int) -> np.ndarray:
    A = ops.S + beta * ops.K_tau if beta else ops.S
    k = min(k, len(ops.M))
    try:
        return scipy.linalg.eigh(A, ops.M, subset_by_index=[0, k - 1], eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"generalized eigensolve failed: {exc}") from exc


def ball_steklov(radius: float) -> float:
    return 1.0 / radius


def ball_wentzell(radius: float, beta: float) -> float:
    """``(R + beta) / R^2``: the coordinate functions are eigenfunctions."""
    return (radius + beta) / radius**2


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    beta: float
    h_max: float
    refinement_level: int
    V: float
    P: float
    W: float
    slack: float = FEM_SLACK

    @property
    def sigma_1(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def bound_nVW(self) -> float:
        return 2 * self.V / self.W

    @property
    def bound_test_function(self) -> float:
        """``(n V + beta P) / W``."""
        return (2 * self.V + self.beta * self.P) / self.W

    @property
    def bounds(self):
        return self.bound_nVW, self.bound_test_function

    @property
    def ball_equal_perimeter(self) -> float:
        return ball_wentzell(self.P / (2 * np.pi), self.beta)

    @property
    def ball_equal_volume(self) -> float:
        return ball_wentzell(math.sqrt(self.V / np.pi), self.beta)

    @property
    def verdicts(self) -> Dict[str, bool]:
        s = 1 + self.slack
        out = {
            "nonnegative": bool(self.eigenvalues[0] >= -1e-10),
            "constant_mode": bool(abs(self.eigenvalues[0]) <= 1e-8 * self.eigenvalues[1]),
            "test_function_bound": self.sigma_1 <= self.bound_test_function * s,
        }
        if self.beta == 0:
            out["weinstock"] = self.sigma_1 <= self.ball_equal_perimeter * s
        else:
            out["wentzell_equal_volume"] = self.sigma_1 <= self.ball_equal_volume * s
        return out


def _spectrum(poly: Polygon2, beta: float, refinements: int, k: int, ops: Optional[BoundaryOperators]):
    centered = normalize(poly)
    if ops is None:
        ops = boundary_operators(mesh_polygon(centered, refinements))
    ev = solve_pencil(ops, beta, k)
    return SpectrumResult(
        eigenvalues=ev,
        beta=beta,
        h_max=ops.mesh.h_max,
        refinement_level=ops.mesh.refinement_level,
        V=volume(centered),
        P=perimeter(centered),
        W=boundary_momentum(centered),
    )


def steklov_spectrum(poly: Polygon2, refinements: int = 4, k: int = 6, ops: Optional[BoundaryOperators] = None) -> SpectrumResult:
    """Lowest ``k`` Steklov eigenvalues (the first is the constant mode, ~0)."""
    return _spectrum(poly, 0.0, refinements, k, ops)


def wentzell_spectrum(
    poly: Polygon2, beta: float, refinements: int = 4, k: int = 6, ops: Optional[BoundaryOperators] = None
) -> SpectrumResult:
    if beta < 0:
        raise NegativeBeta(f"beta must be >= 0, got {beta}")
    return _spectrum(poly, float(beta), refinements, k, ops)


def polygon_operators(poly: Polygon2, refinements: int) -> BoundaryOperators:
    """Operators for the centered polygon, reusable across ``beta`` values."""
    return boundary_operators(mesh_polygon(normalize(poly), refinements))


@dataclass
class WeinstockReport:
    spectrum: SpectrumResult
    coarse_sigma_1: Optional[float]
    slack: float = FEM_SLACK

    @property
    def sigma_1(self) -> float:
        return self.spectrum.sigma_1

    @property
    def sigma_2(self) -> float:
        return float(self.spectrum.eigenvalues[2])

    @property
    def ball_value(self) -> float:
        """Steklov eigenvalue of the disk with the same perimeter, ``2 pi / P``."""
        return 2 * np.pi / self.spectrum.P

    @property
    def richardson(self) -> Optional[float]:
        if self.coarse_sigma_1 is None:
            return None
        return self.sigma_1 + (self.sigma_1 - self.coarse_sigma_1) / 3

    @property
    def normalized(self) -> float:
        """``sigma_1 P / (2 pi)``; 1 on the disk."""
        return self.sigma_1 / self.ball_value

    @property
    def chain(self) -> List[float]:
        """``[sigma_1, nV/W, n omega^(2/n) V^((n-2)/n) / P, (n omega / P)^(1/(n-1))]``."""
        sp_ = self.spectrum
        n = 2
        omega = 1 / lambda_ball(n)  # omega_2 = pi
        return [
            self.sigma_1,
            sp_.bound_nVW,
            n * omega ** (2 / n) * sp_.V ** ((n - 2) / n) / sp_.P,
            (n * omega / sp_.P) ** (1 / (n - 1)),
        ]

    @property
    def reciprocal_sum(self) -> float:
        """``(1/sigma_1 + 1/sigma_2) / P``; at least ``1/pi``."""
        return (1 / self.sigma_1 + 1 / self.sigma_2) / self.spectrum.P

    @property
    def verdicts(self) -> Dict[str, bool]:
        s = 1 + self.slack
        c = self.chain
        return {
            "weinstock": self.sigma_1 <= self.ball_value * s,
            "sharper_ratio": self.sigma_1 * self.spectrum.P <= 2 * np.pi * s,
            "test_function_bound": c[0] <= c[1] * s,
            "main_inequality_link": c[1] <= c[2] * (1 + 1e-12),
            "isoperimetric_link": c[2] <= c[3] * (1 + 1e-12),
            "reciprocal_sum": self.reciprocal_sum >= (1 / np.pi) / s,
        }

    @property
    def holds(self) -> bool:
        return all(self.verdicts.values())


def weinstock_verdict(poly: Polygon2, refinements: int = 4, ops: Optional[BoundaryOperators] = None) -> WeinstockReport:
    fine = steklov_spectrum(poly, refinements, k=4, ops=ops)
    coarse = None
    if fine.refinement_level >= 1:
        coarse = steklov_spectrum(poly, fine.refinement_level - 1, k=2).sigma_1
    return WeinstockReport(fine, coarse)


@dataclass
class SmallBetaReport:
    betas: np.ndarray
    mu: np.ndarray
    ball: np.ndarray  # equal-perimeter disk values
    slack: float = 0.0

    @property
    def holds(self) -> np.ndarray:
        return self.mu <= self.ball * (1 + self.slack)

    @property
    def threshold(self) -> Optional[float]:
        """Largest beta of the sorted list up to which every check holds."""
        order = np.argsort(self.betas)
        best = None
        for i in order:
            if not self.holds[i]:
                break
            best = float(self.betas[i])
        return best


def small_beta_surface_check(
    poly: Polygon2,
    beta_list: Sequence[float],
    refinements: int = 4,
    slack: float = 0.0,
    ops: Optional[BoundaryOperators] = None,
) -> SmallBetaReport:
    if ops is None:
        ops = polygon_operators(poly, refinements)
    P = perimeter(poly)
    R = P / (2 * np.pi)
    betas = np.asarray(beta_list, dtype=float)
    if np.any(betas < 0):
        raise NegativeBeta("beta must be >= 0")
    mu = np.array([solve_pencil(ops, b, 2)[1] for b in betas])
    return SmallBetaReport(betas, mu, np.array([ball_wentzell(R, b) for b in betas]), slack)


SPECTRUM_CSV_COLUMNS = ("body_id", "h_max", "sigma1", "bound_nVW", "ball_value", "margin")


def spectrum_csv(rows: Sequence[tuple], wentzell: bool = False) -> str:
    """Rows of ``(body_id, SpectrumResult)``; margin is ``ball_value - sigma1``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(SPECTRUM_CSV_COLUMNS)
    if wentzell:
        cols[2] = "mu"
    w.writerow(cols)
    for body_id, res in rows:
        ball = res.ball_equal_volume if wentzell else res.ball_equal_perimeter
        w.writerow([body_id, repr(res.h_max), repr(res.sigma_1), repr(res.bound_test_function),
                    repr(ball), repr(ball - res.sigma_1)])
    return buf.getvalue()
