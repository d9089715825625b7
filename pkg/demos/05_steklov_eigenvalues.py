"""Steklov and Wentzell eigenvalues by piecewise-linear finite elements."""

import math

import numpy as np

from weinstock_lab import bodies as B
from weinstock_lab import steklov as S

# Disk: sigma_1 = 1, approached at second order in the mesh size.
for level in range(1, 5):
    ops = S.boundary_operators(S.mesh_disk(level))
    print(f"disk level {level}: h={ops.mesh.h_max:.4f} sigma_1={S.solve_pencil(ops, 0.0, 3)[1]:.8f}")

rep = S.weinstock_verdict(B.square(), refinements=5)
print(f"square: sigma_1={rep.sigma_1:.6f} <= 2V/W={rep.spectrum.bound_nVW:.6f} <= 2pi/P={math.pi / 4:.6f}")
print("verdicts:", rep.verdicts)

rng = np.random.default_rng(1)
poly = B.random_ngon(rng)
ops = S.polygon_operators(poly, 4)
for beta in (0.0, 0.1, 1.0):
    r = S.wentzell_spectrum(poly, beta, ops=ops)
    print(f"random 12-gon beta={beta}: mu={r.sigma_1:.6f} bound={r.bound_test_function:.6f} "
          f"equal-volume disk={r.ball_equal_volume:.6f}")
check = S.small_beta_surface_check(B.rectangle(4.0, 1.0), [0.0, 0.01, 0.1, 1.0, 5.0], refinements=4)
print("4:1 rectangle, equal-perimeter comparison holds up to beta =", check.threshold)
