"""Support functions, the cardioid and regular polygons."""

import math

from weinstock_lab import bodies as B
from weinstock_lab import functionals as F
from weinstock_lab import support2d as S

# For convex bodies pi J - L A is bounded below by (L/2) int p^2, where p is h minus its mean.
body = B.support_body(1.0, [[0.05, 0.0], [0.1, 0.02], [0.0, 0.01]])
g = S.weinstock_gap(body)
print(f"gap={g.gap:.6e}  lower bound={g.lower_bound:.6e}  identity residual={g.residual:.1e}")

# The cardioid is not convex and the gap turns negative (moment taken about its boundary barycenter).
laj = S.polar_laj(B.cardioid())
print(f"cardioid: pi J - L A = {laj.gap:.10f}, -4 pi/75 = {-4 * math.pi / 75:.10f}")

# Regular polygons with inradius 1 approach the disk from below for lambda_gamma.
gamma = 0.5
for k in (8, 64, 512):
    poly, closed = S.regular_polygon(k)
    print(f"k={k:4d}  P={F.perimeter(poly):.9f} (closed {closed.L:.9f})  "
          f"lambda_gamma={F.lambda_gamma(poly, gamma):.9f}  disk={F.lambda_gamma_disk(gamma):.9f}")
asym = S.lambda_gamma_asymptotics(gamma)
print(f"fitted alpha^2 coefficient {asym.slope:.5f} vs {asym.predicted_slope:.5f}")
