"""The ratio W / (P V^(2/n)) on a few bodies, and a random sweep against the ball value."""

import numpy as np

from weinstock_lab import bodies as B
from weinstock_lab import functionals as F

# Exact values first: the square of side 2 has V = 4, P = 8, W = 32/3.
for name, body in [("square", B.square()), ("cube", B.cube()), ("unit disk", B.support_body(1.0))]:
    rep = F.report(body)
    print(f"{name:10s} V={rep.V:.6f} P={rep.P:.6f} W={rep.W:.6f} lambda={rep.lam:.6f} "
          f"ball={F.lambda_ball(rep.n):.6f} excess={rep.excess:+.6f}")

# Moving a body off center only increases W, so the margin grows.
moved = B.translate(B.square(), [0.4, 0.1])
print("off-center square margin:", F.report(moved).margin, "centered:", F.report(moved).margin_normalized)

# Random convex polygons, each centered at its boundary barycenter.
rng = np.random.default_rng(0)
margins = [F.lam(B.normalize(B.random_polygon(rng))) - F.lambda_ball(2) for _ in range(500)]
print(f"500 random polygons: smallest margin {min(margins):.3e}")
