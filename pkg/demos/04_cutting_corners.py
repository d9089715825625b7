"""Cutting a body at depth eps below its farthest point."""

from weinstock_lab import bodies as B
from weinstock_lab import cropping as C

res = C.crop(B.square(), 0.1)
print(f"square, eps=0.1: dV={res.dV:.6f} dP={res.dP:.6f} dlam actual={res.delta_lambda_actual:.6e} "
      f"predicted={res.delta_lambda_predicted:.6e}")

# As eps halves, |dlam actual - dlam predicted| / (|dV| + |dP|) halves too.
rep = C.lemma_reverse_check(B.cube(), [0.1, 0.05, 0.025, 0.0125])
print(rep.to_csv())

for name, body in [("square", B.square()), ("512-gon", B.disk_polygon(512)),
                   ("thin ellipse", B.ellipse_polygon(0.3, 1 / 0.3, 256))]:
    v = C.step3_descent(body)
    print(f"{name:12s} regime={v.regime:16s} witness eps={v.witness.eps if v.found else None}")
