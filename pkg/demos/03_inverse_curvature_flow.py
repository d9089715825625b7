"""Inverse mean curvature flow on a thin ellipse whose excess is negative."""

from weinstock_lab import bodies as B
from weinstock_lab import flows as FL
from weinstock_lab import functionals as F

seed = B.ellipse_support(0.25, 1.0, 128)
print(f"excess at t=0: {F.excess(seed):+.4f}")
print(f"derivative of lambda along 1/H: {FL.shape_derivative(seed, FL.inverse_curvature(seed)):+.4f}")

state = FL.imcf_evolve(seed, T=1.0, dt_record=0.05)
for s in state.history[::4]:
    print(f"t={s.t:4.2f}  P={s.P:8.4f}  lambda={s.lam:.6f}  excess={s.excess:+.5f}")

diag = FL.flow_diagnostics(state)
print("lambda nonincreasing:", diag.lambda_monotone, " excess changes sign near t =", diag.excess_sign_change)
print(f"perimeter follows P(0) e^t to {diag.perimeter_rel_error:.1e}")
