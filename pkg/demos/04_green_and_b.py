"""Dirichlet Green's functions of geodesic balls and the b-function.

Positive curvature pushes the Green's function above its flat counterpart,
and the boundary gradient of b moves above 1.
"""
from rigidity_lab.geometry import model_ball
from rigidity_lab.green import b_function_boundary_gradient, green_comparison, radial_green

for kappa in (0.1, 0.5, 1.0):
    ball = model_ball("sphere", n=2, R=1.0, kappa=kappa)
    e = green_comparison(ball)["green_minus_flat"]
    g = radial_green(ball)
    print(f"n=2 kappa={kappa}: G-Gbar min {e.min:.2e} mean {e.mean:.5f}, flux at rim {g.flux()[-1]:.12f}")

for kind, params in (("euclidean", {}), ("sphere", {"kappa": 1.0}), ("smoothed-cone", {"alpha": 0.8})):
    res = b_function_boundary_gradient(model_ball(kind, n=3, R=1.0, **params))
    print(f"n=3 {kind:14s} sup|grad b| = {res.sup_grad:.8f}  bound = {res.bound:.8f}  rigid = {res.rigid}")
