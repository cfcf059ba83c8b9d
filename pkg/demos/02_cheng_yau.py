"""Sharp gradient bound for positive harmonic functions on disks.

On the flat disk the Poisson kernel saturates (1 - r^2)|grad ln u|/2 <= 1
at every point. Curving the disk leaves a strict margin.
"""
from rigidity_lab.geometry import model_ball
from rigidity_lab.harmonic import (
    cheng_yau_deficit,
    cheng_yau_stability_functional,
    harmonic_from_boundary,
    poisson_harmonic,
    v_inequality_residual,
)

for kind, params in (("euclidean", {}), ("sphere", {"kappa": 0.5}), ("sphere", {"kappa": 1.0})):
    ball = model_ball(kind, n=2, R=1.0, m=1024, **params)
    u = poisson_harmonic(ball)
    q = cheng_yau_deficit(u)["cheng_yau_quotient"]
    print(f"{kind:9s} {params}: Poisson quotient sup {q.sup:.8f}, mean {q.mean:.6f}")

# v = ln|grad ln u|^2 satisfies Delta v >= 2 e^v; the stencil error gives the tolerance
u = harmonic_from_boundary(model_ball("sphere", n=2, R=1.0, m=1024, kappa=1.0), [(0, 1.0, 0.0), (1, 0.3, 0.0)])
rep = v_inequality_residual(u)
print("v residual min", rep["v_inequality"].min, "tol", rep.tolerances["tol_fd"])
print("stability functional", cheng_yau_stability_functional(u).value)
