"""Comparison deficits on round-sphere balls.

Flat space has every deficit equal to zero. As the curvature kappa grows,
each deficit grows roughly linearly in kappa.
"""
from rigidity_lab.geometry import comparison_deficits, curvature_report, model_ball

flat = comparison_deficits(model_ball("euclidean", n=3, R=1.0))
print("flat ball:", {e.id: e.sup for e in flat})

print(f"{'kappa':>6} {'Ric_min':>8} " + " ".join(f"{e.id:>20}" for e in flat))
for kappa in (0.01, 0.1, 0.5, 1.0):
    ball = model_ball("sphere", n=3, R=1.0, kappa=kappa)
    ric = curvature_report(ball)["ricci_radial"].min
    rep = comparison_deficits(ball)
    print(f"{kappa:6.2f} {ric:8.3f} " + " ".join(f"{e.mean:20.6f}" for e in rep))
