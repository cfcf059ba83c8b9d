"""Li-Yau quantity and the parabolic Harnack ratio.

The Euclidean heat kernel makes the Li-Yau quantity vanish identically.
The solver reproduces it on a truncated copy of the plane. On the closed
sphere the quantity stays well above zero.
"""
import math

import numpy as np

from rigidity_lab.geometry import model_ball
from rigidity_lab.heat import (
    EuclideanHeatKernel,
    harnack_ratio,
    heat_solve_radial,
    li_yau_refinement,
    whole_space_ball,
)

k = EuclideanHeatKernel(2)
plane = [heat_solve_radial(whole_space_ball(2, 1.0, 256 * 2**j), k, 0.25, 1.0, 40 * 2**j, "neumann")
         for j in range(3)]
for lv in li_yau_refinement(plane):
    print(f"plane  h={lv.h:.4f} dt={lv.dt:.4f} min LY={lv.min_li_yau:+.4f} tol={lv.tol_pde:.4f}")

bump = lambda r: 1 + np.exp(-(r**2) / 0.5)
sphere = [heat_solve_radial(model_ball("sphere", n=2, R=math.pi, m=256 * 2**j, kappa=1.0), bump, 0.1, 1.0,
                            40 * 2**j, t_origin=0.1) for j in range(2)]
for lv in li_yau_refinement(sphere):
    print(f"sphere h={lv.h:.4f} min LY={lv.min_li_yau:+.4f} max G={lv.max_G:+.4f} tol={lv.tol_pde:.4f}")

print("kernel on its equality segment:", harnack_ratio(k, 0.5, 1.0, 1.0, 2.0).ratio)
res = harnack_ratio(plane[-1], 0.3, 0.4, 1.2, 0.9)
print("solver field, generic points:", res.ratio, res.caveats)
