"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N PASS|FAIL: ...`` line. The lines are
printed in the pytest terminal summary and also when this file is run as a
script.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES
from rigidity_lab import heat
from rigidity_lab.config import parse_config_text
from rigidity_lab.geometry import comparison_deficits, model_ball, polar_distortion, unit_ball_volume
from rigidity_lab.green import (
    b_function_boundary_gradient,
    euclidean_green,
    green_comparison,
    green_self_test,
    radial_green,
)
from rigidity_lab.harmonic import (
    cheng_yau_deficit,
    cheng_yau_stability_functional,
    harmonic_from_boundary,
    log_gradient,
    poisson_harmonic,
    v_inequality_residual,
)
from rigidity_lab.suites import emit_report, run_suite, sweep_family

BUDGET = 60.0
KAPPAS = [0.01, 0.05, 0.1, 0.5, 1.0]
COSINE = [(0, 1.0, 0.0), (1, 0.3, 0.0)]
REFINE_BAND = (3.0, 5.0)

# scalars that are locations, step sizes, counters or tolerance metadata, not measured quantities
NON_CONVERGENT = {"h", "dt", "be_fallbacks", "quotient_sup_r", "quotient_sup_theta", "v_tol_fd",
                  "stability_excluded_fraction", "equality_ratio"}


def record(n: int, ok: bool, detail: str, started: float):
    took = time.perf_counter() - started
    ok = ok and took < BUDGET
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {detail} ({took:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_cheng_yau_equality():
    t0 = time.perf_counter()
    flat = poisson_harmonic(model_ball("euclidean", n=2, R=1.0, m=1024), K_max=64)
    q = cheng_yau_deficit(flat)["cheng_yau_quotient"]
    ray = np.array([(1 - r * r) * log_gradient(flat, r, 0.0) / 2 for r in flat.lattice_r])
    sph = cheng_yau_deficit(poisson_harmonic(model_ball("sphere", n=2, R=1.0, m=1024, kappa=1.0)))
    s = sph["cheng_yau_quotient"].sup
    ok = abs(q.sup - 1) <= 1e-6 and np.max(np.abs(ray - 1)) <= 1e-6 and s <= 1 - 1e-3
    record(1, ok, f"flat sup-1 = {q.sup - 1:.2e}, ray max|q-1| = {np.max(np.abs(ray - 1)):.2e}, "
                  f"kappa=1 sup = {s:.6f}", t0)


def test_criterion_2_v_inequality():
    t0 = time.perf_counter()
    fields = {
        "flat-poisson": poisson_harmonic(model_ball("euclidean", n=2, R=1.0, m=1024)),
        "sphere-cosine": harmonic_from_boundary(model_ball("sphere", n=2, R=1.0, m=1024, kappa=1.0), COSINE),
        "cone-poisson": poisson_harmonic(model_ball("smoothed-cone", n=2, R=1.0, m=1024, alpha=0.7, width=0.5)),
    }
    ok, parts = True, []
    for name, u in fields.items():
        coarse, fine = v_inequality_residual(u, 1 / 32), v_inequality_residual(u, 1 / 64)
        ratio = coarse.tolerances["tol_fd"] / fine.tolerances["tol_fd"]
        viol = fine["v_inequality"].violations
        ok &= viol == 0 and REFINE_BAND[0] <= ratio <= REFINE_BAND[1]
        parts.append(f"{name} violations={viol} tol ratio={ratio:.2f}")
    record(2, ok, "; ".join(parts), t0)


def test_criterion_3_stability_direction():
    t0 = time.perf_counter()
    delta, dist = [], []
    for k in KAPPAS:
        ball = model_ball("sphere", n=2, R=1.0, m=1024, kappa=k)
        delta.append(cheng_yau_stability_functional(harmonic_from_boundary(ball, COSINE)).value)
        dist.append(polar_distortion(ball))
    flat = cheng_yau_stability_functional(
        harmonic_from_boundary(model_ball("euclidean", n=2, R=1.0, m=1024), COSINE)).value
    dd, dp = np.diff(delta), np.diff(dist)
    monotone = bool(np.all(dd <= 0) or np.all(dd >= 0))
    gaps = np.abs(np.array(delta) - flat)
    approach = bool(np.all(np.diff(gaps) >= 0)) and gaps[0] < 1e-3 * abs(flat)
    ok = monotone and approach and bool(np.all(dp > 0)) and dist[0] < 2e-3
    record(3, ok, f"delta {['%.6f' % d for d in delta]} vs flat {flat:.6f}, "
                  f"distortion {dist[0]:.2e}..{dist[-1]:.2e}", t0)


def test_criterion_4_li_yau():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    analytic = max(float(np.max(np.abs(heat.li_yau_quantity(heat.EuclideanHeatKernel(n), rng.uniform(0, 5, 100),
                                                             rng.uniform(0.01, 10, 100))))) for n in (2, 3))
    k = heat.EuclideanHeatKernel(2)
    flat = heat.li_yau_refinement([
        heat.heat_solve_radial(heat.whole_space_ball(2, 1.0, 256 * 2**j), k, 0.25, 1.0, 40 * 2**j, "neumann")
        for j in range(3)])
    bump = lambda r: 1 + np.exp(-(r**2) / 0.5)
    curved = heat.li_yau_refinement([
        heat.heat_solve_radial(model_ball("sphere", n=2, R=math.pi, m=256 * 2**j, kappa=1.0), bump,
                               0.1, 1.0, 40 * 2**j, t_origin=0.1)
        for j in range(3)])
    ok = analytic <= 1e-12
    parts = [f"analytic max|LY| = {analytic:.1e}"]
    for name, lv in (("flat", flat), ("kappa=1", curved)):
        ratios = [a.tol_pde / b.tol_pde for a, b in zip(lv, lv[1:])]
        ok &= lv[0].min_li_yau >= -lv[0].tol_pde
        ok &= all(REFINE_BAND[0] <= x <= REFINE_BAND[1] for x in ratios)
        parts.append(f"{name} min={lv[0].min_li_yau:.3f} tol={lv[0].tol_pde:.3g} "
                     f"ratios={','.join('%.2f' % x for x in ratios)}")
    ok &= curved[0].max_G < -curved[0].tol_pde
    parts.append(f"kappa=1 max G={curved[0].max_G:.3f}")
    record(4, ok, "; ".join(parts), t0)


def test_criterion_5_harnack():
    # the ratio is bounded above by 1; the lower-bound reading below is checked literally
    t0 = time.perf_counter()
    eq = heat.harnack_ratio(heat.EuclideanHeatKernel(2), 0.5, 1.0, 1.0, 2.0)
    k = heat.EuclideanHeatKernel(2)
    coarse, fine = (heat.heat_solve_radial(heat.whole_space_ball(2, 1.0, 256 * 2**j), k, 0.25, 1.0, 40 * 2**j,
                                           "neumann") for j in range(2))
    r_max, t_min = heat.default_window(coarse)
    rng = np.random.default_rng(0)
    ratios, diffs = [], []
    for _ in range(50):
        t1, t2 = np.sort(rng.uniform(t_min, 1.0, 2))
        r1, r2 = rng.uniform(0, r_max, 2)
        a, b = heat.harnack_ratio(coarse, r1, t1, r2, t2), heat.harnack_ratio(fine, r1, t1, r2, t2)
        ratios.append(b.ratio)
        diffs.append(abs(a.ratio - b.ratio))
    tol = 2 * 4 / 3 * max(diffs)
    ratios = np.array(ratios)
    below = int(np.count_nonzero(ratios < 1 - tol))
    above = int(np.count_nonzero(ratios > 1 + tol))
    ok = abs(eq.ratio - 1) <= 1e-10 and below == 0
    record(5, ok, f"equality ratio-1 = {eq.ratio - 1:.1e}; random ratios in [{ratios.min():.3f}, "
                  f"{ratios.max():.3f}], tol={tol:.1e}, {below}/50 below 1-tol, {above}/50 above 1+tol", t0)


def test_criterion_6_green():
    t0 = time.perf_counter()
    flat_dev = 0.0
    for n in (2, 3, 4):
        e = green_comparison(model_ball("euclidean", n=n, R=1.0))["green_minus_flat"]
        flat_dev = max(flat_dev, abs(e.sup), abs(e.min))
    g = radial_green(model_ball("sphere", n=2, R=1.0, kappa=1.0))
    oracle = integrate.quad(lambda t: 1 / (2 * math.pi * math.sin(t)), 0.5, 1.0, epsabs=1e-14)[0]
    d = float(g(0.5)) - euclidean_green(2, 0.5)
    d_oracle = oracle - euclidean_green(2, 0.5)
    worst = 0.0
    for kind, params, n in (("euclidean", {}, 2), ("sphere", {"kappa": 1.0}, 2), ("sphere", {"kappa": 0.5}, 3),
                            ("smoothed-cone", {"alpha": 0.7}, 3)):
        errs = green_self_test(radial_green(model_ball(kind, n=n, R=1.0, **params)))
        worst = max(worst, max(errs.values()))
    ok = flat_dev <= 1e-10 and abs(d - 0.0107) <= 5e-4 and abs(d - d_oracle) <= 1e-10 and worst <= 1e-6
    record(6, ok, f"flat max|G-Gbar| = {flat_dev:.1e}; G-Gbar(0.5) = {d:.7f} (oracle {d_oracle:.7f}); "
                  f"self-test worst {worst:.1e}", t0)


def test_criterion_7_b_function():
    t0 = time.perf_counter()
    flat = b_function_boundary_gradient(model_ball("euclidean", n=3, R=1.0))
    area_ratio = 3 * unit_ball_volume(3) / (4 * math.pi)
    sph = b_function_boundary_gradient(model_ball("sphere", n=3, R=1.0, kappa=1.0))
    exact = 1 / math.sin(1.0) ** 2
    ok = (abs(flat.sup_grad - 1) <= 1e-12 and abs(area_ratio - 1) <= 1e-15
          and abs(sph.sup_grad - exact) <= 1e-8 and abs(sph.sup_grad - sph.bound) <= 1e-12 and sph.sup_grad > 1)
    record(7, ok, f"flat sup|grad b| = {flat.sup_grad:.15f}; kappa=1 sup|grad b| = {sph.sup_grad:.10f}, "
                  f"bound = {sph.bound:.10f}, 1/sin^2(1) = {exact:.10f}", t0)


def test_criterion_8_comparison_deficits():
    t0 = time.perf_counter()
    flat = comparison_deficits(model_ball("euclidean", n=3, R=1.0, m=512))
    zero = all(e.sup == 0 and e.min == 0 for e in flat)
    res = sweep_family(parse_config_text("suite=comparison-deficits\nkind=sphere\nkappa=1\nn=3\nR=1\ngrid=512\n"),
                       "kappa", KAPPAS)
    ok, parts = zero, [f"flat identically zero: {zero}"]
    for name in ("laplacian_distance", "laplacian_r2", "hessian_r2", "polar_distortion"):
        t = res.trends[f"{name}_mean"]
        y = [r.scalars[f"{name}_mean"] for r in res.records]
        good = all(v > 0 for v in y) and t["monotone"] in ("increasing", "nondecreasing") \
            and abs(t["exponent"] - 1) <= 0.1
        ok &= good
        parts.append(f"{name} exponent {t['exponent']:.3f} {t['monotone']}")
    record(8, ok, "; ".join(parts), t0)


CONVERGENCE_CONFIGS = {
    "cheng-yau": "suite=cheng-yau\nkind=sphere\nkappa=1\ndata=cosine\n",
    "green": "suite=green\nkind=sphere\nkappa=1\nn=2\n",
    "b-function": "suite=b-function\nkind=sphere\nkappa=1\nn=3\n",
    "comparison-deficits": "suite=comparison-deficits\nkind=sphere\nkappa=1\nn=3\n",
    "li-yau": "suite=li-yau\nkind=sphere\nkappa=1\nboundary=closed\ninitial=bump\nt_start=0.1\nt_end=1\nlevels=2\n",
    "harnack": "suite=harnack\nkind=euclidean\nboundary=whole-space\nt_start=0.25\nt_end=1\n",
}


def converged(grids, y) -> bool:
    """Order >= 1.8 on the last triple, or already converged to roundoff."""
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in y):
        return True
    d1, d2 = abs(y[1] - y[0]), abs(y[2] - y[1])
    if d2 <= 1e-9 * max(1.0, abs(y[2])):
        return True
    return d1 > 0 and math.log(d1 / d2) / math.log(grids[2] / grids[1]) >= 1.8


def test_criterion_9_determinism_and_convergence(tmp_path):
    t0 = time.perf_counter()
    grids = [256, 512, 1024]
    same, bad = True, []
    for name, text in CONVERGENCE_CONFIGS.items():
        cfg = parse_config_text(text)
        a = emit_report(run_suite(cfg), "json", tmp_path / name / "a")
        b = emit_report(run_suite(cfg), "json", tmp_path / name / "b")
        same &= [p.read_bytes() for p in a] == [p.read_bytes() for p in b]
        res = sweep_family(cfg, "grid", grids)
        for key in res.trends:
            if key in NON_CONVERGENT or key.startswith("tol_ratio_"):
                continue
            if not converged(grids, [r.scalars[key] for r in res.records]):
                bad.append(f"{name}.{key}")
    record(9, same and not bad, f"byte-identical: {same}; non-converging scalars: {bad or 'none'}", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-q", "-p", "no:cacheprovider"]))
