import math

import numpy as np
import pytest
from scipy import optimize

from rigidity_lab.geometry import model_ball
from rigidity_lab.green import (
    b_function,
    b_function_boundary_gradient,
    euclidean_green,
    green_comparison,
    green_self_test,
    green_table,
    radial_green,
)


def sphere_green_2d(r):
    # int_r^1 dt / (2 pi sin t) in closed form
    return math.log(math.tan(0.5) / math.tan(r / 2)) / (2 * math.pi)


def test_euclidean_green_values():
    assert euclidean_green(2, 1.0) == 0.0
    assert euclidean_green(3, 0.5) == pytest.approx(1 / (4 * math.pi))
    assert euclidean_green(2, math.exp(-2 * math.pi)) == pytest.approx(1.0)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            euclidean_green(3, bad)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_flat_green_is_euclidean(n):
    rep = green_comparison(model_ball("euclidean", n=n, R=1.0))
    e = rep["green_minus_flat"]
    assert max(abs(e.sup), abs(e.min)) <= 1e-10


def test_sphere_green_matches_closed_form():
    g = radial_green(model_ball("sphere", n=2, R=1.0, kappa=1.0))
    for r in (0.01, 0.25, 0.5, 0.9):
        assert g(r) == pytest.approx(sphere_green_2d(r), rel=1e-12)
    assert g(0.5) - euclidean_green(2, 0.5) == pytest.approx(0.0107306, abs=1e-7)


def test_green_ratio_at_pole():
    g = radial_green(model_ball("sphere", n=3, R=1.0, kappa=1.0))
    r = 1e-6
    assert g(r) / euclidean_green(3, r) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("kind,params,n", [("sphere", {"kappa": 1.0}, 2), ("sphere", {"kappa": 0.3}, 3),
                                           ("smoothed-cone", {"alpha": 0.7}, 4), ("euclidean", {}, 2)])
def test_flux_and_self_test(kind, params, n):
    ball = model_ball(kind, n=n, R=1.0, **params)
    g = radial_green(ball)
    assert np.max(np.abs(g.flux() - 1)) < 1e-12
    errs = green_self_test(g)
    assert len(errs) == 3 and max(errs.values()) < 1e-6


def test_green_comparison_positive_on_sphere():
    rep = green_comparison(model_ball("sphere", n=2, R=1.0, kappa=1.0))
    e = rep["green_minus_flat"]
    assert e.violations == 0 and e.min >= -1e-12 and e.mean > 0


def test_green_rejects_bad_balls():
    with pytest.raises(ValueError):
        green_comparison(model_ball("euclidean", n=2, R=2.0, m=512))
    with pytest.raises(ValueError):
        radial_green(model_ball("sphere", n=2, R=math.pi, kappa=1.0))


def test_green_table_rows():
    rows = green_table(radial_green(model_ball("sphere", n=2, R=1.0, m=256, kappa=1.0)))
    assert len(rows) == 256
    r, G, Gb, d = rows[127]
    assert d == pytest.approx(G - Gb) and G == pytest.approx(sphere_green_2d(r), rel=1e-12)


def test_b_function_flat_is_distance():
    g = radial_green(model_ball("euclidean", n=3, R=1.0))
    r = np.array([0.1, 0.5, 0.9])
    assert np.allclose(b_function(g, r), r, rtol=1e-12)
    res = b_function_boundary_gradient(model_ball("euclidean", n=3, R=1.0))
    assert res.sup_grad == pytest.approx(1.0, abs=1e-14) and res.bound == pytest.approx(1.0, abs=1e-14)
    assert res.rigid


def test_b_function_sphere():
    res = b_function_boundary_gradient(model_ball("sphere", n=3, R=1.0, kappa=1.0))
    assert res.sup_grad == pytest.approx(1 / math.sin(1) ** 2, abs=1e-12)
    assert res.bound == pytest.approx(res.sup_grad, rel=1e-14)
    assert not res.rigid


def test_b_function_cone():
    width = optimize.brentq(lambda w: 0.8 + 0.2 * w * math.tanh(1 / w) - 0.85, 1e-3, 10, xtol=1e-15)
    ball = model_ball("smoothed-cone", n=4, R=1.0, alpha=0.8, width=width)
    assert float(ball.profile.f(1.0)) == pytest.approx(0.85, abs=1e-13)
    res = b_function_boundary_gradient(ball)
    assert res.sup_grad == pytest.approx(0.85**-3, rel=1e-12)


def test_b_function_guards():
    with pytest.raises(ValueError):
        b_function_boundary_gradient(model_ball("euclidean", n=2, R=1.0))
    with pytest.raises(ValueError):
        b_function_boundary_gradient(model_ball("euclidean", n=3, R=2.0, m=512))
