"""Dirichlet Green's function of a model ball with pole at the center.

For a rotationally symmetric ball the Green's function with pole ``p`` is
radial and solves ``A(r) G'(r) = -1``, so

    G(r) = int_r^R dt / (n omega_n f(t)^(n-1)).

It is computed as the Euclidean Green's function of the radius-R ball plus a
correction that is bounded for n <= 3, which keeps the pole singularity exact.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate

from .geometry import ModelBall, sphere_area, unit_ball_volume, unit_sphere_area
from .reports import DeficitReport, summarize

QUAD_TOL = 1e-13


class QuadratureWarning(RuntimeWarning):
    pass


def euclidean_green(n: int, d):
    """Green's function of the flat unit ball with pole at the center.

    ``(d^(2-n) - 1) / (n (n-2) omega_n)`` for ``n >= 3`` and ``-ln d / (2 pi)``
    for ``n = 2``.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or np.any(d > 1):
        raise ValueError("euclidean_green needs 0 < d <= 1")
    out = _flat_green(n, d, 1.0)
    return float(out) if out.ndim == 0 else out


def _flat_green(n: int, r, R: float):
    r = np.asarray(r, dtype=float)
    if n == 2:
        return np.log(R / r) / (2 * np.pi)
    return (r ** (2 - n) - R ** (2 - n)) / (n * (n - 2) * unit_ball_volume(n))


@dataclass(frozen=True)
class RadialGreen:
    ball: ModelBall
    values: np.ndarray = field(repr=False)
    correction: np.ndarray = field(repr=False)
    quad_error: float = 0.0
    _spline: Callable = field(repr=False, default=None)

    @property
    def normalization(self) -> float:
        """``1 / (n omega_n)``: the flux constant fixing ``A |G'| = 1``."""
        return 1 / unit_sphere_area(self.ball.n)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = _flat_green(self.ball.n, r, self.ball.R) + self._spline(r)
        return float(out) if out.ndim == 0 else out

    def derivative(self, r):
        """Exact ``G'(r) = -1 / (n omega_n f(r)^(n-1))``."""
        r = np.asarray(r, dtype=float)
        out = -self.normalization / self.ball.profile.f(r) ** (self.ball.n - 1)
        return float(out) if out.ndim == 0 else out

    def flux(self) -> np.ndarray:
        """``A(r) |G'(r)|`` at every grid node away from the pole."""
        r = self.ball.r[1:]
        return self.ball.area[1:] * np.abs(self.derivative(r))


def radial_green(ball: ModelBall) -> RadialGreen:
    """Green's function ``G(p, .)`` of the ball, tabulated on its grid.

    The correction ``int_r^R (f^(1-n) - t^(1-n)) dt / (n omega_n)`` is
    integrated cell by cell with adaptive quadrature; the largest reported
    quadrature error is kept as ``quad_error``.
    """
    if ball.closed:
        raise ValueError("a closed model has no Dirichlet boundary")
    n, r = ball.n, ball.r
    c = 1 / unit_sphere_area(n)
    prof = ball.profile

    def g(t):
        return c * (float(prof.f(t)) ** (1 - n) - t ** (1 - n))

    cells = np.zeros(r.size - 1)
    worst = 0.0
    with warnings.catch_warnings():
        # nonconvergence shows up in the returned error estimate, reported below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for i in range(1, r.size - 1):
            cells[i], err = integrate.quad(g, r[i], r[i + 1], epsabs=1e-15, epsrel=QUAD_TOL, limit=200)
            worst = max(worst, err)
    if n <= 3:
        # f^(1-n) - t^(1-n) cancels catastrophically as t -> 0, so the pole
        # cell uses fixed Gauss nodes (the smallest sits well away from t = 0)
        x, w = np.polynomial.legendre.leggauss(20)
        t = r[1] * (x + 1) / 2
        cells[0] = r[1] / 2 * sum(wi * g(ti) for wi, ti in zip(w, t))
    else:
        cells[0] = np.nan  # the correction diverges at the pole for n >= 4
    if worst > 1e-10:
        warnings.warn(f"Green correction quadrature reached only {worst:.3g}", QuadratureWarning)
    corr = np.concatenate((np.cumsum(cells[::-1])[::-1], [0.0]))
    values = np.empty_like(r)
    values[0] = np.inf
    values[1:] = _flat_green(n, r[1:], ball.R) + corr[1:]
    values[-1] = 0.0
    lo = 0 if np.isfinite(corr[0]) else 1
    spline = interpolate.CubicSpline(r[lo:], corr[lo:])
    values.setflags(write=False)
    return RadialGreen(ball, values, corr, worst, spline)


@dataclass(frozen=True)
class TestFunction:
    """Radial test function with ``psi(R) = 0`` and its first two derivatives."""

    name: str
    psi: Callable
    dpsi: Callable
    d2psi: Callable


def default_test_functions(R: float) -> tuple[TestFunction, ...]:
    k = np.pi / (2 * R)
    return (
        TestFunction("R^2-r^2", lambda r: R**2 - r**2, lambda r: -2 * r, lambda r: -2.0 + 0 * r),
        TestFunction("cos(pi r/2R)", lambda r: np.cos(k * r), lambda r: -k * np.sin(k * r),
                     lambda r: -k * k * np.cos(k * r)),
        TestFunction("(R^2-r^2)^2", lambda r: (R**2 - r**2) ** 2, lambda r: -4 * r * (R**2 - r**2),
                     lambda r: -4 * R**2 + 12 * r**2),
    )


def green_self_test(green: RadialGreen, tests: Sequence[TestFunction] | None = None) -> dict[str, float]:
    """Errors ``|int_B G Delta psi dV + psi(0)|`` for radial test functions."""
    ball = green.ball
    n, prof = ball.n, ball.profile
    c = unit_sphere_area(n)
    tests = default_test_functions(ball.R) if tests is None else tests
    out = {}
    for tf in tests:
        def integrand(t):
            if t == 0:
                return 0.0
            lap = tf.d2psi(t) + (n - 1) * float(prof.df(t) / prof.f(t)) * tf.dpsi(t)
            return float(green(t)) * float(lap) * c * float(prof.f(t)) ** (n - 1)

        val, _ = integrate.quad(integrand, 0.0, ball.R, epsabs=1e-13, epsrel=1e-12, limit=400,
                                points=[ball.R * 1e-3])
        out[tf.name] = abs(val + float(tf.psi(0.0)))
    return out


def green_comparison(ball: ModelBall, tol: float = 1e-8) -> DeficitReport:
    """Pointwise ``G - G_bar`` on the unit ball with its minimum and average of ``|G - G_bar|``.

    ``G >= G_bar`` holds under nonnegative Ricci curvature, with equality
    only on the flat ball.
    """
    if abs(ball.R - 1) > 1e-12:
        raise ValueError("green_comparison is stated on the unit ball (R = 1)")
    green = radial_green(ball)
    r = ball.r
    diff = np.empty_like(r)
    diff[1:] = green.values[1:] - euclidean_green(ball.n, r[1:])
    # G - G_bar tends to the correction at the pole (infinite for n >= 4);
    # the pole carries zero weight in the average either way
    diff[0] = green.correction[0] if np.isfinite(green.correction[0]) else diff[1]
    viol = int(np.count_nonzero(diff < -tol))
    mean_abs = ball.volume_average(np.abs(diff))
    entry = summarize("green_minus_flat", diff, r, mean_abs, viol, tol)
    flux_err = float(np.max(np.abs(green.flux() - 1)))
    return DeficitReport((entry,), {"tol": tol, "flux_error": flux_err, "quad_error": green.quad_error})


@dataclass(frozen=True)
class BFunctionGradient:
    sup_grad: float
    bound: float
    rigid: bool

    def to_dict(self) -> dict:
        return {"sup_grad": self.sup_grad, "bound": self.bound, "rigid": self.rigid}


def b_function(green: RadialGreen, r):
    """``b = (C G + 1)^(1/(2-n))`` with ``C = (n-2) n omega_n``.

    With this sign ``b`` is exactly the distance to the pole on the flat
    ball; the opposite sign would make ``C G + 1`` negative near the pole.
    """
    n = green.ball.n
    C = (n - 2) * unit_sphere_area(n)
    return (C * green(r) + 1) ** (1 / (2 - n))


def b_function_boundary_gradient(ball: ModelBall, tol: float = 1e-12) -> BFunctionGradient:
    """Boundary gradient of the b-function against its lower bound ``n omega_n / |dB|``.

    For a radial model the two coincide (both equal ``f(1)^(1-n)``); the
    rigidity flag is set when the gradient does not exceed 1.
    """
    n = ball.n
    if n < 3:
        raise ValueError("the b-function bound needs n >= 3 (it fails in dimension 2)")
    if abs(ball.R - 1) > 1e-12:
        raise ValueError("b-function bound is stated on the unit ball (R = 1)")
    green = radial_green(ball)
    C = (n - 2) * unit_sphere_area(n)
    G_R, dG_R = float(green.values[-1]), green.derivative(ball.R)
    # chain rule for b = (C G + 1)^(1/(2-n)) at the boundary, where G = 0
    db = (C * G_R + 1) ** ((n - 1) / (2 - n)) * C * dG_R / (2 - n)
    sup_grad = abs(db)
    bound = unit_sphere_area(n) / sphere_area(ball, ball.R)
    return BFunctionGradient(float(sup_grad), float(bound), bool(sup_grad <= 1 + tol))


def green_table(green: RadialGreen) -> list[tuple[float, float, float, float]]:
    """Rows ``(r, G, G_bar, G - G_bar)`` for nodes away from the pole (unit ball)."""
    r = green.ball.r[1:]
    gbar = _flat_green(green.ball.n, r, 1.0)
    return [(float(a), float(b), float(c), float(b - c)) for a, b, c in zip(r, green.values[1:], gbar)]
