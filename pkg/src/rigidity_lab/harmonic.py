"""Positive harmonic functions on 2-D model balls and the Cheng-Yau checks.

Harmonic functions are built by separation of variables,

    u(r, theta) = sum_k phi_k(r) (a_k cos k theta + b_k sin k theta),

where each radial profile solves

    phi'' + (f'/f) phi' - (k^2 / f^2) phi = 0,   phi(R) = 1,   phi ~ c r^k at 0.

The sharp two-dimensional bound ``|grad ln u| <= 2 / (1 - r^2)`` on the unit
ball, the differential inequality ``Delta v >= 2 e^v`` for
``v = ln |grad ln u|^2`` and the stability functional are then evaluated on
an (r, theta) lattice.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .geometry import ModelBall
from .reports import DeficitReport, summarize

K_MAX = 64
EPS_LOG = 1e-12
EPS_Q = 1e-10
EPS_POS = 1e-12
MODE_RESIDUAL_TOL = 1e-8
BOUNDARY_LATTICE = 4096

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class ModeSolveError(RuntimeError):
    pass


class PositivityError(ValueError):
    pass


@dataclass(frozen=True)
class RadialMode:
    """Radial profile ``phi_k`` sampled on the ball's grid.

    ``phi`` and ``dphi`` hold values and exact first derivatives at the grid
    nodes; calling the mode evaluates both anywhere in ``[0, R]`` from the
    integrator's dense output.
    """

    k: int
    r: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    residual: float
    f: object = field(repr=False, default=None)
    _dense: object = field(repr=False, default=None)
    _shift: float = 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.k == 0:
            return np.ones_like(r), np.zeros_like(r)
        r1 = self.r[1]
        phi = np.empty_like(r)
        dphi = np.empty_like(r)
        far = r >= r1
        if np.any(far):
            s, w = self._dense(np.log(r[far]))
            phi[far] = np.exp(s - self._shift)
            dphi[far] = w * phi[far] / self.f(r[far])
        near = ~far
        if np.any(near):
            # f phi'/phi = k on the regular branch, so phi = phi(r1) exp(-k int_r^r1 dt/f);
            # the smooth part 1/f - 1/t of the integrand is done by Gauss-Legendre
            rn = r[near]
            mid, half = (rn + r1) / 2, (r1 - rn) / 2
            t = mid[:, None] + half[:, None] * _GL_X[None, :]
            J = (1 / self.f(t) - 1 / t) @ _GL_W * half
            with np.errstate(divide="ignore"):
                log_ratio = np.log(rn / r1)
            phi[near] = self.phi[1] * np.exp(self.k * (log_ratio - J))
            with np.errstate(divide="ignore", invalid="ignore"):
                d = self.k * phi[near] / self.f(rn)
            zero = rn == 0
            d[zero] = self.phi[1] * np.exp(-J[zero]) / r1 if self.k == 1 else 0.0
            dphi[near] = d
        return phi, dphi


def solve_mode(ball: ModelBall, k: int, K_max: int = K_MAX, rtol: float = 1e-12) -> RadialMode:
    """Solve for the k-th radial harmonic profile on a 2-D ball.

    The ODE is integrated in ``x = ln r`` for ``s = ln phi`` and
    ``w = f phi'/phi``::

        ds/dx = (r/f) w,    dw/dx = (r/f) (k^2 - w^2)

    which removes the ``1/f`` singularity at the pole. The launch at the
    first grid node uses the regular (Frobenius) branch ``s = k ln r``,
    ``w = k``.
    """
    if ball.n != 2:
        raise ValueError("radial modes are built on 2-D balls only")
    if ball.closed:
        raise ValueError("harmonic functions need a ball with nonempty boundary")
    if k < 0:
        raise ValueError("mode index must be >= 0")
    r = ball.r
    if k == 0:
        return RadialMode(0, r, np.ones_like(r), np.zeros_like(r), 0.0, ball.profile.f)
    if k > K_max:
        raise ModeSolveError(f"mode k={k} exceeds K_max={K_max}; refusing to truncate silently")

    prof = ball.profile
    k2 = float(k * k)

    def rhs(x, y):
        rr = np.exp(x)
        q = rr / prof.f(rr)
        return np.array([q * y[1], q * (k2 - y[1] * y[1])])

    def jac(x, y):
        rr = np.exp(x)
        q = rr / prof.f(rr)
        return np.array([[0.0, q], [0.0, -2 * q * y[1]]])

    x0, x1 = math.log(r[1]), math.log(ball.R)
    y0 = [k * x0, float(k)]
    sol = integrate.solve_ivp(rhs, (x0, x1), y0, method="DOP853", rtol=rtol, atol=rtol, dense_output=True)
    if not sol.success:
        sol = integrate.solve_ivp(rhs, (x0, x1), y0, method="Radau", jac=jac, rtol=rtol, atol=rtol,
                                  dense_output=True)
    if not sol.success:
        raise ModeSolveError(f"mode k={k}: integrator failed ({sol.message})")
    dense = sol.sol
    shift = float(dense(x1)[0])

    s, w = dense(np.log(r[1:]))
    phi = np.zeros_like(r)
    dphi = np.zeros_like(r)
    phi[1:] = np.exp(s - shift)
    dphi[1:] = w * phi[1:] / ball.f[1:]
    dphi[0] = phi[1] / r[1] if k == 1 else 0.0

    residual = _mode_residual(k, r[1:], dense, shift, prof.f)
    if not residual <= MODE_RESIDUAL_TOL:
        raise ModeSolveError(f"mode k={k}: ODE residual {residual:.3g} above {MODE_RESIDUAL_TOL:g}")
    phi.setflags(write=False)
    dphi.setflags(write=False)
    return RadialMode(k, r, phi, dphi, residual, prof.f, dense, shift)


def _mode_residual(k, nodes, dense, shift, f) -> float:
    """Cellwise defect of the flux form ``(f phi')' = k^2 phi / f``.

    Uses the integrator's continuous extension, so it measures the actual
    solution rather than re-evaluating the right-hand side at nodes.
    """
    a, b = nodes[:-1], nodes[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    s, _ = dense(np.log(pts.ravel()))
    phi = np.exp(s - shift).reshape(pts.shape)
    integral = (k * k * phi / f(pts)) @ _GL_W * half
    s_n, w_n = dense(np.log(nodes))
    flux = w_n * np.exp(s_n - shift)
    scale = max(1.0, float(np.max(np.abs(flux))))
    return float(np.max(np.abs(np.diff(flux) - integral)) / scale)


def poisson_kernel_flat(r, theta, y_angle=0.0):
    """Poisson kernel of the flat unit disk, ``(1 - r^2) / (2 pi |x - y|^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r >= 1) or np.any(r < 0):
        raise ValueError("Poisson kernel needs 0 <= r < 1")
    out = (1 - r**2) / (2 * np.pi * (1 - 2 * r * np.cos(np.asarray(theta) - y_angle) + r**2))
    return float(out) if np.ndim(out) == 0 else out


def poisson_coefficients(y_angle: float = 0.0, K_max: int = K_MAX) -> list[tuple[int, float, float]]:
    """Fourier coefficients ``(k, a_k, b_k)`` of the Poisson kernel with pole at ``y_angle``."""
    rows = [(0, 1 / (2 * np.pi), 0.0)]
    rows += [(k, math.cos(k * y_angle) / np.pi, math.sin(k * y_angle) / np.pi) for k in range(1, K_max + 1)]
    return rows


@dataclass(frozen=True)
class FourierHarmonic:
    ball: ModelBall
    ks: tuple[int, ...]
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    modes: tuple[RadialMode, ...] = field(repr=False)
    lattice_r: np.ndarray = field(repr=False)
    lattice_theta: np.ndarray = field(repr=False)
    min_value: float = float("nan")

    @property
    def lattice_index(self) -> np.ndarray:
        return np.searchsorted(self.ball.r, self.lattice_r)

    def _angular(self, theta):
        k = np.asarray(self.ks, dtype=float)[:, None]
        th = np.atleast_1d(np.asarray(theta, dtype=float))[None, :]
        c, s = np.cos(k * th), np.sin(k * th)
        A, B = self.a[:, None], self.b[:, None]
        return A * c + B * s, k * (B * c - A * s)

    def on_product(self, r, theta):
        """``u, u_r, u_theta`` on the product grid ``r x theta`` (shape (len r, len theta))."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        phis = np.empty((len(self.modes), r.size))
        dphis = np.empty_like(phis)
        for i, m in enumerate(self.modes):
            phis[i], dphis[i] = m(r)
        ang, dang = self._angular(theta)
        return phis.T @ ang, dphis.T @ ang, phis.T @ dang

    def lattice_fields(self):
        idx = self.lattice_index
        phis = np.array([m.phi[idx] for m in self.modes])
        dphis = np.array([m.dphi[idx] for m in self.modes])
        ang, dang = self._angular(self.lattice_theta)
        return phis.T @ ang, dphis.T @ ang, phis.T @ dang

    def __call__(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        out = np.empty(r.shape)
        for idx in np.ndindex(r.shape):
            out[idx] = self.on_product(r[idx], theta[idx])[0][0, 0]
        return float(out) if out.ndim == 0 else out


def _coefficient_table(data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = sorted(((int(k), float(a), float(b)) for k, a, b in data), key=lambda t: t[0])
    ks = [k for k, _, _ in rows]
    if len(set(ks)) != len(ks) or (ks and ks[0] < 0):
        raise ValueError("boundary data needs distinct mode indices k >= 0")
    return np.array(ks, dtype=int), np.array([a for _, a, _ in rows]), np.array([b for _, _, b in rows])


def harmonic_from_boundary(
    ball: ModelBall,
    data: Iterable[Sequence[float]],
    K_max: int = K_MAX,
    lattice_fraction: float = 0.7,
    n_theta: int = 256,
    check_boundary: bool = True,
) -> FourierHarmonic:
    """Harmonic extension of truncated boundary Fourier data ``(k, a_k, b_k)``.

    Modes with ``k > K_max`` are dropped. The evaluation lattice is the grid
    nodes in ``(0, lattice_fraction * R]`` times ``n_theta`` equispaced angles
    from 0. ``check_boundary=False`` skips the boundary positivity pre-check,
    for data that are the coefficients of a measure (the Poisson kernel).
    """
    ks, a, b = _coefficient_table(data)
    keep = ks <= K_max
    ks, a, b = ks[keep], a[keep], b[keep]
    if ks.size == 0:
        raise ValueError("no boundary modes with k <= K_max")
    if check_boundary:
        th = np.linspace(0, 2 * np.pi, BOUNDARY_LATTICE, endpoint=False)
        bd = (a[:, None] * np.cos(ks[:, None] * th) + b[:, None] * np.sin(ks[:, None] * th)).sum(axis=0)
        if not bd.min() > 0:
            raise PositivityError(f"boundary data minimum {bd.min():.6g} is not positive")
    if not 0 < lattice_fraction < 1:
        raise ValueError("lattice_fraction must be in (0, 1)")
    modes = tuple(solve_mode(ball, int(k), K_max) for k in ks)
    r = ball.r
    lattice_r = r[(r > 0) & (r <= lattice_fraction * ball.R * (1 + 1e-12))]
    lattice_theta = 2 * np.pi * np.arange(n_theta) / n_theta
    u = FourierHarmonic(ball, tuple(int(k) for k in ks), a, b, modes, lattice_r, lattice_theta)
    vals = u.lattice_fields()[0]
    u_min = float(vals.min())
    if not u_min > EPS_POS:
        raise PositivityError(f"harmonic extension has lattice minimum {u_min:.6g} <= 0")
    return FourierHarmonic(ball, u.ks, a, b, modes, lattice_r, lattice_theta, u_min)


def poisson_harmonic(ball: ModelBall, y_angle: float = 0.0, K_max: int = K_MAX, **kw) -> FourierHarmonic:
    """Truncated Poisson kernel with pole at boundary angle ``y_angle``.

    On a curved ball this is the Poisson kernel for the conformally flat
    coordinate, i.e. the harmonic measure density with respect to ``dtheta``.
    """
    return harmonic_from_boundary(ball, poisson_coefficients(y_angle, K_max), K_max,
                                  check_boundary=False, **kw)


def read_boundary_csv(path) -> list[tuple[int, float, float]]:
    """Read ``k,a_k,b_k`` rows (an optional header line is skipped)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
            except ValueError:
                if rows:
                    raise
    return rows


def write_boundary_csv(path, data) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "a", "b"])
        for k, a, b in data:
            w.writerow([int(k), repr(float(a)), repr(float(b))])


def _grad_log_sq(u: FourierHarmonic, r, val, ur, ut):
    f = u.ball.profile.f(np.asarray(r))[:, None]
    return (ur**2 + ut**2 / f**2) / val**2


def log_gradient(u: FourierHarmonic, r: float, theta: float) -> float:
    """``|grad ln u|`` at one point: ``sqrt(u_r^2 + u_theta^2 / f^2) / u``."""
    if not 0 < r <= u.ball.R:
        raise ValueError("log_gradient needs 0 < r <= R")
    val, ur, ut = u.on_product(r, theta)
    if not val[0, 0] > EPS_POS:
        raise PositivityError(f"u = {val[0, 0]:.3g} is not positive at (r={r}, theta={theta})")
    return float(np.sqrt(_grad_log_sq(u, [r], val, ur, ut))[0, 0])


def _lattice_average(u: FourierHarmonic, values: np.ndarray) -> float:
    """Area average over the lattice disk: Simpson in r (from the pole), mean in theta."""
    rr = np.concatenate(([0.0], u.lattice_r))
    w = u.ball.profile.f(rr)
    ang = np.concatenate(([0.0], np.nanmean(values, axis=1)))
    return float(integrate.simpson(ang * w, x=rr) / integrate.simpson(w, x=rr))


def _locations(u: FourierHarmonic):
    R, T = np.meshgrid(u.lattice_r, u.lattice_theta, indexing="ij")
    return [(float(a), float(b)) for a, b in zip(R.ravel(), T.ravel())]


def cheng_yau_deficit(u: FourierHarmonic, tol_fd: float = 1e-6) -> DeficitReport:
    """Lattice sup of ``(1 - r^2) |grad ln u| / 2`` on the ball rescaled to radius 1.

    The quotient is at most 1 for every positive harmonic function on a
    surface with nonnegative curvature; it equals 1 only for the Poisson
    kernel of the flat disk, along the radius towards its pole.
    """
    R = u.ball.R
    val, ur, ut = u.lattice_fields()
    grad = np.sqrt(_grad_log_sq(u, u.lattice_r, val, ur, ut))
    rs = (u.lattice_r / R)[:, None]
    q = (1 - rs**2) * R * grad / 2
    viol = int(np.count_nonzero(q > 1 + tol_fd))
    locs = _locations(u)
    quotient = summarize("cheng_yau_quotient", q, locs, _lattice_average(u, q), viol, tol_fd)
    slack = summarize("cheng_yau_slack", 1 - q, locs, _lattice_average(u, 1 - q), viol, tol_fd)
    return DeficitReport((quotient, slack), {"tol_fd": tol_fd, "lattice_radius": float(u.lattice_r[-1])})


@dataclass(frozen=True)
class StabilityFunctional:
    value: float
    excluded_fraction: float
    reliable: bool
    radius: float

    def to_dict(self) -> dict:
        return {"value": self.value, "excluded_fraction": self.excluded_fraction,
                "reliable": self.reliable, "radius": self.radius}


def cheng_yau_stability_functional(u: FourierHarmonic, eps_log: float = EPS_LOG) -> StabilityFunctional:
    """Average of ``4/(1-r^2)^2 - |grad ln u|^2 + ln(2 / ((1-r^2) |grad ln u|))``.

    The integrand is not integrable up to the unit circle (the first term
    grows like ``(1-r)^-2``), so the average is taken over the lattice disk
    of radius ``lattice_fraction``. Lattice points with ``|grad ln u| <=
    eps_log`` are excluded; more than 1% excluded marks the value unreliable.
    """
    R = u.ball.R
    val, ur, ut = u.lattice_fields()
    g = R * np.sqrt(_grad_log_sq(u, u.lattice_r, val, ur, ut))
    rs = (u.lattice_r / R)[:, None]
    keep = g > eps_log
    frac = 1 - float(np.count_nonzero(keep)) / keep.size
    if not keep.any():
        return StabilityFunctional(float("nan"), 1.0, False, float(u.lattice_r[-1] / R))
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = 4 / (1 - rs**2) ** 2 - g**2 + np.log(2 / ((1 - rs**2) * g))
    integrand = np.where(keep, integrand, np.nan)
    return StabilityFunctional(_lattice_average(u, integrand), frac, frac <= 0.01, float(u.lattice_r[-1] / R))


def _v_residual_at(u: FourierHarmonic, r, h, ht, eps_q):
    """``R^2 (Delta v - 2 e^v)`` by the metric-weighted 5-point stencil."""
    th = u.lattice_theta
    f = u.ball.profile.f(r)[:, None]
    df = u.ball.profile.df(r)[:, None]

    def v_at(rr, tt):
        val, ur, ut = u.on_product(rr, tt)
        Q = _grad_log_sq(u, rr, val, ur, ut)
        with np.errstate(divide="ignore"):
            return np.log(Q), Q

    v0, Q0 = v_at(r, th)
    vp, _ = v_at(r + h, th)
    vm, _ = v_at(r - h, th)
    vtp, _ = v_at(r, th + ht)
    vtm, _ = v_at(r, th - ht)
    lap = (vp - 2 * v0 + vm) / h**2 + (df / f) * (vp - vm) / (2 * h) + (vtp - 2 * v0 + vtm) / (ht**2 * f**2)
    res = u.ball.R**2 * (lap - 2 * Q0)
    return np.where(Q0 > eps_q, res, np.nan)


def v_inequality_residual(
    u: FourierHarmonic, step: float | None = None, eps_q: float = EPS_Q, r_min: float | None = None
) -> DeficitReport:
    """Check ``Delta v >= 2 e^v`` for ``v = ln |grad ln u|^2`` on the lattice.

    The stencil is applied with radial step ``step`` (angle ``step / R``) and
    again with both halved. The reported residual is the finer one;
    ``tol_fd`` is twice the Richardson estimate of its stencil error,
    ``|res_h - res_{h/2}| / 3``. Lattice points whose stencil leaves the ball
    or where ``Q <= eps_q``, are skipped, as are points closer to the pole
    than ``r_min`` (default ``R/8``): the angular term carries an
    ``h^2 / r`` error there, so a fixed exclusion keeps refinement honest.
    """
    R = u.ball.R
    h = R / 64 if step is None else float(step)
    r_min = R / 8 if r_min is None else float(r_min)
    r = u.lattice_r[(u.lattice_r >= max(r_min, 2 * h)) & (u.lattice_r + h < R)]
    if r.size == 0:
        raise ValueError("stencil step too large for the lattice")
    coarse = _v_residual_at(u, r, h, h / R, eps_q)
    fine = _v_residual_at(u, r, h / 2, h / (2 * R), eps_q)
    finite = np.isfinite(fine) & np.isfinite(coarse)
    locs = [(float(a), float(b)) for a in r for b in u.lattice_theta]
    if not finite.any():
        e = summarize("v_inequality", np.array([]), [], float("nan"), 0, 0.0)
        return DeficitReport((e,), {"tol_fd": 0.0, "step": h, "points": 0})
    tol_fd = 2 * float(np.max(np.abs(coarse - fine)[finite])) / 3
    worst = lambda x: float(max(0.0, -np.nanmin(np.where(finite, x, np.nan))))
    viol = int(np.count_nonzero(fine[finite] < -tol_fd))
    sub = np.where(finite, fine, np.nan)
    mean = float(np.nanmean(sub))
    entry = summarize("v_inequality", sub, locs, mean, viol, tol_fd)
    return DeficitReport((entry,), {
        "tol_fd": tol_fd,
        "step": h,
        "points": int(np.count_nonzero(finite)),
        "worst_violation_coarse": worst(coarse),
        "worst_violation_fine": worst(fine),
    })
