"""Positive heat flows on model balls and the Li-Yau / Harnack checks.

The radial heat equation ``u_t = u_rr + (n-1)(f'/f) u_r`` is discretized by
finite volumes (fluxes through the geodesic spheres between nodes), which
gives an M-matrix and hence a discrete maximum principle. Time stepping is
BDF2 whenever its right-hand side ``(4 u^n - u^(n-1)) / 3`` is positive and
backward Euler otherwise, so positivity is guaranteed step by step. The
first step is backward Euler.

The Li-Yau quantity is ``(ln u)_t - |grad ln u|^2 + n/(2t)``, evaluated with
a clock ``t`` measured from the time the solution started (``t_origin``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import interpolate, linalg

from .geometry import ModelBall, model_ball, unit_sphere_area
from .reports import DeficitReport, summarize

BOUNDARIES = ("dirichlet", "neumann")
TOL_MASS = 1e-10


class HeatSolverError(RuntimeError):
    pass


def euclidean_heat_kernel(n: int, d, t):
    """``(4 pi t)^(-n/2) exp(-d^2 / (4t))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat kernel needs t > 0")
    d = np.asarray(d, dtype=float)
    out = (4 * np.pi * t) ** (-n / 2) * np.exp(-(d**2) / (4 * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EuclideanHeatKernel:
    """Heat kernel of R^n centered at the pole, with exact log-derivatives."""

    n: int
    scale: float = 1.0

    def __call__(self, d, t):
        return self.scale * euclidean_heat_kernel(self.n, d, t)

    def log_derivatives(self, d, t):
        """``((ln u)_t, |grad ln u|^2, Delta ln u)`` in closed form."""
        d, t = np.asarray(d, dtype=float), np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("heat kernel needs t > 0")
        lt = -self.n / (2 * t) + d**2 / (4 * t**2)
        grad2 = d**2 / (4 * t**2)
        lap = -self.n / (2 * t) + 0 * d
        return lt, grad2, lap


def _volumes_and_conductances(ball: ModelBall):
    r = ball.r
    c = unit_sphere_area(ball.n)
    A = lambda x: c * np.asarray(ball.profile.f(x), dtype=float) ** (ball.n - 1)
    faces = (r[:-1] + r[1:]) / 2
    cond = A(faces) / np.diff(r)
    lo = np.concatenate(([r[0]], faces))
    hi = np.concatenate((faces, [r[-1]]))
    x, w = np.polynomial.legendre.leggauss(6)
    pts = (lo + hi)[:, None] / 2 + (hi - lo)[:, None] / 2 * x[None, :]
    vol = (A(pts) @ w) * (hi - lo) / 2
    return vol, cond


@dataclass(frozen=True)
class HeatField:
    ball: ModelBall
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    boundary: str = "dirichlet"
    scheme: dict = field(default_factory=dict)
    t_origin: float = 0.0
    whole_space: bool = False
    volumes: np.ndarray = field(repr=False, default=None)

    @property
    def r(self) -> np.ndarray:
        return self.ball.r

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def complete_model(self) -> bool:
        """Closed model or emulated whole space: the hypotheses of Li-Yau hold."""
        return self.ball.closed or self.whole_space

    def clock(self, t):
        return np.asarray(t, dtype=float) - self.t_origin

    def mass(self) -> np.ndarray:
        return self.values @ self.volumes

    def log_derivatives(self):
        """``(ln u)_t, (ln u)_r^2, Delta ln u`` at interior time nodes, all radial nodes.

        Arrays have shape ``(T - 1, m + 1)``; entries whose stencil touches a
        zero Dirichlet value are NaN.
        """
        r = self.r
        h = np.diff(r)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("log-derivatives need a uniform radial grid")
        h = float(h[0])
        n = self.ball.n
        with np.errstate(divide="ignore", invalid="ignore"):
            L = np.log(self.values)
        lt = (L[2:] - L[:-2]) / (2 * self.dt)
        Lc = L[1:-1]
        lr = np.full_like(Lc, np.nan)
        lrr = np.full_like(Lc, np.nan)
        lr[:, 1:-1] = (Lc[:, 2:] - Lc[:, :-2]) / (2 * h)
        lrr[:, 1:-1] = (Lc[:, 2:] - 2 * Lc[:, 1:-1] + Lc[:, :-2]) / h**2
        ratio = np.zeros_like(r)
        ratio[1:-1] = self.ball.df[1:-1] / self.ball.f[1:-1]
        lap = lrr + (n - 1) * ratio[None, :] * lr
        # pole: radial symmetry, Delta = n d^2/dr^2
        lr[:, 0] = 0.0
        lap[:, 0] = n * 2 * (Lc[:, 1] - Lc[:, 0]) / h**2
        if self.boundary == "neumann":
            lr[:, -1] = 0.0
            edge = 2 * (Lc[:, -2] - Lc[:, -1]) / h**2
            lap[:, -1] = n * edge if self.ball.closed else edge
        if self.boundary == "dirichlet":
            for a in (lt, lr, lap):
                a[:, -2:] = np.nan
        return lt, lr**2, lap

    def li_yau(self) -> np.ndarray:
        """``(ln u)_t - |grad ln u|^2 + n/(2t)`` on interior time nodes."""
        lt, g2, _ = self.log_derivatives()
        tau = self.clock(self.times[1:-1])[:, None]
        return lt - g2 + self.ball.n / (2 * tau)

    def li_yau_G(self) -> np.ndarray:
        """``t Delta f - n/2`` with ``f = -ln u`` on interior time nodes."""
        _, _, lap = self.log_derivatives()
        tau = self.clock(self.times[1:-1])[:, None]
        return -tau * lap - self.ball.n / 2

    def node(self, r: float, t: float) -> tuple[int, int]:
        i = int(np.argmin(np.abs(self.r - r)))
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.r[i] - r) > 1e-9 * max(1.0, self.ball.R) or abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError("field quantities are evaluated at grid nodes only")
        return i, j

    def interpolant(self) -> Callable:
        """Bicubic interpolant of ``ln u`` (Dirichlet boundary node dropped)."""
        stop = -1 if self.boundary == "dirichlet" else None
        spl = interpolate.RectBivariateSpline(self.r[:stop], self.times, np.log(self.values[:, :stop]).T)
        return lambda r, t: float(np.exp(spl(r, t)[0, 0]))

    def csv_rows(self):
        for j, t in enumerate(self.times):
            for i, r in enumerate(self.r):
                yield float(r), float(t), float(self.values[j, i])


def whole_space_ball(n: int, t_end: float, m: int = 1024, radius_factor: float = 8.0) -> ModelBall:
    """Flat ball of radius ``radius_factor * sqrt(t_end)`` emulating R^n."""
    return model_ball("euclidean", n=n, R=radius_factor * math.sqrt(t_end), m=m)


def heat_solve_radial(
    ball: ModelBall,
    initial,
    t_start: float,
    t_end: float,
    steps: int,
    boundary: str = "dirichlet",
    t_origin: float | None = None,
    whole_space: bool | None = None,
) -> HeatField:
    """Evolve positive radial initial data from ``t_start`` to ``t_end``.

    ``initial`` is an :class:`EuclideanHeatKernel` (sampled at ``t_start``),
    a callable of ``r`` or an array on the grid. ``t_origin`` is when the
    solution began for the Li-Yau clock; it defaults to 0, which is exact
    for heat-kernel data. Closed models (the whole sphere) always use the
    no-flux condition.
    """
    if not t_start > 0:
        raise ValueError("t_start must be > 0 (the Li-Yau term n/(2t) needs t > 0)")
    if not t_end > t_start or steps < 2:
        raise ValueError("need t_end > t_start and at least 2 steps")
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    if ball.closed:
        boundary = "neumann"
    t_origin = 0.0 if t_origin is None else float(t_origin)
    if t_origin > t_start:
        raise ValueError("t_origin must not come after t_start")
    if whole_space is None:
        whole_space = (boundary == "neumann" and ball.profile.kind == "euclidean"
                       and ball.R >= 8 * math.sqrt(t_end) * (1 - 1e-12))

    r = ball.r
    if isinstance(initial, EuclideanHeatKernel):
        u0 = initial(r, t_start)
    elif callable(initial):
        u0 = np.asarray(initial(r), dtype=float)
    else:
        u0 = np.asarray(initial, dtype=float)
    if u0.shape != r.shape:
        raise ValueError("initial data must match the radial grid")
    u0 = u0.copy()
    if boundary == "dirichlet":
        u0[-1] = 0.0
    interior = slice(0, -1) if boundary == "dirichlet" else slice(0, None)
    if not np.all(u0[interior] > 0):
        raise ValueError("initial data must be positive in the interior")

    vol, cond = _volumes_and_conductances(ball)
    N = r.size if boundary == "neumann" else r.size - 1
    V = vol[:N]
    up = np.zeros(N)
    lo = np.zeros(N)
    up[: N - 1] = cond[: N - 1]
    lo[1:] = cond[: N - 1]
    if boundary == "dirichlet":
        up[N - 1] = cond[N - 1]  # coupling to the fixed zero boundary value
    diag_L = -(up + lo) / V

    def banded(gamma_dt):
        ab = np.zeros((3, N))
        ab[0, 1:] = -gamma_dt * up[: N - 1] / V[: N - 1]
        ab[1] = 1 - gamma_dt * diag_L
        ab[2, :-1] = -gamma_dt * lo[1:] / V[1:]
        return ab

    dt = (t_end - t_start) / steps
    ab_be, ab_bdf = banded(dt), banded(2 * dt / 3)

    def solve(ab, rhs, j):
        try:
            return linalg.solve_banded((1, 1), ab, rhs)
        except (linalg.LinAlgError, ValueError) as exc:
            raise HeatSolverError(f"tridiagonal solve failed at step {j}: {exc}") from exc

    times = t_start + dt * np.arange(steps + 1)
    U = np.zeros((steps + 1, r.size))
    U[0] = u0
    fallbacks = 0
    for j in range(1, steps + 1):
        prev = U[j - 1, :N]
        if j == 1:
            new = solve(ab_be, prev, j)
        else:
            rhs = (4 * prev - U[j - 2, :N]) / 3
            if np.all(rhs > 0):
                new = solve(ab_bdf, rhs, j)
            else:
                new = solve(ab_be, prev, j)
                fallbacks += 1
        if not np.all(new > 0):
            raise HeatSolverError(f"positivity lost at step {j}")
        U[j, :N] = new
    U.setflags(write=False)
    scheme = {"id": "fv-bdf2", "dt": dt, "h": ball.grid.h, "steps": steps, "be_fallbacks": fallbacks}
    field_ = HeatField(ball, times, U, boundary, scheme, t_origin, bool(whole_space), vol)
    if boundary == "dirichlet":
        M = field_.mass()
        if np.any(np.diff(M) > TOL_MASS * max(1.0, M[0])):
            raise HeatSolverError("discrete mass increased under Dirichlet boundary")
    return field_


def _kernel_or_field(source, r, t):
    if isinstance(source, EuclideanHeatKernel):
        return source.log_derivatives(r, t), source.n, t
    if isinstance(source, HeatField):
        i, j = source.node(r, t)
        if j == 0 or j == source.times.size - 1:
            raise ValueError("Li-Yau quantities need an interior time node (central differences)")
        lt, g2, lap = source.log_derivatives()
        vals = (lt[j - 1, i], g2[j - 1, i], lap[j - 1, i])
        return vals, source.ball.n, float(source.clock(source.times[j]))
    raise TypeError("expected an EuclideanHeatKernel or a HeatField")


def li_yau_quantity(source, r, t):
    """``(ln u)_t - |grad ln u|^2 + n/(2t)`` for a kernel (anywhere) or a field (at nodes)."""
    (lt, g2, _), n, tau = _kernel_or_field(source, r, t)
    out = lt - g2 + n / (2 * np.asarray(tau, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def li_yau_G_quantity(source, r, t):
    """``t Delta f - n/2`` with ``f = -ln u``; nonpositive exactly when Li-Yau holds."""
    (_, _, lap), n, tau = _kernel_or_field(source, r, t)
    out = -np.asarray(tau, dtype=float) * lap - n / 2
    return float(out) if np.ndim(out) == 0 else out


def default_window(field_: HeatField) -> tuple[float | None, float]:
    """Space-time window where the Li-Yau quantity is resolved.

    The first tenth of the run is skipped: the backward Euler start and the
    ``n/(2t)`` blow-up make early time derivatives first-order accurate only.
    Whole-space emulations are cut at a quarter of the truncation radius,
    beyond which ``u`` is too small to be resolved in relative terms.
    """
    t0, t1 = float(field_.times[0]), float(field_.times[-1])
    r_max = field_.ball.R / 4 if field_.whole_space else None
    return r_max, t0 + 0.1 * (t1 - t0)


def _window(field_: HeatField, r_max: float | None, t_min: float | None):
    d_r, d_t = default_window(field_)
    r_max = d_r if r_max is None else r_max
    t_min = d_t if t_min is None else t_min
    r_ok = np.ones(field_.r.size, bool) if r_max is None else field_.r <= r_max * (1 + 1e-12)
    t = field_.times[1:-1]
    t_ok = np.ones(t.size, bool) if t_min is None else t >= t_min * (1 - 1e-12)
    return t_ok[:, None] & r_ok[None, :]


def li_yau_report(
    field_: HeatField, tol_pde: float = 0.0, r_max: float | None = None, t_min: float | None = None
) -> DeficitReport:
    """Min of the Li-Yau quantity and max of ``t Delta f - n/2`` over a space-time window."""
    mask = _window(field_, r_max, t_min)
    q = np.where(mask, field_.li_yau(), np.nan)
    g = np.where(mask, field_.li_yau_G(), np.nan)
    ok = np.isfinite(q)
    T, Rr = np.meshgrid(field_.times[1:-1], field_.r, indexing="ij")
    locs = [(float(a), float(b)) for a, b in zip(Rr.ravel(), T.ravel())]
    lv = summarize("li_yau", q, locs, float(np.nanmean(q)), int(np.count_nonzero(q[ok] < -tol_pde)), tol_pde)
    gv = summarize("li_yau_G", g, locs, float(np.nanmean(g)), int(np.count_nonzero(g[ok] > tol_pde)), tol_pde)
    return DeficitReport((lv, gv), {"tol_pde": tol_pde, "dt": field_.dt, "h": field_.ball.grid.h})


def _coarse_samples(coarse: HeatField, fine: HeatField, q_coarse, q_fine):
    """Restrict ``q_fine`` (interior time nodes) to the coarse space-time nodes."""
    sr = (fine.r.size - 1) // (coarse.r.size - 1)
    st = (fine.times.size - 1) // (coarse.times.size - 1)
    if not (np.allclose(fine.r[::sr], coarse.r) and np.allclose(fine.times[::st], coarse.times)):
        raise ValueError("refinement levels must nest")
    # interior coarse time index j (1..Tc-1) sits at fine index j*st, i.e. row j*st-1
    rows = st * np.arange(1, coarse.times.size - 1) - 1
    return q_coarse, q_fine[rows][:, ::sr]


@dataclass(frozen=True)
class RefinementLevel:
    h: float
    dt: float
    min_li_yau: float
    max_G: float
    tol_pde: float

    def to_dict(self) -> dict:
        return {"h": self.h, "dt": self.dt, "min_li_yau": self.min_li_yau, "max_G": self.max_G,
                "tol_pde": self.tol_pde}


def li_yau_refinement(
    fields: list[HeatField], r_max: float | None = None, t_min: float | None = None, safety: float = 2.0
) -> list[RefinementLevel]:
    """Discretization tolerance for each level from successive (h, dt) halvings.

    ``tol_pde`` of a level is ``safety`` times the Richardson estimate
    ``(4/3) max |q_h - q_{h/2}|`` of its Li-Yau error over the window, so it
    behaves like ``C (h^2 + dt^2)``. The finest level gets no tolerance.
    """
    out = []
    for coarse, fine in zip(fields[:-1], fields[1:]):
        mask = _window(coarse, r_max, t_min)
        qc, qf = _coarse_samples(coarse, fine, coarse.li_yau(), fine.li_yau())
        err = np.abs(qc - qf)[mask]
        tol = safety * 4 / 3 * float(np.nanmax(err))
        q = np.where(mask, qc, np.nan)
        g = np.where(mask, coarse.li_yau_G(), np.nan)
        out.append(RefinementLevel(coarse.ball.grid.h, coarse.dt, float(np.nanmin(q)), float(np.nanmax(g)), tol))
    return out


@dataclass(frozen=True)
class HarnackResult:
    ratio: float
    distance: float
    caveats: tuple[str, ...] = ()

    @property
    def equality(self) -> bool:
        return abs(self.ratio - 1) <= 1e-10

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "distance": self.distance, "caveats": list(self.caveats)}


def harnack_ratio(u, r1: float, t1: float, r2: float, t2: float, antipodal: bool = False,
                  n: int | None = None) -> HarnackResult:
    """``u(x1,t1) / [u(x2,t2) (t2/t1)^(n/2) exp(d^2 / (4 (t2 - t1)))]``.

    Both points lie on one radial ray (``d = |r1 - r2|``) or on opposite rays
    (``d = r1 + r2``). Times are on the Li-Yau clock. The sharp Harnack
    inequality says the ratio is at most 1 on a complete manifold with
    nonnegative Ricci curvature, with equality for the Euclidean heat
    kernel along a straight segment ``x1 = p + (t1/t2)(x2 - p)``.
    """
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    d = r1 + r2 if antipodal else abs(r1 - r2)
    if antipodal and isinstance(u, HeatField) and u.ball.closed:
        d = min(d, 2 * u.ball.R - d)  # shorter way round through the antipode
    caveats: list[str] = []
    if isinstance(u, EuclideanHeatKernel):
        n = u.n
        u1, u2 = u(r1, t1), u(r2, t2)
    elif isinstance(u, HeatField):
        n = u.ball.n
        if not u.complete_model:
            caveats.append("domain-truncation")
        elif u.whole_space:
            caveats.append("truncated-whole-space")
        ev = u.interpolant()
        u1, u2 = ev(r1, t1 + u.t_origin), ev(r2, t2 + u.t_origin)
    elif callable(u):
        if n is None:
            raise ValueError("dimension n is required for a plain callable")
        u1, u2 = float(u(r1, t1)), float(u(r2, t2))
    else:
        raise TypeError("u must be a kernel, a HeatField or a callable u(r, t)")
    # compare in logs: both factors can be far outside floating range separately
    log_ratio = math.log(u1) - math.log(u2) - n / 2 * math.log(t2 / t1) - d * d / (4 * (t2 - t1))
    return HarnackResult(math.exp(log_ratio), float(d), tuple(caveats))
