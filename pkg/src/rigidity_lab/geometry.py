"""Rotationally symmetric model geometries and their comparison deficits.

A model is ``dr^2 + f(r)^2 g_sphere`` on a ball of radius ``R`` about the
pole. Everything downstream (harmonic functions, Green's functions, heat
flow) only ever needs ``f``, ``f'``, ``f''`` and the radial grid, so this
module owns those and the deficits measuring how far a model is from flat
space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, interpolate

from .reports import DeficitReport, summarize

TOL_CURV = 1e-10
TOL_ORIGIN = 1e-8
PROFILE_KINDS = ("euclidean", "sphere", "smoothed-cone", "custom")


class ProfileError(ValueError):
    """A warping profile (or ball) violates an admissibility invariant."""

    def __init__(self, message: str, node: float | None = None):
        super().__init__(message if node is None else f"{message} (at r={node:.12g})")
        self.node = node


def unit_ball_volume(n: int) -> float:
    """Volume ``omega_n`` of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """Area ``n * omega_n`` of the unit sphere S^{n-1}."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class WarpingProfile:
    kind: str
    f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    df: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d2f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    domain_max: float = math.inf
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def closes_at_max(self) -> bool:
        # spheres close up: f vanishes at the antipodal point
        return math.isfinite(self.domain_max) and abs(float(self.f(self.domain_max))) < 1e-12


def _euclidean() -> WarpingProfile:
    return WarpingProfile(
        "euclidean",
        f=lambda r: np.asarray(r, dtype=float) * 1.0,
        df=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        d2f=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
    )


def _sphere(kappa: float) -> WarpingProfile:
    if not kappa > 0:
        raise ProfileError("kappa must be > 0")
    s = math.sqrt(kappa)
    return WarpingProfile(
        "sphere",
        f=lambda r: np.sin(s * np.asarray(r, dtype=float)) / s,
        df=lambda r: np.cos(s * np.asarray(r, dtype=float)),
        d2f=lambda r: -s * np.sin(s * np.asarray(r, dtype=float)),
        domain_max=math.pi / s,
        params={"kappa": float(kappa)},
    )


def _smoothed_cone(alpha: float, width: float = 1.0) -> WarpingProfile:
    # f = alpha r + (1 - alpha) w tanh(r / w): slope 1 at the pole, alpha at infinity
    if not 0 < alpha <= 1:
        raise ProfileError("alpha must be in (0, 1]")
    if not width > 0:
        raise ProfileError("width must be > 0")
    a, w = float(alpha), float(width)

    def f(r):
        r = np.asarray(r, dtype=float)
        return a * r + (1 - a) * w * np.tanh(r / w)

    def df(r):
        r = np.asarray(r, dtype=float)
        return a + (1 - a) / np.cosh(r / w) ** 2

    def d2f(r):
        r = np.asarray(r, dtype=float)
        return -2 * (1 - a) / w * np.tanh(r / w) / np.cosh(r / w) ** 2

    return WarpingProfile("smoothed-cone", f, df, d2f, params={"alpha": a, "width": w})


def _custom(r, f, fp=None, fpp=None) -> WarpingProfile:
    r = np.asarray(r, dtype=float)
    fv = np.asarray(f, dtype=float)
    if r.ndim != 1 or r.size < 4 or r.shape != fv.shape:
        raise ProfileError("custom profile needs matching 1-D arrays r, f with >= 4 samples")
    if not np.all(np.diff(r) > 0):
        raise ProfileError("custom profile nodes must be strictly increasing")
    if abs(r[0]) > 0:
        raise ProfileError("custom profile samples must start at r=0", node=float(r[0]))
    if abs(fv[0]) > TOL_ORIGIN:
        raise ProfileError("f(0) must be 0", node=0.0)
    if fp is not None:
        fp = np.asarray(fp, dtype=float)
        if abs(fp[0] - 1) > TOL_ORIGIN:
            raise ProfileError("f'(0) must be 1", node=0.0)
        spline = interpolate.CubicHermiteSpline(r, fv, fp)
    else:
        spline = interpolate.CubicSpline(r, fv, bc_type=((1, 1.0), "not-a-knot"))
    if fpp is not None:
        fpp = np.asarray(fpp, dtype=float)
        bad = np.nonzero(fpp > TOL_CURV)[0]
        if bad.size:
            raise ProfileError("f'' must be <= 0 (nonnegative curvature)", node=float(r[bad[0]]))
        second = interpolate.interp1d(r, fpp, assume_sorted=True)
    else:
        second = spline.derivative(2)
    d1 = spline.derivative(1)
    return WarpingProfile(
        "custom",
        f=lambda x: spline(np.asarray(x, dtype=float)),
        df=lambda x: d1(np.asarray(x, dtype=float)),
        d2f=lambda x: second(np.asarray(x, dtype=float)),
        domain_max=float(r[-1]),
        params={"samples": int(r.size)},
    )


def _check_profile(p: WarpingProfile, nodes: np.ndarray, tol_curv: float) -> None:
    if abs(float(p.f(0.0))) > TOL_ORIGIN:
        raise ProfileError("f(0) must be 0", node=0.0)
    if abs(float(p.df(0.0)) - 1) > TOL_ORIGIN:
        raise ProfileError("f'(0) must be 1", node=0.0)
    inner = nodes[nodes > 0]
    if p.closes_at_max:
        inner = inner[inner < p.domain_max]
    fv = p.f(inner)
    bad = np.nonzero(~(fv > 0))[0]
    if bad.size:
        raise ProfileError("f must be positive away from the pole", node=float(inner[bad[0]]))
    curv = p.d2f(nodes)
    bad = np.nonzero(curv > tol_curv)[0]
    if bad.size:
        raise ProfileError("f'' must be <= 0 (nonnegative curvature)", node=float(nodes[bad[0]]))


def make_profile(descriptor: Mapping | str, tol_curv: float = TOL_CURV, **params) -> WarpingProfile:
    """Build and validate a warping profile.

    ``descriptor`` is either a kind name (with parameters as keywords) or a
    mapping such as ``{"kind": "sphere", "kappa": 1.0}``. Custom profiles take
    sampled arrays ``r``, ``f`` and optionally ``fp``/``fpp``.

    >>> float(make_profile("sphere", kappa=1.0).f(0.5))  # doctest: +ELLIPSIS
    0.479425538...
    """
    if isinstance(descriptor, str):
        desc = {"kind": descriptor, **params}
    else:
        desc = {**descriptor, **params}
    kind = desc.get("kind")
    if kind == "euclidean":
        p = _euclidean()
    elif kind == "sphere":
        p = _sphere(float(desc.get("kappa", 1.0)))
    elif kind in ("smoothed-cone", "cone"):
        p = _smoothed_cone(float(desc.get("alpha", 1.0)), float(desc.get("width", 1.0)))
    elif kind == "custom":
        p = _custom(desc["r"], desc["f"], desc.get("fp"), desc.get("fpp"))
    else:
        raise ProfileError(f"unknown profile kind {kind!r}; expected one of {', '.join(PROFILE_KINDS)}")

    top = p.domain_max if math.isfinite(p.domain_max) else 50.0
    nodes = np.linspace(0.0, top, 4097)
    if kind == "custom":
        nodes = np.union1d(nodes, np.asarray(desc["r"], dtype=float))
    _check_profile(p, nodes, tol_curv)
    return p


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    policy: str = "uniform"

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @classmethod
    def build(cls, R: float, m: int = 1024, policy: str = "uniform", h_max: float | None = None):
        if m < 4 or m % 2:
            raise ValueError("grid needs an even number of intervals >= 4 (Simpson)")
        i = np.arange(m + 1)
        if policy == "uniform":
            nodes = R * i / m
        elif policy == "graded":
            # cosine clustering refines near both the pole and the rim
            nodes = R * (1 - np.cos(np.pi * i / m)) / 2
        else:
            raise ValueError(f"unknown grid policy {policy!r}")
        nodes[-1] = R
        h_max = R / 256 if h_max is None else h_max
        if nodes[1] > h_max * (1 + 1e-12):
            raise ValueError(f"first node {nodes[1]:.3g} exceeds resolution bound {h_max:.3g}")
        return cls(nodes, policy)

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def m(self) -> int:
        return self.nodes.size - 1

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.nodes)))


@dataclass(frozen=True)
class ModelBall:
    """Geodesic ball ``B_R(p)`` in the n-dimensional warped model."""

    profile: WarpingProfile
    n: int
    R: float
    grid: RadialGrid
    tol_curv: float = TOL_CURV

    def __post_init__(self):
        if self.n < 2:
            raise ProfileError("dimension n must be >= 2")
        if not 0 < self.R <= self.profile.domain_max:
            raise ProfileError(f"R must lie in (0, {self.profile.domain_max:.12g}]")
        if abs(self.grid.R - self.R) > 1e-12 * max(1.0, self.R):
            raise ValueError("grid does not end at R")
        r = self.r[1:]
        fv = self.f[1:]
        if self.closed:
            fv = fv[:-1]
            r = r[:-1]
        bad = np.nonzero(~(fv > 0))[0]
        if bad.size:
            raise ProfileError("f must be positive on (0, R]", node=float(r[bad[0]]))
        if self.n >= 3:
            ric = curvature_report(self)
            for e in ric:
                if e.min < -self.tol_curv:
                    raise ProfileError(f"{e.id} curvature negative", node=float(e.min_at))

    @property
    def closed(self) -> bool:
        """True when the ball is the whole closed model (sphere, R = pi/sqrt(kappa))."""
        return self.profile.closes_at_max and abs(self.R - self.profile.domain_max) < 1e-12

    @cached_property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def f(self) -> np.ndarray:
        return np.asarray(self.profile.f(self.r), dtype=float)

    @cached_property
    def df(self) -> np.ndarray:
        return np.asarray(self.profile.df(self.r), dtype=float)

    @cached_property
    def d2f(self) -> np.ndarray:
        return np.asarray(self.profile.d2f(self.r), dtype=float)

    @cached_property
    def area(self) -> np.ndarray:
        """Area ``A(r) = n omega_n f(r)^(n-1)`` of the geodesic sphere at each node."""
        return unit_sphere_area(self.n) * self.f ** (self.n - 1)

    @cached_property
    def r_df_over_f(self) -> np.ndarray:
        """``r f'/f`` with its removable singularity at the pole set to 1."""
        out = np.ones_like(self.r)
        pos = self.r > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[pos] = self.r[pos] * self.df[pos] / self.f[pos]
        if self.closed:
            out[-1] = -np.inf
        return out

    def volume_average(self, values: np.ndarray) -> float:
        """Composite-Simpson average of a radial quantity over the ball."""
        w = self.area
        return float(integrate.simpson(np.asarray(values) * w, x=self.r) / integrate.simpson(w, x=self.r))


def model_ball(
    profile: WarpingProfile | Mapping | str,
    n: int = 2,
    R: float = 1.0,
    m: int = 1024,
    policy: str = "uniform",
    h_max: float | None = None,
    **params,
) -> ModelBall:
    if not isinstance(profile, WarpingProfile):
        profile = make_profile(profile, **params)
    return ModelBall(profile, int(n), float(R), RadialGrid.build(float(R), m, policy, h_max))


def curvature_report(ball: ModelBall) -> DeficitReport:
    """Minimum radial and tangential Ricci curvature over the grid (pole excluded)."""
    n = ball.n
    sl = slice(1, -1) if ball.closed else slice(1, None)
    r, f, df, d2f = ball.r[sl], ball.f[sl], ball.df[sl], ball.d2f[sl]
    radial = -(n - 1) * d2f / f
    tangential = -d2f / f + (n - 2) * (1 - df**2) / f**2
    entries = []
    for name, vals in (("ricci_radial", radial), ("ricci_tangential", tangential)):
        mean = float(np.mean(vals))
        viol = int(np.count_nonzero(vals < -ball.tol_curv))
        entries.append(summarize(name, vals, r, mean, viol, ball.tol_curv))
    return DeficitReport(tuple(entries), {"tol_curv": ball.tol_curv})


def laplacian_distance(ball: ModelBall, r):
    """Laplacian of the distance to the pole, ``(n-1) f'(r)/f(r)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > ball.R * (1 + 1e-12)):
        raise ValueError("laplacian_distance needs 0 < r <= R (the pole is singular)")
    out = (ball.n - 1) * ball.profile.df(r) / ball.profile.f(r)
    return float(out) if out.ndim == 0 else out


def _usable(ball: ModelBall) -> slice:
    return slice(0, -1) if ball.closed else slice(0, None)


def distance_laplacian_deficit(ball: ModelBall, tol: float = 1e-12) -> DeficitReport:
    """Laplacian comparison slack ``(n-1)/r - Delta r`` (nonnegative when Rc >= 0)."""
    n = ball.n
    sl = _usable(ball)
    r, f, df = ball.r[sl], ball.f[sl], ball.df[sl]
    vals = np.empty_like(r)
    vals[0] = -(n - 1) * float(ball.profile.d2f(0.0)) / 2  # series limit at the pole
    vals[1:] = (n - 1) * (1 / r[1:] - df[1:] / f[1:])
    scale = np.maximum(1.0, (n - 1) / np.where(r > 0, r, 1.0))
    viol = int(np.count_nonzero(vals < -tol * scale))
    mean = _average(ball, vals, sl)
    return DeficitReport((summarize("laplacian_distance", vals, r, mean, viol, tol),), {"tol": tol})


def _average(ball: ModelBall, vals: np.ndarray, sl: slice) -> float:
    if sl == slice(0, None):
        return ball.volume_average(vals)
    full = np.zeros_like(ball.r)
    full[sl] = vals
    return ball.volume_average(full)


def hessian_r2_deficit(ball: ModelBall, tol: float = 1e-12) -> DeficitReport:
    """Pointwise ``|Hess(r^2) - 2g| = 2 sqrt(n-1) |r f'/f - 1|`` and its average."""
    sl = _usable(ball)
    x = ball.r_df_over_f[sl]
    vals = 2 * math.sqrt(ball.n - 1) * np.abs(x - 1)
    viol = int(np.count_nonzero(x - 1 > tol))
    mean = _average(ball, vals, sl)
    return DeficitReport((summarize("hessian_r2", vals, ball.r[sl], mean, viol, tol),), {"tol": tol})


def laplacian_r2_deficit(ball: ModelBall, tol: float = 1e-12) -> DeficitReport:
    """Pointwise ``2n - Delta(r^2) = 2(n-1)(1 - r f'/f)``, signed, and its average."""
    sl = _usable(ball)
    x = ball.r_df_over_f[sl]
    vals = 2 * (ball.n - 1) * (1 - x)
    viol = int(np.count_nonzero(vals < -tol))
    mean = _average(ball, vals, sl)
    return DeficitReport((summarize("laplacian_r2", vals, ball.r[sl], mean, viol, tol),), {"tol": tol})


def polar_distortion(ball: ModelBall) -> float:
    """Sup of ``|f(r)/r - 1|``: distortion of the polar map onto the flat ball.

    This is a bi-Lipschitz proxy for closeness to the flat ball, not a
    Gromov-Hausdorff distance.
    """
    return float(np.max(_distortion_values(ball)))


def _distortion_values(ball: ModelBall) -> np.ndarray:
    out = np.zeros_like(ball.r)
    pos = ball.r > 0
    out[pos] = np.abs(ball.f[pos] / ball.r[pos] - 1)
    return out


def comparison_deficits(ball: ModelBall, tol: float = 1e-12) -> DeficitReport:
    """All four flatness deficits in one report."""
    vals = _distortion_values(ball)
    distortion = summarize("polar_distortion", vals, ball.r, ball.volume_average(vals), 0, tol)
    entries = (
        distance_laplacian_deficit(ball, tol).entries
        + laplacian_r2_deficit(ball, tol).entries
        + hessian_r2_deficit(ball, tol).entries
        + (distortion,)
    )
    return DeficitReport(entries, {"tol": tol})


def sphere_area(ball: ModelBall, r: float) -> float:
    if not 0 <= r <= ball.R * (1 + 1e-12):
        raise ValueError("need 0 <= r <= R")
    return float(unit_sphere_area(ball.n) * ball.profile.f(r) ** (ball.n - 1))


def ball_volume(ball: ModelBall, r: float) -> float:
    """Volume of ``B_r(p)`` by adaptive quadrature of the sphere area."""
    if not 0 <= r <= ball.R * (1 + 1e-12):
        raise ValueError("need 0 <= r <= R")
    c = unit_sphere_area(ball.n)
    val, _ = integrate.quad(lambda t: c * float(ball.profile.f(t)) ** (ball.n - 1), 0.0, r,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return float(val)


def parse_descriptor(text: str) -> dict:
    """Parse line-oriented ``key=value`` text into a dict of typed values.

    Blank lines and ``#`` comments are ignored. Values that look numeric are
    converted (ints stay ints). Raises ``ValueError`` naming the line.
    """
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = _coerce(value)
    return out


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def ball_from_descriptor(desc: Mapping) -> ModelBall:
    """Build a ball from descriptor keys (kind, kappa/alpha/width, n, R, grid, policy)."""
    keys = {k: desc[k] for k in ("kind", "kappa", "alpha", "width", "r", "f", "fp", "fpp") if k in desc}
    profile = make_profile(keys)
    return model_ball(profile, int(desc.get("n", 2)), float(desc.get("R", 1.0)),
                      int(desc.get("grid", 1024)), str(desc.get("policy", "uniform")))
