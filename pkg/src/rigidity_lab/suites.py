"""Named verification suites, sweeps over a geometry parameter, and report files."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import green as green_mod
from . import harmonic, heat
from .config import FORMATS, ConfigError, SuiteConfig, parse_values
from .geometry import ProfileError, comparison_deficits, curvature_report, model_ball, polar_distortion
from .reports import fmt

SOLVER_ERRORS = (harmonic.ModeSolveError, heat.HeatSolverError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class Suite:
    id: str
    theorem: str
    invariants: tuple[str, ...]
    run: Callable


@dataclass
class Outcome:
    name: str
    verdict: str  # pass | fail | error | n/a
    hard: bool = True
    measured: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict, "hard": self.hard,
                "measured": fmt(dict(sorted(self.measured.items()))), "note": self.note}


@dataclass
class RunRecord:
    """Result of one suite run. ``wall_clock`` is kept out of emitted reports."""

    config: SuiteConfig
    theorem: str
    outcomes: list[Outcome]
    scalars: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    artifacts: list[str] = field(default_factory=list)

    @property
    def suite(self) -> str:
        return self.config.suite

    @property
    def config_hash(self) -> str:
        return self.config.hash

    @property
    def solver_error(self) -> bool:
        return any(o.verdict == "error" for o in self.outcomes)

    @property
    def passed(self) -> bool:
        return not self.solver_error and all(o.verdict != "fail" for o in self.outcomes if o.hard)

    @property
    def exit_code(self) -> int:
        return 3 if self.solver_error else (0 if self.passed else 1)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "theorem": self.theorem,
            "config_hash": self.config_hash,
            "config": fmt(self.config.canonical()),
            "passed": self.passed,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "scalars": fmt(dict(sorted(self.scalars.items()))),
            "reports": {k: v.to_dict() for k, v in sorted(self.reports.items())},
            "artifacts": list(self.artifacts),
        }


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _ball(cfg: SuiteConfig, default_grid: int = 1024, **over):
    g = {**cfg.geometry, **over}
    prof = {k: g[k] for k in ("kind", "kappa", "alpha", "width") if k in g}
    return model_ball(prof, int(g.get("n", 2)), float(g.get("R", 1.0)), int(g.get("grid", default_grid)),
                      str(g.get("policy", "uniform")))


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


# elliptic -------------------------------------------------------------------

def _boundary_data(cfg: SuiteConfig, K_max: int):
    data = cfg.params.get("data", "poisson")
    if data == "poisson":
        return harmonic.poisson_coefficients(cfg.params.get("y_angle", 0.0), K_max), False
    if data == "cosine":
        return [(0, 1.0, 0.0), (1, 0.3, 0.0)], True
    path = Path(data)
    if not path.is_absolute() and cfg.base_dir:
        path = Path(cfg.base_dir) / path
    try:
        return harmonic.read_boundary_csv(path), True
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read boundary data {data!r}: {exc}") from None


def run_cheng_yau(cfg: SuiteConfig, rec: RunRecord):
    _require(int(cfg.geometry.get("n", 2)) == 2, "cheng-yau is two-dimensional (n = 2)")
    K_max = int(cfg.params.get("K_max", harmonic.K_MAX))
    tol_fd = cfg.tolerances.get("tol_fd", 1e-6)
    ball = _ball(cfg)
    data, check = _boundary_data(cfg, K_max)
    try:
        u = harmonic.harmonic_from_boundary(ball, data, K_max, cfg.params.get("lattice_fraction", 0.7),
                                            int(cfg.params.get("n_theta", 256)), check_boundary=check)
    except harmonic.PositivityError as exc:
        raise ConfigError(f"boundary data rejected: {exc}") from None
    worst = max(m.residual for m in u.modes)
    yield Outcome("mode_residual", _verdict(worst <= harmonic.MODE_RESIDUAL_TOL),
                  measured={"max_residual": worst, "tol": harmonic.MODE_RESIDUAL_TOL})
    rep = harmonic.cheng_yau_deficit(u, tol_fd)
    rec.reports["cheng_yau"] = rep
    q = rep["cheng_yau_quotient"]
    yield Outcome("cheng_yau_bound", _verdict(q.violations == 0),
                  measured={"sup": q.sup, "tol_fd": tol_fd, "violations": q.violations})
    vrep = harmonic.v_inequality_residual(u)
    rec.reports["v_inequality"] = vrep
    v = vrep["v_inequality"]
    yield Outcome("v_inequality", _verdict(v.violations == 0),
                  measured={"min": v.min, "tol_fd": vrep.tolerances["tol_fd"], "violations": v.violations})
    sf = harmonic.cheng_yau_stability_functional(u)
    rec.scalars.update({
        "quotient_sup": q.sup, "quotient_sup_r": q.sup_at[0], "quotient_sup_theta": q.sup_at[1],
        "quotient_mean": q.mean, "stability_functional": sf.value,
        "stability_excluded_fraction": sf.excluded_fraction, "polar_distortion": polar_distortion(ball),
        "v_tol_fd": vrep.tolerances["tol_fd"], "u_min": u.min_value,
    })


def run_green(cfg: SuiteConfig, rec: RunRecord):
    _require(abs(float(cfg.geometry.get("R", 1.0)) - 1) < 1e-12, "green is stated on the unit ball (R = 1)")
    tol = cfg.tolerances.get("tol", 1e-8)
    ball = _ball(cfg)
    _require(not ball.closed, "a closed model has no Dirichlet boundary")
    g = green_mod.radial_green(ball)
    flux = float(np.max(np.abs(g.flux() - 1)))
    yield Outcome("flux_identity", _verdict(flux <= 1e-12), measured={"max_error": flux})
    rep = green_mod.green_comparison(ball, tol)
    rec.reports["green"] = rep
    e = rep["green_minus_flat"]
    yield Outcome("green_lower_bound", _verdict(e.violations == 0),
                  measured={"min": e.min, "tol": tol, "violations": e.violations})
    st = green_mod.green_self_test(g)
    yield Outcome("self_test", _verdict(max(st.values()) <= 1e-6), measured=st)
    yield Outcome("quadrature", _verdict(g.quad_error <= 1e-10), hard=False,
                  measured={"quad_error": g.quad_error})
    rec.tables["green-table"] = (("r", "G", "G_bar", "deficit"), green_mod.green_table(g))
    rec.scalars.update({"min_deficit": e.min, "mean_abs_deficit": e.mean,
                        "deficit_at_half": float(g(0.5)) - green_mod.euclidean_green(ball.n, 0.5),
                        "polar_distortion": polar_distortion(ball)})


def run_b_function(cfg: SuiteConfig, rec: RunRecord):
    _require(int(cfg.geometry.get("n", 2)) >= 3, "the b-function bound needs n >= 3")
    _require(abs(float(cfg.geometry.get("R", 1.0)) - 1) < 1e-12, "b-function is stated on the unit ball (R = 1)")
    tol = cfg.tolerances.get("tol", 1e-12)
    b = green_mod.b_function_boundary_gradient(_ball(cfg), tol)
    yield Outcome("gradient_lower_bound", _verdict(b.sup_grad >= b.bound * (1 - tol)),
                  measured={"sup_grad": b.sup_grad, "bound": b.bound})
    rec.scalars.update({"sup_grad": b.sup_grad, "bound": b.bound, "flat_within_tol": b.rigid,
                        "excess": b.sup_grad - 1})


def run_comparison(cfg: SuiteConfig, rec: RunRecord):
    ball = _ball(cfg)
    tol = cfg.tolerances.get("tol", 1e-12)
    curv = curvature_report(ball)
    rec.reports["curvature"] = curv
    tol_curv = cfg.tolerances.get("tol_curv", 1e-10)
    worst = min(e.min for e in curv)
    yield Outcome("ricci_nonnegative", _verdict(worst >= -tol_curv), measured={"min": worst, "tol": tol_curv})
    rep = comparison_deficits(ball, tol)
    rec.reports["comparison"] = rep
    for name in ("laplacian_distance", "laplacian_r2", "hessian_r2"):
        e = rep[name]
        yield Outcome(name, _verdict(e.violations == 0), measured={"min": e.min, "violations": e.violations})
    for e in rep:
        rec.scalars[f"{e.id}_mean"] = e.mean
        rec.scalars[f"{e.id}_sup"] = e.sup


# parabolic ------------------------------------------------------------------

def _heat_setup(cfg: SuiteConfig):
    p = cfg.params
    t0, t1 = float(p["t_start"]), float(p.get("t_end", 4 * p["t_start"]))
    _require(t1 > t0, "t_end must be > t_start")
    steps = int(p.get("steps", 40))
    _require(steps >= 2, "steps must be >= 2")
    mode = p.get("boundary", "dirichlet")
    n = int(cfg.geometry.get("n", 2))
    initial = p.get("initial", "heat-kernel")
    if initial == "heat-kernel":
        data = heat.EuclideanHeatKernel(n)
    elif initial == "bump":
        w = float(p.get("bump_width", 0.5))
        data = lambda r: 1 + np.exp(-(r**2) / w)
    else:
        data = np.ones_like
    origin = p.get("origin", "zero" if initial == "heat-kernel" else "start")
    t_origin = 0.0 if origin == "zero" else t0
    grid = int(cfg.geometry.get("grid", 256))

    def solve(level: int) -> heat.HeatField:
        m, st = grid * 2**level, steps * 2**level
        if mode == "whole-space":
            _require(cfg.geometry.get("kind", "euclidean") == "euclidean", "whole-space emulation is flat")
            ball = heat.whole_space_ball(n, t1, m)
            bc = "neumann"
        elif mode == "closed":
            ball = _ball(cfg, grid, grid=m, R=_domain_max(cfg))
            bc = "neumann"
        else:
            ball = _ball(cfg, grid, grid=m)
            bc = mode
        return heat.heat_solve_radial(ball, data, t0, t1, st, bc, t_origin=t_origin)

    return solve


def _domain_max(cfg):
    from .geometry import make_profile
    prof = make_profile({k: cfg.geometry[k] for k in ("kind", "kappa", "alpha", "width") if k in cfg.geometry})
    _require(prof.closes_at_max, "boundary=closed needs a profile that closes up (sphere)")
    return prof.domain_max


def _field_table(f: heat.HeatField):
    return (("r", "t", "u"), list(f.csv_rows()))


def run_li_yau(cfg: SuiteConfig, rec: RunRecord):
    solve = _heat_setup(cfg)
    levels = int(cfg.params.get("levels", 3))
    fields = [solve(level) for level in range(levels)]
    f0 = fields[0]
    yield Outcome("positivity", _verdict(all(bool(np.all(f.values[:, :-1] > 0)) for f in fields)),
                  measured={"min_u": min(float(f.values[:, :-1].min()) for f in fields)})
    if f0.boundary == "dirichlet":
        dm = max(float(np.max(np.diff(f.mass()))) for f in fields)
        yield Outcome("mass_nonincreasing", _verdict(dm <= heat.TOL_MASS * float(f0.mass()[0])),
                      measured={"max_increase": dm})
    else:
        yield Outcome("mass_nonincreasing", "n/a", hard=False, note="no-flux boundary conserves mass")
    lv = heat.li_yau_refinement(fields)
    tol = lv[0].tol_pde
    complete = f0.complete_model
    note = "" if complete else "domain-truncation: the estimate assumes a complete manifold"
    rep = heat.li_yau_report(f0, tol)
    rec.reports["li_yau"] = rep
    yield Outcome("li_yau_lower_bound", _verdict(lv[0].min_li_yau >= -tol), hard=complete,
                  measured={"min": lv[0].min_li_yau, "argmin": rep["li_yau"].min_at, "tol_pde": tol}, note=note)
    yield Outcome("li_yau_G_upper_bound", _verdict(lv[0].max_G <= tol), hard=complete,
                  measured={"max": lv[0].max_G, "argmax": rep["li_yau_G"].sup_at, "tol_pde": tol}, note=note)
    ratios = [a.tol_pde / b.tol_pde for a, b in zip(lv[:-1], lv[1:]) if b.tol_pde > 0]
    yield Outcome("tolerance_refinement", _verdict(all(2.5 <= x <= 6.5 for x in ratios)), hard=False,
                  measured={"ratios": ratios})
    rec.tables["heat-field"] = _field_table(f0)
    rec.scalars.update({"min_li_yau": lv[0].min_li_yau, "max_G": lv[0].max_G, "tol_pde": tol,
                        "dt": f0.dt, "h": f0.ball.grid.h, "be_fallbacks": f0.scheme["be_fallbacks"]})
    for i, x in enumerate(ratios):
        rec.scalars[f"tol_ratio_{i}"] = x


def run_harnack(cfg: SuiteConfig, rec: RunRecord):
    solve = _heat_setup(cfg)
    n = int(cfg.geometry.get("n", 2))
    eq = heat.harnack_ratio(heat.EuclideanHeatKernel(n), 0.5, 1.0, 1.0, 2.0)
    yield Outcome("harnack_equality_config", _verdict(abs(eq.ratio - 1) <= 1e-10),
                  measured={"ratio": eq.ratio, "distance": eq.distance})
    coarse, fine = solve(0), solve(1)
    r_max, t_min = heat.default_window(coarse)
    r_max = coarse.ball.R if r_max is None else r_max
    if coarse.boundary == "dirichlet":
        r_max = min(r_max, 0.75 * coarse.ball.R)
    rng = np.random.default_rng(int(cfg.params.get("seed", 0)))
    t_end = float(coarse.times[-1])
    worst = -math.inf
    diffs, samples = [], int(cfg.params.get("samples", 50))
    caveats = set()
    for _ in range(samples):
        t1, t2 = np.sort(rng.uniform(t_min, t_end, 2)) - coarse.t_origin
        r1, r2 = rng.uniform(0, r_max, 2)
        anti = bool(rng.integers(2))
        a = heat.harnack_ratio(coarse, r1, t1, r2, t2, antipodal=anti)
        b = heat.harnack_ratio(fine, r1, t1, r2, t2, antipodal=anti)
        caveats.update(a.caveats)
        worst = max(worst, b.ratio)
        diffs.append(abs(a.ratio - b.ratio))
    tol = 2 * 4 / 3 * max(diffs)
    complete = coarse.complete_model
    yield Outcome("harnack_upper_bound", _verdict(worst <= 1 + tol), hard=complete,
                  measured={"max_ratio": worst, "tol_pde": tol, "samples": samples},
                  note=", ".join(sorted(caveats)))
    rec.scalars.update({"max_ratio": worst, "tol_pde": tol, "equality_ratio": eq.ratio})


SUITE_TABLE = {
    "cheng-yau": Suite("cheng-yau", "Cheng-Yau sharp gradient estimate for positive harmonic functions on surfaces",
                       ("mode_residual", "cheng_yau_bound", "v_inequality"), run_cheng_yau),
    "li-yau": Suite("li-yau", "Li-Yau gradient estimate for positive heat solutions and its equality case",
                    ("positivity", "mass_nonincreasing", "li_yau_lower_bound", "li_yau_G_upper_bound",
                     "tolerance_refinement"), run_li_yau),
    "harnack": Suite("harnack", "Sharp parabolic Harnack inequality integrated from Li-Yau",
                     ("harnack_equality_config", "harnack_upper_bound"), run_harnack),
    "green": Suite("green", "Green's function comparison G >= G_bar with the flat ball",
                   ("flux_identity", "green_lower_bound", "self_test", "quadrature"), run_green),
    "b-function": Suite("b-function", "Boundary gradient bound for the Green b-function",
                        ("gradient_lower_bound",), run_b_function),
    "comparison-deficits": Suite("comparison-deficits",
                                 "Laplacian and Hessian comparison for the distance function",
                                 ("ricci_nonnegative", "laplacian_distance", "laplacian_r2", "hessian_r2"),
                                 run_comparison),
}


def list_suites() -> list[tuple[str, str]]:
    out = [(s.id, s.theorem) for s in SUITE_TABLE.values()]
    out.append(("sweep", "Deficit trends over a geometry or discretization parameter"))
    return out


def run_suite(cfg: SuiteConfig) -> RunRecord:
    """Run every invariant of the configured suite.

    Config problems raise :class:`ConfigError`. A solver failure is recorded
    as an ``error`` verdict on every invariant not yet evaluated.
    """
    if cfg.suite == "sweep":
        raise ConfigError("use sweep_family for sweep configs")
    suite = SUITE_TABLE[cfg.suite]
    rec = RunRecord(cfg, suite.theorem, [])
    start = time.perf_counter()
    try:
        for outcome in suite.run(cfg, rec):
            rec.outcomes.append(outcome)
    except ProfileError as exc:
        raise ConfigError(f"geometry rejected: {exc}") from None
    except SOLVER_ERRORS as exc:
        done = {o.name for o in rec.outcomes}
        rec.outcomes += [Outcome(name, "error", note=f"{type(exc).__name__}: {exc}")
                         for name in suite.invariants if name not in done]
    rec.wall_clock = time.perf_counter() - start
    names = [o.name for o in rec.outcomes]
    assert sorted(names) == sorted(suite.invariants), names
    return rec


# sweeps ---------------------------------------------------------------------

@dataclass
class SweepResult:
    base: SuiteConfig
    param: str
    values: list
    records: list
    trends: dict

    @property
    def exit_code(self) -> int:
        codes = [r.exit_code for r in self.records if r is not None]
        if len(codes) < len(self.records) or 3 in codes:
            return 3
        return 1 if 1 in codes else 0

    def table(self) -> tuple[list[str], list[list]]:
        names = sorted({k for r in self.records if r is not None for k in r.scalars})
        rows = []
        for v, r in zip(self.values, self.records):
            sc = r.scalars if r is not None else {}
            rows.append([v] + [sc.get(k, float("nan")) for k in names]
                        + [None if r is None else r.passed])
        return [self.param] + names + ["passed"], rows

    def to_dict(self) -> dict:
        return {"param": self.param, "values": fmt(self.values), "base_config_hash": self.base.hash,
                "records": [None if r is None else r.to_dict() for r in self.records],
                "trends": fmt(self.trends)}


def _monotone(y) -> str:
    d = np.diff(np.asarray(y, dtype=float))
    scale = max(1e-300, float(np.max(np.abs(y))))
    if np.all(np.abs(d) <= 1e-12 * scale):
        return "constant"
    if np.all(d >= -1e-12 * scale):
        return "nondecreasing"
    if np.all(d <= 1e-12 * scale):
        return "nonincreasing"
    return "not monotone"


def _exponent(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if np.count_nonzero(ok) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def richardson_orders(grids, y) -> list[float]:
    """Observed orders ``log(|d_i| / |d_{i+1}|) / log(g_{i+1} / g_i)`` from consecutive triples."""
    out = []
    for i in range(len(y) - 2):
        d1, d2 = abs(y[i + 1] - y[i]), abs(y[i + 2] - y[i + 1])
        if d1 == 0 or d2 == 0 or not (math.isfinite(d1) and math.isfinite(d2)):
            out.append(float("nan"))
        else:
            out.append(math.log(d1 / d2) / math.log(grids[i + 1] / grids[i]))
    return out


def sweep_family(cfg: SuiteConfig, param: str | None = None, values=None) -> SweepResult:
    """Run the base suite once per parameter value and summarize trends.

    For ``kappa``/``alpha`` each scalar is compared with the flat value:
    the trend table holds its monotonicity and the fitted exponent of
    ``|s - s_flat|`` against ``kappa`` (or ``1 - alpha``). For ``grid`` it
    holds observed Richardson orders.
    """
    if cfg.suite == "sweep":
        base_suite = cfg.params.get("base")
    else:
        base_suite = cfg.suite
    param = param or cfg.params.get("param")
    if param not in ("kappa", "alpha", "grid", "K_max"):
        raise ConfigError("sweep param must be one of kappa, alpha, grid, K_max")
    if values is None:
        if "values" not in cfg.params:
            raise ConfigError("sweep needs a value list")
        values = parse_values(cfg.params["values"])
    values = list(values)
    if not values:
        raise ConfigError("sweep needs a non-empty value list")
    if param in ("grid", "K_max"):
        values = [int(v) for v in values]
    base = cfg.replace(suite=base_suite, **{"base": None, "param": None, "values": None}) \
        if cfg.suite == "sweep" else cfg
    if param == "kappa":
        _require(base.geometry.get("kind") == "sphere", "kappa sweeps need kind=sphere")
    if param == "alpha":
        _require(base.geometry.get("kind") in ("smoothed-cone", "cone"), "alpha sweeps need kind=smoothed-cone")
    records = []
    for v in values:
        try:
            records.append(run_suite(base.replace(**{param: v})))
        except ConfigError:
            raise
        except SOLVER_ERRORS:
            records.append(None)
    trends: dict = {}
    names = sorted({k for r in records if r is not None for k in r.scalars})
    flat = None
    if param in ("kappa", "alpha"):
        drop = {"kappa": None, "alpha": None, "width": None}
        flat = run_suite(base.replace(kind="euclidean", **drop)).scalars
        trends["flat"] = flat
    for k in names:
        y = [r.scalars.get(k, float("nan")) if r is not None else float("nan") for r in records]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in y):
            continue
        t = {"monotone": _monotone(y)}
        if flat is not None and k in flat:
            x = values if param == "kappa" else [1 - v for v in values]
            dev = [v - flat[k] for v in y]
            t["exponent"] = _exponent(x, dev)
            t["deviation_from_flat"] = dev
        if param == "grid":
            t["richardson_orders"] = richardson_orders(values, y)
        trends[k] = t
    return SweepResult(base, param, values, records, trends)


# report files ---------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([json.dumps(fmt(x)) if isinstance(x, (list, tuple, dict)) else fmt(x) for x in row])
    return buf.getvalue()


def _record_rows(rec: RunRecord):
    for o in rec.outcomes:
        yield ["outcome", o.name, "verdict", o.verdict]
        for k, v in sorted(o.measured.items()):
            yield ["outcome", o.name, k, v]
    for k, v in sorted(rec.scalars.items()):
        yield ["scalar", k, "value", v]
    for name, rep in sorted(rec.reports.items()):
        for e in rep.to_dict()["entries"]:
            for k, v in e.items():
                if k != "id":
                    yield [f"report:{name}", e["id"], k, v]


def _write(path: Path, text: str, written: list):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    written.append(path)


def emit_report(result, format: str = "json", out_dir=".") -> list[Path]:
    """Write a run record or a sweep result; returns the files written.

    Output bytes depend only on the configuration (no timestamps or timing).
    """
    if format not in FORMATS:
        raise ValueError(f"unsupported format {format!r}; supported: {', '.join(FORMATS)}")
    out = Path(out_dir)
    written: list[Path] = []
    if isinstance(result, SweepResult):
        stem = f"sweep-{result.base.suite}-{result.param}-{result.base.hash[:12]}"
        header, rows = result.table()
        if format == "json":
            _write(out / f"{stem}.json", json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", written)
        else:
            _write(out / f"{stem}.csv", _csv_text(header, rows), written)
        numeric = [i for i, h in enumerate(header) if h != "passed"
                   and all(isinstance(row[i], (int, float)) and not isinstance(row[i], bool) for row in rows)]
        lines = ["# " + " ".join(header[i] for i in numeric)]
        lines += [" ".join(f"{float(row[i]):.12g}" for i in numeric) for row in rows]
        _write(out / f"{stem}.dat", "\n".join(lines) + "\n", written)
        return written
    rec: RunRecord = result
    stem = f"{rec.suite}-{rec.config_hash[:12]}"
    rec.artifacts = [f"{stem}-{name}.csv" for name in sorted(rec.tables)]
    for name in sorted(rec.tables):
        header, rows = rec.tables[name]
        _write(out / f"{stem}-{name}.csv", _csv_text(header, rows), written)
    if format == "json":
        _write(out / f"{stem}.json", json.dumps(rec.to_dict(), indent=2, sort_keys=True) + "\n", written)
    else:
        head = [["theorem", rec.theorem, "config_hash", rec.config_hash], ["run", "passed", "value", rec.passed]]
        _write(out / f"{stem}.csv", _csv_text(("section", "name", "field", "value"), head + list(_record_rows(rec))),
               written)
    return written
