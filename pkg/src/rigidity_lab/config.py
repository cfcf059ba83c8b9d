"""Line-oriented ``key=value`` run configurations."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import ProfileError, make_profile

SUITES = ("cheng-yau", "li-yau", "harnack", "green", "b-function", "comparison-deficits", "sweep")
SWEEP_PARAMS = ("kappa", "alpha", "grid", "K_max")
FORMATS = ("json", "csv")
HEAT_BOUNDARIES = ("dirichlet", "neumann", "whole-space", "closed")

GEOMETRY_KEYS = {"kind": str, "kappa": float, "alpha": float, "width": float, "n": int, "R": float,
                 "grid": int, "policy": str}
PARAM_KEYS = {
    # elliptic
    "data": str, "y_angle": float, "K_max": int, "lattice_fraction": float, "n_theta": int,
    # parabolic
    "t_start": float, "t_end": float, "steps": int, "boundary": str, "initial": str,
    "bump_width": float, "origin": str, "levels": int, "samples": int, "seed": int,
    # sweep
    "base": str, "param": str, "values": str,
}
TOL_KEYS = {"tol": float, "tol_fd": float, "tol_curv": float}
OUTPUT_KEYS = {"out": str, "format": str}
ALL_KEYS = {**GEOMETRY_KEYS, **PARAM_KEYS, **TOL_KEYS, **OUTPUT_KEYS, "suite": str}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    geometry: dict
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    base_dir: str | None = field(default=None, compare=False)

    def canonical(self) -> dict:
        """Everything that influences results (output location excluded)."""
        return {"suite": self.suite, "geometry": self.geometry, "params": self.params,
                "tolerances": self.tolerances}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes) -> "SuiteConfig":
        """Copy with keys overridden (validated again); ``None`` removes a key."""
        items = {**self.geometry, **self.params, **self.tolerances, "suite": self.suite,
                 "format": self.format, **({"out": self.out} if self.out else {})}
        items.update(changes)
        items = {k: v for k, v in items.items() if v is not None}
        cfg = config_from_mapping(items)
        return dataclasses.replace(cfg, base_dir=self.base_dir)


def _lines(text: str):
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
        seen[key] = lineno
        yield key, value, lineno


def _cast(key: str, value, line: int | None):
    kind = ALL_KEYS[key]
    if kind is str:
        return str(value)
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value) if not isinstance(value, str) else int(value.strip())
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be {'an integer' if kind is int else 'a number'}, got {value!r}", line)
    if not math.isfinite(out):
        raise ConfigError(f"{key} must be finite", line)
    return out


def parse_values(text: str) -> list[float]:
    """Comma-separated sweep values."""
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if not items:
        raise ConfigError("sweep needs a non-empty value list")
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value list {text!r}") from exc


def config_from_mapping(items: dict, lines: dict | None = None) -> SuiteConfig:
    lines = lines or {}
    at = lines.get
    for key in items:
        if key not in ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", at(key))
    vals = {k: _cast(k, v, at(k)) for k, v in items.items()}

    suite = vals.get("suite")
    if suite is None:
        raise ConfigError(f"missing 'suite' key; allowed suites: {', '.join(SUITES)}")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; allowed suites: {', '.join(SUITES)}", at("suite"))

    def positive(key):
        if key in vals and not vals[key] > 0:
            raise ConfigError(f"{key} must be > 0", at(key))

    for key in ("kappa", "alpha", "width", "R", "tol", "tol_fd", "tol_curv", "bump_width", "t_end"):
        positive(key)
    if "t_start" in vals and not vals["t_start"] > 0:
        raise ConfigError("t_start must be > 0 (the Li-Yau term n/(2t) needs t > 0)", at("t_start"))
    if "n" in vals and vals["n"] < 2:
        raise ConfigError("n must be >= 2", at("n"))
    if "grid" in vals and (vals["grid"] < 4 or vals["grid"] % 2):
        raise ConfigError("grid must be an even integer >= 4", at("grid"))
    for key in ("K_max", "n_theta", "steps", "levels", "samples"):
        if key in vals and vals[key] < 1:
            raise ConfigError(f"{key} must be >= 1", at(key))
    if "levels" in vals and vals["levels"] < 2:
        raise ConfigError("levels must be >= 2 (the tolerance needs a refinement)", at("levels"))
    if "lattice_fraction" in vals and not 0 < vals["lattice_fraction"] < 1:
        raise ConfigError("lattice_fraction must be in (0, 1)", at("lattice_fraction"))
    if vals.get("format", "json") not in FORMATS:
        raise ConfigError(f"unsupported format {vals['format']!r}; supported: {', '.join(FORMATS)}", at("format"))
    if vals.get("boundary", "dirichlet") not in HEAT_BOUNDARIES:
        raise ConfigError(f"boundary must be one of {', '.join(HEAT_BOUNDARIES)}", at("boundary"))
    if vals.get("initial", "heat-kernel") not in ("heat-kernel", "bump", "constant"):
        raise ConfigError("initial must be heat-kernel, bump or constant", at("initial"))
    if vals.get("origin", "zero") not in ("zero", "start"):
        raise ConfigError("origin must be zero or start", at("origin"))
    if "t_start" in vals and "t_end" in vals and not vals["t_end"] > vals["t_start"]:
        raise ConfigError("t_end must be > t_start", at("t_end"))
    if suite in ("li-yau", "harnack") and "t_start" not in vals:
        raise ConfigError(f"suite {suite} needs t_start > 0")
    if suite == "sweep":
        base = vals.get("base")
        if base not in SUITES or base == "sweep":
            raise ConfigError(f"sweep needs base = one of {', '.join(s for s in SUITES if s != 'sweep')}",
                              at("base"))
        if "param" in vals and vals["param"] not in SWEEP_PARAMS:
            raise ConfigError(f"param must be one of {', '.join(SWEEP_PARAMS)}", at("param"))
        if "values" in vals:
            try:
                parse_values(vals["values"])
            except ConfigError as exc:
                raise ConfigError(str(exc), at("values")) from None

    geometry = {k: vals[k] for k in GEOMETRY_KEYS if k in vals}
    geometry.setdefault("kind", "euclidean")
    prof = {k: geometry[k] for k in ("kind", "kappa", "alpha", "width") if k in geometry}
    try:
        profile = make_profile(prof, tol_curv=vals.get("tol_curv", 1e-10))
    except ProfileError as exc:
        line = at("kind") if "kind" in vals else None
        raise ConfigError(f"geometry rejected: {exc}", line) from None
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"geometry rejected: {exc}", at("kind")) from None
    if "R" in geometry and geometry["R"] > profile.domain_max * (1 + 1e-12):
        raise ConfigError(f"R exceeds the profile's domain ({profile.domain_max:.6g})", at("R"))

    params = {k: vals[k] for k in PARAM_KEYS if k in vals}
    tolerances = {k: vals[k] for k in TOL_KEYS if k in vals}
    return SuiteConfig(suite, geometry, params, tolerances, vals.get("out"), vals.get("format", "json"))


def parse_config_text(text: str) -> SuiteConfig:
    items, lines = {}, {}
    for key, value, lineno in _lines(text):
        items[key], lines[key] = value, lineno
    return config_from_mapping(items, lines)


def parse_config(path) -> SuiteConfig:
    """Read and validate a config file; errors carry the offending line number."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    cfg = parse_config_text(text)
    return dataclasses.replace(cfg, base_dir=str(Path(path).resolve().parent))
