"""Declarative run configuration (YAML) and its validation.

Schema (all sections optional except where a command needs them)::

    curve:       {builtin: synthetic_lics | morse, scale, morse: {D_e, a, R_e, d_max, r_peak},
                  mu, potential_file, dipole_file, threshold}
    grid:        {r_min, r_max, n, mapping: uniform | envelope, e_cut, l_res}
    basis:       {M: [..], J_max}
    fields:      [F, ...]  or  {start, stop, num}       (atomic units)
    temperatures: [T, ...]                              (kelvin)
    targets:     [[v, J, M], ...]
    solver:      {method: lanczos | dense | contracted, how_many, tol, label_steps, min_overlap}
    continuum:   {r_min, levels_below_2kT, cut_factor, l_res, oversampling, J_max}
    cascade:     {initial: [v, J, M], final: [v, J, M], J_max, M_max, truncation}
    output:      {directory, formats: [csv, json, container, rates]}
    workers:     n
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np
import yaml

from polardimer.model import CurvePair, MorseParams, dipole_bump, morse_pair, synthetic_lics, tabulated_pair
from polardimer.radial import _required_points

BUILTIN_CURVES = ("synthetic_lics", "morse")
METHODS = ("lanczos", "dense", "contracted")
FORMATS = ("csv", "json", "container", "rates")


@dataclass
class CurveConfig:
    builtin: str | None = "synthetic_lics"
    scale: float = 1.0
    morse: dict | None = None
    mu: float | None = None
    potential_file: str | None = None
    dipole_file: str | None = None
    threshold: float = 0.0

    def build(self, base: Path | None = None) -> CurvePair:
        if self.potential_file or self.dipole_file:
            base = base or Path(".")
            return tabulated_pair(base / self.potential_file, base / self.dipole_file, self.mu, self.threshold)
        if self.builtin == "synthetic_lics":
            curve = synthetic_lics(self.scale)
            if self.mu is not None:
                curve = CurvePair(curve.potential, curve.dipole, self.mu, name=curve.name, meta=curve.meta)
            return curve
        m = dict(self.morse)
        d_max, r_peak = m.pop("d_max", None), m.pop("r_peak", None)
        dipole = dipole_bump(d_max, r_peak) if d_max is not None else None
        return morse_pair(MorseParams(**m), self.mu, dipole)


@dataclass
class GridConfig:
    r_min: float = 3.0
    r_max: float = 40.0
    n: int | None = None
    mapping: str = "envelope"
    e_cut: float | None = 1e-4
    l_res: float = 0.0
    oversampling: float = 1.6


@dataclass
class BasisConfig:
    M: list = field(default_factory=lambda: [0])
    J_max: int = 20


@dataclass
class SolverConfig:
    method: str = "lanczos"
    how_many: int = 10
    tol: float = 1e-10
    label_steps: int = 64
    min_overlap: float = 0.5


@dataclass
class ContinuumConfig:
    r_min: float = 3.0
    levels_below_2kT: int = 20
    cut_factor: float = 4.0
    l_res: float = 20.0
    oversampling: float = 1.6
    J_max: int = 20


@dataclass
class CascadeConfig:
    initial: list | None = None
    final: list = field(default_factory=lambda: [0, 0, 0])
    J_max: int = 30
    M_max: int = 30
    truncation: float = 1e-12


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    curve: CurveConfig = field(default_factory=CurveConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    fields: list = field(default_factory=lambda: [0.0])
    temperatures: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    solver: SolverConfig = field(default_factory=SolverConfig)
    continuum: ContinuumConfig = field(default_factory=ContinuumConfig)
    cascade: CascadeConfig = field(default_factory=CascadeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    workers: int = 1
    base_dir: str = field(default=".", compare=False)
    parse_errors: list = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d.pop("parse_errors")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def seed(self) -> int:
        return int(self.config_hash()[:8], 16)

    def field_values(self) -> list[float]:
        return expand_fields(self.fields)

    def curve_pair(self) -> CurvePair:
        return self.curve.build(Path(self.base_dir))


def expand_fields(spec) -> list[float]:
    if isinstance(spec, dict):
        return [float(x) for x in np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))]
    return [float(x) for x in spec]


def _coerce(value):
    # YAML 1.1 reads "1e-5" as a string
    if isinstance(value, str):
        try:
            return float(value) if any(ch in value for ch in ".eE") else int(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_coerce(v) for v in value]
    if isinstance(value, dict):
        return {k: _coerce(v) for k, v in value.items()}
    return value


def _build(cls, data, path: str, errors: list):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        errors.append(f"{path}: expected a mapping")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in data.items():
        if key not in known or key in ("base_dir", "parse_errors"):
            errors.append(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")
            continue
        f = known[key]
        default = f.default_factory() if f.default_factory is not MISSING else f.default
        if is_dataclass(default):
            kwargs[key] = _build(type(default), val, f"{path}.{key}" if path else key, errors)
        else:
            kwargs[key] = _coerce(val)
    return cls(**kwargs)


def from_dict(data: dict, base_dir: str | Path = ".") -> RunConfig:
    errors: list[str] = []
    cfg = _build(RunConfig, data or {}, "", errors)
    cfg.base_dir = str(base_dir)
    cfg.parse_errors = errors
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        cfg = RunConfig()
        cfg.parse_errors = [f"config: not valid YAML ({err})"]
        return cfg
    if data is not None and not isinstance(data, dict):
        cfg = RunConfig()
        cfg.parse_errors = ["config: top level must be a mapping"]
        return cfg
    return from_dict(data or {}, path.parent)


def _is_label(x) -> bool:
    return isinstance(x, (list, tuple)) and len(x) == 3 and all(isinstance(v, int) for v in x)


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x > 0


def validate(cfg: RunConfig, command: str | None = None) -> list[str]:
    """Field-level diagnostics; empty iff the config can run ``command``."""
    d = list(cfg.parse_errors)
    c = cfg.curve
    if c.potential_file or c.dipole_file:
        for key in ("potential_file", "dipole_file"):
            name = getattr(c, key)
            if not name:
                d.append(f"curve.{key}: required when reading tabulated curves")
            elif not (Path(cfg.base_dir) / name).is_file():
                d.append(f"curve.{key}: file not found: {name}")
        if not _positive(c.mu):
            d.append("curve.mu: reduced mass required (positive, atomic units) for tabulated curves")
    elif c.builtin not in BUILTIN_CURVES:
        d.append(f"curve.builtin: must be one of {BUILTIN_CURVES}")
    elif c.builtin == "morse":
        m = c.morse or {}
        if not isinstance(m, dict) or not {"D_e", "a", "R_e"} <= set(m) <= {"D_e", "a", "R_e", "d_max", "r_peak"} \
                or not all(_positive(m.get(k)) for k in ("D_e", "a", "R_e")):
            d.append("curve.morse: need positive D_e, a, R_e (optional dipole d_max, r_peak)")
        elif ("d_max" in m) != ("r_peak" in m) or ("r_peak" in m and not _positive(m["r_peak"])):
            d.append("curve.morse: d_max and r_peak go together, r_peak > 0")
        if not _positive(c.mu):
            d.append("curve.mu: reduced mass required for the Morse curve")
    elif not _positive(c.scale):
        d.append("curve.scale: must be positive")

    g = cfg.grid
    if not (isinstance(g.r_min, (int, float)) and isinstance(g.r_max, (int, float))) or not 0 <= g.r_min < g.r_max:
        d.append("grid: need 0 <= r_min < r_max")
    if g.n is not None and (not isinstance(g.n, int) or g.n < 8):
        d.append("grid.n: need an integer >= 8 (or null for the recommended size)")
    if g.mapping not in ("uniform", "envelope"):
        d.append("grid.mapping: must be 'uniform' or 'envelope'")
    if g.mapping == "envelope" and not _positive(g.e_cut):
        d.append("grid.e_cut: envelope mapping needs a positive cut-off energy")
    if g.n is None and not _positive(g.e_cut):
        d.append("grid.n: give n or e_cut so a size can be recommended")

    b = cfg.basis
    if not isinstance(b.M, list) or not b.M or not all(isinstance(m, int) and m >= 0 for m in b.M):
        d.append("basis.M: need a non-empty list of M >= 0 (negative M follow by symmetry)")
    elif not isinstance(b.J_max, int) or b.J_max < max(b.M):
        d.append("basis.J_max: must be an integer >= max(M)")

    try:
        F = cfg.field_values()
        if not F:
            d.append("fields: empty field list")
        elif any(not (isinstance(x, float) and math.isfinite(x) and x >= 0) for x in F):
            d.append("fields: field strengths must be finite and >= 0")
    except (KeyError, TypeError, ValueError):
        d.append("fields: need a list of numbers or {start, stop, num}")

    if not isinstance(cfg.temperatures, list) or any(not _positive(t) for t in cfg.temperatures):
        d.append("temperatures: every temperature must be > 0 K")
    if not isinstance(cfg.targets, list) or any(not _is_label(t) or t[0] < 0 or t[1] < abs(t[2])
                                                  for t in cfg.targets):
        d.append("targets: each target is [v, J, M] with v >= 0 and J >= |M|")

    s = cfg.solver
    if s.method not in METHODS:
        d.append(f"solver.method: must be one of {METHODS}")
    if not isinstance(s.how_many, int) or s.how_many < 1:
        d.append("solver.how_many: must be >= 1")
    if not _positive(s.tol):
        d.append("solver.tol: must be positive")
    if not isinstance(s.label_steps, int) or s.label_steps < 1:
        d.append("solver.label_steps: must be >= 1")
    if not (isinstance(s.min_overlap, (int, float)) and 0 < s.min_overlap < 1):
        d.append("solver.min_overlap: must lie in (0, 1)")

    k = cfg.continuum
    for key in ("r_min", "cut_factor", "oversampling"):
        if not _positive(getattr(k, key)):
            d.append(f"continuum.{key}: must be positive")
    if not isinstance(k.levels_below_2kT, int) or k.levels_below_2kT < 3:
        d.append("continuum.levels_below_2kT: need an integer >= 3")
    if not isinstance(k.J_max, int) or k.J_max < 1:
        d.append("continuum.J_max: must be >= 1")

    cc = cfg.cascade
    if cc.initial is not None and (not _is_label(cc.initial) or cc.initial[0] < 1 or cc.initial[1] < abs(cc.initial[2])):
        d.append("cascade.initial: need [v, J, M] with v >= 1 and J >= |M|")
    if not _is_label(cc.final) or cc.final[0] != 0:
        d.append("cascade.final: need a [0, J, M] label in the absorbing band")
    if not isinstance(cc.J_max, int) or not isinstance(cc.M_max, int) or cc.M_max < 0:
        d.append("cascade: J_max and M_max must be integers >= 0")
    elif cc.J_max < cc.M_max:
        d.append("cascade.M_max: exceeds cascade.J_max")
    if not (isinstance(cc.truncation, (int, float)) and 0 <= cc.truncation < 1):
        d.append("cascade.truncation: must lie in [0, 1)")

    o = cfg.output
    if not isinstance(o.formats, list) or any(f not in FORMATS for f in o.formats):
        d.append(f"output.formats: allowed values are {FORMATS}")
    if not isinstance(cfg.workers, int) or cfg.workers < 1:
        d.append("workers: must be an integer >= 1")

    if command in ("scan", "cross-section") and not cfg.targets:
        d.append("targets: the command needs at least one target")
    if command == "cross-section" and not cfg.temperatures:
        d.append("temperatures: the cross-section command needs at least one temperature")
    if command in ("cascade", "paths") and cc.initial is None:
        d.append("cascade.initial: the command needs an initial state")

    if not d and g.n is not None and g.e_cut is not None:
        try:
            curve = cfg.curve_pair()
            need = _required_points(curve, g.r_min, g.r_max, g.e_cut, g.mapping, g.l_res)
            if g.n < need:
                d.append(f"grid.n: {g.n} points cannot resolve e_cut={g.e_cut:g}; need at least {math.ceil(need)}")
        except ValueError as err:
            d.append(f"curve: {err}")
    return d
