"""Run orchestration: turn a validated :class:`RunConfig` into output files.

Independent tasks ((F, M) solves, temperatures, cascade fields) go to a
process pool when ``workers > 1``; results are merged in task order and all
files are written by the parent, so outputs do not depend on the pool size.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from polardimer import __version__
from polardimer.angular import AngularBasis
from polardimer.cascade import (CascadeError, CascadeSettings, check_leak, distribution_summary, path_analytics,
                                path_json, physical_graph, propagate, write_distribution_csv, write_summary_json)
from polardimer.config import RunConfig, from_dict, validate
from polardimer.continuum import ContinuumBoxSettings, ContinuumWindowError
from polardimer.eigen import (ContractedSolver, EigenState, LabelingError, RadialChannels, assemble,
                              default_field_path, expectation, hybridization, label_along, label_field_free,
                              scan_path, solve_bound)
from polardimer.krylov import KrylovConvergenceError
from polardimer.radial import GridResolutionError, RadialGrid, build_grid, recommended_points
from polardimer.storage import write_states
from polardimer.transitions import ScanSettings, cross_section_scan, spontaneous_rate, write_rate_csv, write_scan_csv

COMMANDS = ("eigen", "scan", "cross-section", "cascade", "paths")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

class TargetError(RuntimeError):
    """A requested target label is not present in the solved spectrum."""


NUMERICAL_ERRORS = (TargetError, KrylovConvergenceError, LabelingError, GridResolutionError, ContinuumWindowError,
                    CascadeError, np.linalg.LinAlgError)


@dataclass
class RunResult:
    status: int
    outputs: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def make_grid(cfg: RunConfig, curve) -> RadialGrid:
    g = cfg.grid
    n = g.n
    if n is None:
        n = recommended_points(curve, g.r_min, g.r_max, g.e_cut, g.mapping, g.oversampling, g.l_res)
    return build_grid(g.r_min, g.r_max, n, mapping=g.mapping, curve=curve, e_cut=g.e_cut, l_res=g.l_res)


# --- eigen / scan ------------------------------------------------------------

def _solver(cfg: RunConfig, grid: RadialGrid, curve, M: int, count: int):
    """F -> lowest ``count`` states of block M with the configured method."""
    s = cfg.solver
    J_max = cfg.basis.J_max
    if s.method == "contracted":
        channels = RadialChannels(grid, curve, J_max)
        channels = channels.restrict(-math.inf, -channels.margin)
        solver = ContractedSolver(channels, M)
        return lambda F: solver.solve(F)[:count]
    basis = AngularBasis(M, J_max)
    seed = cfg.seed()
    return lambda F: solve_bound(assemble(grid, basis, curve, F), count, method=s.method, tol=s.tol, seed=seed)


def _labeled_path(cfg: RunConfig, grid, curve, M: int, path: list[float]) -> list[list[EigenState]]:
    """Labeled spectra along ``path``.

    Iterative solvers label the lowest ``how_many`` states and carry
    ``how_many // 2 + 2`` extra ones to buffer the window edge; the contracted
    solver labels every bound state.
    """
    k = cfg.solver.how_many if cfg.solver.method != "contracted" else 10**9
    solve = _solver(cfg, grid, curve, M, k + k // 2 + 2)
    zero = label_field_free(solve(0.0))
    zero = [s if i < k else s.relabel(None) for i, s in enumerate(zero)]
    spectra = label_along(solve, path, zero, min_overlap=cfg.solver.min_overlap) if len(path) > 1 else [zero]
    return [[s for s in spec if s.label is not None] for spec in spectra]


def _state_row(s: EigenState, grid, curve) -> list:
    v, J, M = s.label
    return [repr(float(s.F)), M, v, J, repr(float(s.energy)), repr(hybridization(s)),
            repr(expectation(s, "cos")), repr(0.0 - expectation(s, "dipole_cos", grid, curve))]


STATE_HEADER = ["F_au", "M", "v", "J", "E_au", "hybridization", "cos_expect", "dE_dF_au"]


def _eigen_task(args):
    cfg_dict, base, F, M = args
    cfg = from_dict(cfg_dict, base)
    curve = cfg.curve_pair()
    grid = make_grid(cfg, curve)
    path = default_field_path(F, cfg.solver.label_steps) if F > 0 else [0.0]
    states = _labeled_path(cfg, grid, curve, M, path)[-1]
    states.sort(key=lambda s: s.energy)
    rows = [_state_row(s, grid, curve) for s in states]
    if not {"container", "rates"} & set(cfg.output.formats):
        return rows, None, grid.spec
    for s in states:
        s.coefficients  # expand now so the states pickle
    return rows, states, grid.spec


def _scan_task(args):
    cfg_dict, base, M = args
    cfg = from_dict(cfg_dict, base)
    curve = cfg.curve_pair()
    grid = make_grid(cfg, curve)
    F_values = cfg.field_values()
    path = scan_path(F_values, cfg.solver.label_steps)
    wanted = {tuple(t) for t in cfg.targets if t[2] == M}
    spectra = _labeled_path(cfg, grid, curve, M, path)
    missing = wanted - {s.label for s in spectra[0]}
    if missing:
        raise TargetError(
            f"targets {sorted(missing)} not among the labeled states; raise solver.how_many or use 'contracted'")
    rows = []
    for F, spec in zip(path, spectra):
        if F not in F_values:
            continue
        for s in sorted(spec, key=lambda s: s.label):
            if not wanted or s.label in wanted:
                rows.append(_state_row(s, grid, curve))
    return rows


def _cross_section_task(args):
    cfg_dict, base, T = args
    cfg = from_dict(cfg_dict, base)
    c = cfg.continuum
    settings = ScanSettings(J_max=c.J_max, label_steps=cfg.solver.label_steps, min_overlap=cfg.solver.min_overlap,
                            box=ContinuumBoxSettings(c.r_min, c.levels_below_2kT, c.cut_factor, c.l_res,
                                                     c.oversampling))
    res = cross_section_scan(cfg.curve_pair(), cfg.field_values(), [T], [tuple(t) for t in cfg.targets], settings)
    return res.points, res.diagnostics


def _cascade_settings(cfg: RunConfig) -> CascadeSettings:
    c = cfg.cascade
    return CascadeSettings(J_max=c.J_max, M_max=c.M_max, label_steps=cfg.solver.label_steps, truncation=c.truncation)


def _cascade_task(args):
    cfg_dict, base, F, command = args
    cfg = from_dict(cfg_dict, base)
    curve = cfg.curve_pair()
    grid = make_grid(cfg, curve)
    settings = _cascade_settings(cfg)
    graph = physical_graph(curve, grid, F, tuple(cfg.cascade.initial), settings)
    if command == "paths":
        return path_json(graph, path_analytics(graph, cfg.cascade.initial, cfg.cascade.final)), None
    dist = propagate(graph, cfg.cascade.initial)
    summary = distribution_summary(dist)
    summary["truncation_edge_population"] = check_leak(dist, settings)
    summary["lifetime_initial_s"] = graph.lifetime_seconds(cfg.cascade.initial)
    return summary, dist


# --- driver ----------------------------------------------------------------

def _map(fn, tasks: list, workers: int) -> list:
    """Apply ``fn`` to every task; each result is (ok, value_or_message), in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [_guard(fn, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_guard, [fn] * len(tasks), tasks))


def _guard(fn, task):
    try:
        return True, fn(task)
    except NUMERICAL_ERRORS as err:
        return False, f"{type(err).__name__}: {err}"


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _f_tag(i: int) -> str:
    return f"F{i:03d}"


def run(cfg: RunConfig, command: str, out_dir: str | Path | None = None, workers: int | None = None) -> RunResult:
    """Execute ``command``; always writes a manifest unless validation fails."""
    if command not in COMMANDS:
        return RunResult(EXIT_VALIDATION, diagnostics=[f"command: must be one of {COMMANDS}"])
    diags = validate(cfg, command)
    if diags:
        return RunResult(EXIT_VALIDATION, diagnostics=diags)
    out = Path(out_dir if out_dir is not None else Path(cfg.base_dir) / cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers
    start = time.perf_counter()
    result = RunResult(EXIT_OK)
    cfg_dict, base = cfg.to_dict(), cfg.base_dir
    formats = set(cfg.output.formats)

    def emit(name: str) -> Path:
        result.outputs.append(name)
        return out / name

    def fail(msg: str) -> None:
        result.status = EXIT_NUMERICAL
        result.diagnostics.append(msg)

    F_values = cfg.field_values()
    if command == "eigen":
        tasks = [(cfg_dict, base, F, M) for F in F_values for M in sorted(set(cfg.basis.M))]
        rows, by_F = [], {}
        for (_, _, F, M), (ok, val) in zip(tasks, _map(_eigen_task, tasks, workers)):
            if not ok:
                fail(f"eigen F={F:g} M={M}: {val}")
                continue
            r, states, spec = val
            rows.extend(r)
            if states is not None:
                by_F.setdefault(F, []).append((M, states, spec))
        _write_csv(emit("energies.csv"), STATE_HEADER, rows)
        for i, F in enumerate(F_values):
            blocks = by_F.get(F, [])
            if "container" in formats:
                for M, states, spec in blocks:
                    if states:
                        write_states(emit(f"states_{_f_tag(i)}_M{M}.pdeig"), states, spec, {"config_hash": cfg.config_hash()})
            if "rates" in formats and blocks:
                curve = cfg.curve_pair()
                grid = make_grid(cfg, curve)
                every = [s for _, states, _ in blocks for s in states]
                entries = [spontaneous_rate(u, l, grid, curve) for u in every for l in every
                           if l.energy < u.energy and abs(u.M - l.M) <= 1]
                write_rate_csv(emit(f"rates_{_f_tag(i)}.csv"), entries)
    elif command == "scan":
        tasks = [(cfg_dict, base, M) for M in sorted({t[2] for t in cfg.targets})]
        rows = []
        for (_, _, M), (ok, val) in zip(tasks, _map(_scan_task, tasks, workers)):
            if ok:
                rows.extend(val)
            else:
                fail(f"scan M={M}: {val}")
        rows.sort(key=lambda r: (float(r[0]), r[1], r[2], r[3]))
        _write_csv(emit("scan.csv"), STATE_HEADER, rows)
    elif command == "cross-section":
        tasks = [(cfg_dict, base, T) for T in sorted(cfg.temperatures)]
        points = []
        for (_, _, T), (ok, val) in zip(tasks, _map(_cross_section_task, tasks, workers)):
            if not ok:
                fail(f"cross-section T={T:g} K: {val}")
                continue
            pts, d = val
            points.extend(pts)
            for msg in d:
                fail(msg)
        points.sort(key=lambda p: (p.F, p.T, p.target_label))
        write_scan_csv(emit("cross_sections.csv"), points)
        if "json" in formats:
            doc = [{"F_au": p.F, "T_K": p.T, "target": list(p.target_label), "sigma_au": p.sigma,
                    "E_cont_au": p.continuum_energy, "photon_energy_au": p.photon_energy,
                    "partial_waves": {str(k): v for k, v in sorted(p.partial.items())}} for p in points]
            emit("cross_sections.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        tasks = [(cfg_dict, base, F, command) for F in F_values]
        for i, ((_, _, F, _), (ok, val)) in enumerate(zip(tasks, _map(_cascade_task, tasks, workers))):
            if not ok:
                fail(f"{command} F={F:g}: {val}")
                continue
            doc, dist = val
            if command == "paths":
                doc["F_au"] = F
                emit(f"paths_{_f_tag(i)}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            else:
                write_distribution_csv(emit(f"distribution_{_f_tag(i)}.csv"), dist)
                write_summary_json(emit(f"summary_{_f_tag(i)}.json"), doc)

    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg_dict,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed(),
        "wall_time_s": time.perf_counter() - start,
        "status": result.status,
        "diagnostics": result.diagnostics,
        "outputs": {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in result.outputs},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result
