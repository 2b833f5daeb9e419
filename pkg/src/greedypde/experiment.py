"""Experiment runner: n-sweeps of the penalized pipeline plus artifacts.

One experiment runs the multi-sweep solver for every n in the configured
dyadic ladder and writes three artifacts into the output directory:

* ``results.csv`` -- machine-readable rows, append-ordered by (step, n),
  schema ``step,n,delta,l2,h1_semi,h1_full,rate_h1,boundary_violation,
  lambda_diag,wall_ms``.  Floats are shortest round-trip decimals and
  missing values are empty fields.  Wall times are deterministic-unfriendly,
  so the column stays empty unless `timing_in_csv` is set; measured times
  always land in the manifest.
* ``table.txt`` -- a human-readable convergence table, one block per sweep.
* ``manifest.json`` -- every resolved parameter plus jitter events and wall
  times; rebuilding a RunConfig from it reproduces the run bit-exactly.
"""

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .config import RunConfig, validate_config
from .dictionary import DictionaryGrid, bias_bound
from .forms import EnergyForm
from .metrics import dyadic_rate
from .oga import GreedySolver
from .problem import builtin_problem
from .quadrature import (DEFAULT_INTERIOR_CELLS, build_quadrature)
from .scan import HAVE_NUMBA
from .uzawa import solve_uzawa

__all__ = ["CSV_HEADER", "ExperimentResult", "run_experiment",
           "config_from_manifest", "format_float"]

CSV_HEADER = ("step,n,delta,l2,h1_semi,h1_full,rate_h1,"
              "boundary_violation,lambda_diag,wall_ms")
CSV_SCHEMA_VERSION = 1


def format_float(x):
    """Shortest decimal that round-trips to the same float; '' for None."""
    if x is None:
        return ""
    return repr(float(x))


@dataclass
class ExperimentResult:
    config: RunConfig
    delta: float
    rows: list
    out_dir: Path
    csv_path: Path
    table_path: Path
    manifest_path: Path


def _build_pieces(cfg):
    problem = builtin_problem(cfg.dimension, cfg.a0)
    quad = build_quadrature(problem.lo, problem.hi,
                            cells_per_axis=cfg.cells_per_axis,
                            gauss_pts_per_axis=cfg.gauss_points,
                            boundary_panels=cfg.boundary_panels,
                            boundary_gauss=cfg.boundary_gauss)
    error_quad = quad
    if cfg.error_quadrature_refine:
        cells = (cfg.cells_per_axis
                 or DEFAULT_INTERIOR_CELLS[cfg.dimension]) * 2
        error_quad = build_quadrature(problem.lo, problem.hi,
                                      cells_per_axis=cells,
                                      gauss_pts_per_axis=cfg.gauss_points,
                                      boundary_panels=cfg.boundary_panels,
                                      boundary_gauss=cfg.boundary_gauss)
    bound = (cfg.bias_bound if cfg.bias_bound is not None
             else bias_bound(problem.lo, problem.hi))
    grid = DictionaryGrid.build(cfg.dimension, cfg.k, bound,
                                n_omega=cfg.n_omega, n_bias=cfg.n_bias)
    delta = cfg.resolved_delta()
    form = EnergyForm(problem, quad, delta,
                      include_boundary_mass=cfg.include_boundary_mass)
    solver = GreedySolver(form, grid, normalize=cfg.normalize_selection)
    return problem, quad, error_quad, grid, delta, solver


def _csv_line(rec, rate_h1, timing):
    wall = format_float(rec.wall_ms) if timing else ""
    return ",".join([
        str(rec.step), str(rec.n), format_float(rec.delta),
        format_float(rec.l2), format_float(rec.h1_semi),
        format_float(rec.h1_full), format_float(rate_h1),
        format_float(rec.boundary_l2), format_float(rec.multiplier_dev),
        wall,
    ])


def _write_csv(path, rows, rates, timing):
    lines = [f"# greedypde results, schema={CSV_SCHEMA_VERSION}", CSV_HEADER]
    lines += [_csv_line(rec, rates[i], timing) for i, rec in enumerate(rows)]
    path.write_text("\n".join(lines) + "\n")


def _write_table(path, cfg, delta, rows, rates):
    by_step = {}
    for i, rec in enumerate(rows):
        by_step.setdefault(rec.step, []).append((rec, rates[i]))
    out = [f"problem: d={cfg.dimension}, a0={cfg.a0}, k={cfg.k}, "
           f"delta={format_float(delta)}, steps={cfg.steps}", ""]
    for step in sorted(by_step):
        out.append(f"sweep {step}")
        out.append(f"{'n':>6}  {'H1 error':>14}  {'rate':>6}  "
                   f"{'L2 error':>14}  {'bdry viol':>12}")
        for rec, rate in by_step[step]:
            ratec = f"{rate:6.2f}" if rate is not None else "     -"
            h1 = f"{rec.h1_full:14.6e}" if rec.h1_full is not None else " " * 14
            l2 = f"{rec.l2:14.6e}" if rec.l2 is not None else " " * 14
            out.append(f"{rec.n:>6}  {h1}  {ratec}  {l2}  "
                       f"{rec.boundary_l2:12.4e}")
        out.append("")
    path.write_text("\n".join(out))


def _jitter_events(states):
    events = []
    for n, state in states.items():
        for step_idx, trace in enumerate(state.traces, start=1):
            for index, jitter in trace.jitter_events:
                events.append({"n": n, "step": step_idx,
                               "iteration": index, "jitter": jitter})
    return events


def run_experiment(cfg, out_dir=None):
    """Execute the sweep described by cfg; write artifacts; return result.

    On a compute error the rows finished so far are flushed to the CSV
    before the exception propagates.
    """
    cfg = validate_config(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    table_path = out / "table.txt"
    manifest_path = out / "manifest.json"

    problem, quad, error_quad, grid, delta, solver = _build_pieces(cfg)

    rows = []
    states = {}
    t_start = time.perf_counter()
    try:
        for n in cfg.n_list:
            state = solve_uzawa(problem, grid, quad, n, steps=cfg.steps,
                                delta=delta, solver=solver,
                                error_quad=error_quad)
            states[n] = state
            rows.extend(state.histories)
    finally:
        rows.sort(key=lambda rec: (rec.step, rec.n))
        rates = _attach_rates(rows)
        _write_csv(csv_path, rows, rates, cfg.timing_in_csv)

    _write_table(table_path, cfg, delta, rows, rates)
    manifest = {
        "schema": CSV_SCHEMA_VERSION,
        "package_version": __version__,
        "numba": HAVE_NUMBA,
        "config": cfg.as_dict(),
        "resolved": {
            "delta": delta,
            "bias_bound": grid.bound,
            "n_omega": grid.n_omega,
            "n_bias": grid.n_bias,
            "interior_nodes": int(quad.interior_nodes.shape[0]),
            "boundary_nodes": int(quad.boundary_nodes.shape[0]),
        },
        "jitter_events": _jitter_events(states),
        "wall_ms": {
            "total": 1e3 * (time.perf_counter() - t_start),
            "per_row": {f"step{r.step}_n{r.n}": r.wall_ms for r in rows},
        },
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True)
                             + "\n")
    return ExperimentResult(config=cfg, delta=delta, rows=rows, out_dir=out,
                            csv_path=csv_path, table_path=table_path,
                            manifest_path=manifest_path)


def _attach_rates(rows):
    """H1 rate vs the previous n within the same step, aligned with rows."""
    rates = []
    prev = {}
    for rec in rows:
        rate = None
        p = prev.get(rec.step)
        if (p is not None and rec.n == 2 * p.n and p.h1_full is not None
                and rec.h1_full is not None):
            rate = dyadic_rate(p.h1_full, rec.h1_full)
        rates.append(rate)
        prev[rec.step] = rec
    return rates


def config_from_manifest(path):
    """Rebuild the exact RunConfig recorded in a manifest."""
    data = json.loads(Path(path).read_text())
    raw = dict(data["config"])
    raw["n_list"] = tuple(raw["n_list"])
    return validate_config(RunConfig(**raw))
