"""Sweep harness: estimation accuracy over grids of feed counts and overheads.

For each feed count in the grid one scenario is generated and measured
once with the largest requested training overhead plus the evaluation
pool; the individual grid points then train on prefixes of the same pool,
so curves along the overhead axis share their randomness.  Each grid cell
becomes one CSV row with the exact column set::

    type,n_f,k,seed,nmse_db,zeta_db,iterations,wall_time_ms,converged,status

Cell failures are recorded in the status column and never abort the sweep.
Problem types may carry a ``_no_mc`` suffix to run the coupling-unaware
benchmark of the same estimator.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .configio import ConfigError, parse_estimator_overrides, parse_scenario, require
from .errors import EstimationError, SingularModelError
from .estimators import EstimatorConfig, PROBLEM_TYPES
from .pipeline import run_estimation
from .scenario import ScenarioSpec, generate_params, measure, sample_configs

CSV_COLUMNS = ("type", "n_f", "k", "seed", "nmse_db", "zeta_db",
               "iterations", "wall_time_ms", "converged", "status")

_TYPE_CODE = {"1": 1, "2": 2, "3": 3, "4": 4, "rbf": 5}


@dataclass(frozen=True)
class SweepSettings:
    scenario: ScenarioSpec           # base scenario; n_f is overridden per column
    problem_types: tuple[str, ...]
    k_grid: tuple[int, ...]
    n_f_grid: tuple[int, ...]
    q_test: int = 100
    estimator_overrides: dict | None = None
    config_seed: int = 1
    noise_seed: int = 2
    output_dir: str = "."


@dataclass
class SweepRow:
    est_type: str
    n_f: int
    k: int
    seed: int
    nmse_db: float | None
    zeta_db: float | None
    iterations: int | None
    wall_time_ms: float | None
    converged: bool | None
    status: str


def split_type_token(token: str) -> tuple[str, bool]:
    """Split '<type>[_no_mc]' into the base problem type and the benchmark flag."""
    no_mc = token.endswith("_no_mc")
    base = token[: -len("_no_mc")] if no_mc else token
    if base not in PROBLEM_TYPES:
        raise ConfigError("problem_types", f"unknown problem type token {token!r}")
    return base, no_mc


def parse_sweep_config(doc: dict) -> SweepSettings:
    scenario = parse_scenario(require(doc, "scenario"))
    types = require(doc, "problem_types")
    if not isinstance(types, list) or not types:
        raise ConfigError("problem_types", "expected a non-empty list")
    for token in types:
        split_type_token(str(token))
    k_grid = require(doc, "k_grid")
    n_f_grid = require(doc, "n_f_grid")
    for name, grid in (("k_grid", k_grid), ("n_f_grid", n_f_grid)):
        if not isinstance(grid, list) or not grid:
            raise ConfigError(name, "expected a non-empty list of positive integers")
        if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in grid):
            raise ConfigError(name, "expected a non-empty list of positive integers")
    q_test = doc.get("q", 100)
    if not isinstance(q_test, int) or isinstance(q_test, bool) or q_test < 2:
        raise ConfigError("q", f"expected an integer >= 2, got {q_test!r}")
    return SweepSettings(
        scenario=scenario,
        problem_types=tuple(str(t) for t in types),
        k_grid=tuple(k_grid),
        n_f_grid=tuple(n_f_grid),
        q_test=q_test,
        estimator_overrides=parse_estimator_overrides(doc.get("estimator")),
        config_seed=doc.get("config_seed", 1),
        noise_seed=doc.get("noise_seed", 2),
        output_dir=doc.get("output_dir", "."),
    )


def _cell_seed(master: int, base_type: str, no_mc: bool, n_f: int, k: int) -> int:
    code = _TYPE_CODE[base_type] + (16 if no_mc else 0)
    ss = np.random.SeedSequence([int(master), code, int(n_f), int(k)])
    return int(ss.generate_state(1)[0])


def run_sweep(settings: SweepSettings, jobs: int = 1, timing: bool = True) -> list[SweepRow]:
    """Run every (type, n_f, k) cell; returns rows in grid order."""
    base = settings.scenario
    overrides = settings.estimator_overrides or {}
    rows: list[SweepRow] = []
    for n_f in settings.n_f_grid:
        spec = replace(base, n_f=n_f)
        params = generate_params(spec)
        pool = max(settings.k_grid) + settings.q_test
        configs = sample_configs(
            spec.n_m,
            pool,
            int(np.random.SeedSequence([settings.config_seed, n_f]).generate_state(1)[0]),
            prepend_reference=True,
        )
        ms = measure(
            params,
            configs,
            snr_db=spec.snr_db,
            noise_seed=int(np.random.SeedSequence([settings.noise_seed, n_f]).generate_state(1)[0]),
            scenario_ref=f"sweep:n_f={n_f}:seed={spec.seed}",
        )

        cells = [(token, k) for token in settings.problem_types for k in settings.k_grid]

        def run_cell(cell):
            token, k = cell
            base_type, no_mc = split_type_token(token)
            cfg = EstimatorConfig(
                **{**overrides, "init_seed": _cell_seed(base.seed, base_type, no_mc, n_f, k)}
            )
            start = time.perf_counter()
            try:
                outcome = run_estimation(
                    ms, params, base_type, k_train=k, q_test=settings.q_test,
                    no_mc=no_mc, cfg=cfg,
                )
            except (EstimationError, SingularModelError, np.linalg.LinAlgError) as err:
                kind = "numerical" if isinstance(
                    err, (SingularModelError, np.linalg.LinAlgError)
                ) else "identifiability"
                return SweepRow(
                    est_type=token, n_f=n_f, k=k, seed=base.seed,
                    nmse_db=None, zeta_db=None, iterations=None,
                    wall_time_ms=None, converged=None,
                    status=f"{kind}: {err}",
                )
            elapsed_ms = (time.perf_counter() - start) * 1e3 if timing else 0.0
            return SweepRow(
                est_type=token, n_f=n_f, k=k, seed=base.seed,
                nmse_db=outcome.metrics.nmse_db,
                zeta_db=outcome.metrics.zeta_db,
                iterations=outcome.report.iterations_used,
                wall_time_ms=elapsed_ms,
                converged=outcome.report.converged,
                status="ok",
            )

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
                rows.extend(pool_exec.map(run_cell, cells))
        else:
            rows.extend(run_cell(cell) for cell in cells)
    return rows


def _fmt(value, spec: str) -> str:
    return "" if value is None else format(value, spec)


def rows_to_csv(rows: list[SweepRow]) -> str:
    """Serialize rows with fixed formatting so equal inputs give equal bytes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            row.est_type,
            row.n_f,
            row.k,
            row.seed,
            _fmt(row.nmse_db, ".6f"),
            _fmt(row.zeta_db, ".6f"),
            "" if row.iterations is None else row.iterations,
            _fmt(row.wall_time_ms, ".3f"),
            "" if row.converged is None else str(row.converged).lower(),
            row.status,
        ])
    return buf.getvalue()


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
