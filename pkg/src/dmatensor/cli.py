"""Command-line harness: generate, estimate, sweep, optimize, report.

Exit codes: 0 success, 2 usage or configuration problems, 3 identifiability
or missing inputs, 4 numerical failures.  All randomness is controlled by
seeds in the configuration files (overridable with flags), so repeated runs
produce identical output files; pass ``--no-timing`` to sweeps when the
wall-clock column must also be reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .configio import (
    ConfigError,
    load_json_config,
    parse_scenario,
    require,
)
from .errors import (
    DatasetFormatError,
    DatasetVersionError,
    DegenerateInputError,
    DivergenceError,
    EstimationError,
    SingularModelError,
)
from .estimators import ESTIMATOR_LABELS, EstimatorConfig, PROBLEM_TYPES
from .metrics import MetricReport
from .optimizer import GaConfig, gain_function, genetic_optimize
from .pipeline import EstimationOutcome, estimated_parameters, run_estimation
from .report import aggregate, format_tables, read_sweep_csv, render_figures
from .scenario import (
    encode_complex_matrix,
    generate_params,
    load_dataset,
    measure,
    sample_configs,
    save_dataset,
)
from .sweep import parse_sweep_config, run_sweep, write_sweep_csv

OUTPUT_DIR_ENV = "DMATENSOR_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IDENTIFIABILITY = 3
EXIT_NUMERICAL = 4


def _default_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _resolve_out(path_arg: str | None, default_name: str) -> Path:
    if path_arg is not None:
        return Path(path_arg)
    out = _default_dir() / default_name
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _json_number(x: float | None):
    """JSON-safe float: non-finite values become strings ('inf', '-inf', 'nan')."""
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    if math.isnan(x):
        return "nan"
    return "inf" if x > 0 else "-inf"


def _write_json(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    doc = load_json_config(args.config)
    scenario = parse_scenario(require(doc, "scenario"))
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.snr_db is not None:
        scenario = replace(scenario, snr_db=args.snr_db)
    if args.coupling is not None:
        scenario = replace(scenario, coupling_strength=args.coupling)

    k_train = doc.get("k_train", 32)
    q_test = doc.get("q_test", 100)
    for name, value in (("k_train", k_train), ("q_test", q_test)):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(name, f"expected a positive integer, got {value!r}")
    include_reference = bool(doc.get("include_reference", True))
    config_seed = doc.get("config_seed", 1)
    noise_seed = doc.get("noise_seed", 2)

    params = generate_params(scenario)
    configs = sample_configs(
        scenario.n_m, k_train + q_test, config_seed, prepend_reference=include_reference
    )
    ms = measure(
        params,
        configs,
        snr_db=scenario.snr_db,
        noise_seed=noise_seed,
        scenario_ref=f"generate:seed={scenario.seed}",
    )
    out = _resolve_out(args.out or doc.get("output"), "dataset.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ms, params, out)
    print(f"dataset written to {out}")
    print(
        f"  dims: N_U={scenario.n_u} N_F={scenario.n_f} N_M={scenario.n_m} "
        f"K={ms.k} (reference={'yes' if include_reference else 'no'}, "
        f"train pool={k_train}, test pool={q_test})"
    )
    print(f"  coupling={scenario.coupling_strength} snr_db={scenario.snr_db}")
    print(f"  seeds: scenario={scenario.seed} configs={config_seed} noise={noise_seed}")
    return EXIT_OK


# ---------------------------------------------------------------- estimate


def _metric_summary(metrics: MetricReport) -> str:
    return (
        f"nmse_db={_fmt_db(metrics.nmse_db)} zeta_db={_fmt_db(metrics.zeta_db)} "
        f"(Q={metrics.q_count}, {metrics.inf_entry_count} entries with zero error spread)"
    )


def _fmt_db(x: float) -> str:
    return f"{x:.2f}" if math.isfinite(x) else str(x)


def _outcome_to_json(outcome: EstimationOutcome, dataset: str, timing_ms: float) -> dict:
    report = outcome.report
    return {
        "version": 1,
        "dataset": dataset,
        "type": outcome.est_type,
        "no_mc": outcome.no_mc,
        "k_train": outcome.k_train,
        "q_test": outcome.q_test,
        "min_k_required": report.min_k_required,
        "iterations_used": report.iterations_used,
        "converged": report.converged,
        "cost_trace": [_json_number(c) for c in report.cost_trace],
        "nmse": _json_number(outcome.metrics.nmse),
        "nmse_db": _json_number(outcome.metrics.nmse_db),
        "zeta_db": _json_number(outcome.metrics.zeta_db),
        "zeta_inf_entries": outcome.metrics.inf_entry_count,
        "zf_residual_rel": _json_number(report.zf_residual_rel),
        "gram_pinv_fallback": report.gram_pinv_fallback,
        "wall_time_ms": timing_ms,
        "estimates": {
            "h0": None if report.h0_hat is None else encode_complex_matrix(report.h0_hat),
            "a": None if report.a_hat is None else encode_complex_matrix(report.a_hat),
            "b": None if report.b_hat is None else encode_complex_matrix(report.b_hat),
        },
        "h0_used": encode_complex_matrix(outcome.h0_used),
    }


def _estimator_config(args) -> EstimatorConfig:
    kwargs = {}
    if args.max_iter is not None:
        kwargs["max_iter"] = args.max_iter
    if args.cost_tol is not None:
        kwargs["cost_tol"] = args.cost_tol
    if args.rank_tol is not None:
        kwargs["rank_tol"] = args.rank_tol
    if args.init_seed is not None:
        kwargs["init_seed"] = args.init_seed
    if args.restarts is not None:
        kwargs["restarts"] = args.restarts
    return EstimatorConfig(**kwargs)


def cmd_estimate(args) -> int:
    ms, params = load_dataset(args.dataset)
    cfg = _estimator_config(args)
    start = time.perf_counter()
    outcome = run_estimation(
        ms, params, args.type, k_train=args.k, q_test=args.q, no_mc=args.no_mc, cfg=cfg
    )
    timing_ms = (time.perf_counter() - start) * 1e3
    out = _resolve_out(args.out, f"estimate_type{args.type}.json")
    _write_json(_outcome_to_json(outcome, str(args.dataset), timing_ms), out)
    label = ESTIMATOR_LABELS[outcome.est_type]
    print(f"type {outcome.est_type} ({label}){' [no-MC benchmark]' if args.no_mc else ''}")
    print(
        f"  K={outcome.k_train} (min {outcome.report.min_k_required}), "
        f"iterations={outcome.report.iterations_used}, converged={outcome.report.converged}"
    )
    print(f"  {_metric_summary(outcome.metrics)}")
    print(f"report written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def cmd_sweep(args) -> int:
    doc = load_json_config(args.config)
    settings = parse_sweep_config(doc)
    if args.seed is not None:
        settings = replace(settings, scenario=replace(settings.scenario, seed=args.seed))
    out_dir = Path(args.out_dir) if args.out_dir else _default_dir() / settings.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = run_sweep(settings, jobs=args.jobs, timing=not args.no_timing)
    csv_path = out_dir / "sweep.csv"
    write_sweep_csv(rows, csv_path)

    threshold = None
    if settings.scenario.snr_db is not None:
        threshold = settings.scenario.snr_db - 3.0
    parsed = read_sweep_csv(csv_path)
    table = aggregate(parsed, threshold)
    text = format_tables(table, threshold)
    print(text, end="")
    summary = {
        "version": 1,
        "threshold_db": threshold,
        "cells": [
            {
                "type": est_type,
                "n_f": n_f,
                **{key: _json_number(v) if isinstance(v, float) else v for key, v in stats.items()},
            }
            for (est_type, n_f), stats in sorted(table.items())
        ],
    }
    _write_json(summary, out_dir / "sweep_summary.json")
    print(f"sweep CSV written to {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------- optimize


def cmd_optimize(args) -> int:
    ms, params = load_dataset(args.dataset)
    if args.use_ground_truth:
        if params is None:
            raise EstimationError("dataset has no embedded ground truth to optimize on")
        model_params = params
        outcome = None
    else:
        cfg = _estimator_config(args)
        outcome = run_estimation(
            ms, params, args.type, k_train=args.k, q_test=args.q, no_mc=args.no_mc, cfg=cfg
        )
        model_params = estimated_parameters(outcome, params)

    if not (0 <= args.user < model_params.n_u):
        raise ConfigError("--user", f"must lie in [0, {model_params.n_u})")
    if not (0 <= args.feed < model_params.n_f):
        raise ConfigError("--feed", f"must lie in [0, {model_params.n_f})")

    ga_kwargs = {"seed": args.ga_seed}
    if args.population is not None:
        ga_kwargs["population"] = args.population
    if args.generations is not None:
        ga_kwargs["max_generations"] = args.generations
    if args.mutation_rate is not None:
        ga_kwargs["mutation_rate"] = args.mutation_rate
    if args.crossover_rate is not None:
        ga_kwargs["crossover_rate"] = args.crossover_rate
    ga_cfg = GaConfig(**ga_kwargs)

    model = gain_function(model_params, args.user, args.feed)
    result = genetic_optimize(model, model_params.n_m, ga_cfg)

    truth_gain = None
    if params is not None:
        truth_gain = gain_function(params, args.user, args.feed)(result.best_v)

    doc = {
        "version": 1,
        "dataset": str(args.dataset),
        "user": args.user,
        "feed": args.feed,
        "model": "ground_truth" if args.use_ground_truth else f"type_{args.type}",
        "no_mc": bool(args.no_mc and not args.use_ground_truth),
        "best_v": result.best_v.astype(int).tolist(),
        "predicted_gain": _json_number(result.best_gain),
        "ground_truth_gain": _json_number(truth_gain),
        "generations_used": result.generations_used,
        "baseline_mean": _json_number(result.random_baseline[0]),
        "baseline_sd": _json_number(result.random_baseline[1]),
        "baseline_max": _json_number(result.baseline_max),
        "enhancement": _json_number(result.enhancement),
        "gain_trace": [_json_number(g) for g in result.gain_trace],
    }
    out = _resolve_out(args.out, "optimize_result.json")
    _write_json(doc, out)

    print(f"best configuration after {result.generations_used} generations")
    print(f"  predicted gain: {result.best_gain:.6g}")
    if truth_gain is not None:
        gap_db = 10.0 * math.log10(result.best_gain / truth_gain) if truth_gain > 0 else float("inf")
        print(f"  ground-truth model gain: {truth_gain:.6g} (predicted/actual: {gap_db:+.3f} dB)")
    mean, sd = result.random_baseline
    print(f"  random baseline: mean={mean:.6g} sd={sd:.6g} max={result.baseline_max:.6g}")
    print(f"  enhancement over baseline mean: {result.enhancement:.3f}")
    print(f"result written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- report


def cmd_report(args) -> int:
    rows = read_sweep_csv(args.csv)
    threshold = args.zeta_threshold_db
    if threshold is None and args.snr_db is not None:
        threshold = args.snr_db - 3.0
    table = aggregate(rows, threshold)
    text = format_tables(table, threshold)
    print(text, end="")
    out_dir = Path(args.out_dir) if args.out_dir else _default_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report_tables.txt").write_text(text, encoding="utf-8")
    doc = {
        "version": 1,
        "threshold_db": threshold,
        "cells": [
            {
                "type": est_type,
                "n_f": n_f,
                **{key: _json_number(v) if isinstance(v, float) else v for key, v in stats.items()},
            }
            for (est_type, n_f), stats in sorted(table.items())
        ],
    }
    _write_json(doc, out_dir / "report_tables.json")
    if not args.no_plots:
        figures = render_figures(rows, out_dir)
        for path in figures:
            print(f"figure written to {path}")
    print(f"tables written to {out_dir / 'report_tables.txt'}")
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmatensor",
        description="Coupling-aware channel estimation workbench for metasurface antennas",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset from a scenario config")
    p.add_argument("config", help="JSON scenario configuration")
    p.add_argument("--out", help="dataset output path")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--snr-db", type=float, help="override the measurement SNR")
    p.add_argument("--coupling", type=float, help="override the coupling strength")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="run one estimator on a dataset and score it")
    p.add_argument("dataset")
    p.add_argument("--type", required=True, choices=PROBLEM_TYPES)
    p.add_argument("--k", type=int, help="training configurations (default: all available)")
    p.add_argument("--q", type=int, default=100, help="held-out evaluation configurations")
    p.add_argument("--no-mc", action="store_true", help="force zero coupling (benchmark)")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--cost-tol", type=float)
    p.add_argument("--rank-tol", type=float)
    p.add_argument("--init-seed", type=int)
    p.add_argument("--restarts", type=int, help="random re-initializations, best fit kept")
    p.add_argument("--out", help="report output path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="run an accuracy sweep over K and N_F grids")
    p.add_argument("config", help="JSON experiment configuration")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweep cells")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the wall_time_ms column for reproducible bytes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="GA configuration search on an estimated model")
    p.add_argument("dataset")
    p.add_argument("--user", type=int, required=True)
    p.add_argument("--feed", type=int, required=True)
    p.add_argument("--type", default="1", choices=PROBLEM_TYPES,
                   help="estimator used to build the model (default: 1)")
    p.add_argument("--k", type=int)
    p.add_argument("--q", type=int, default=100)
    p.add_argument("--no-mc", action="store_true")
    p.add_argument("--use-ground-truth", action="store_true",
                   help="optimize on the embedded ground truth instead of estimating")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--cost-tol", type=float)
    p.add_argument("--rank-tol", type=float)
    p.add_argument("--init-seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--crossover-rate", type=float)
    p.add_argument("--ga-seed", type=int, default=0)
    p.add_argument("--out", help="result output path")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="summarize a sweep CSV into tables and figures")
    p.add_argument("csv")
    p.add_argument("--snr-db", type=float, help="SNR used to derive the zeta threshold (SNR - 3)")
    p.add_argument("--zeta-threshold-db", type=float, help="explicit zeta threshold")
    p.add_argument("--out-dir")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetFormatError, DatasetVersionError, DegenerateInputError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as err:
        # identifiability, rank deficiency and missing inputs
        if isinstance(err, DivergenceError):
            print(f"numerical failure: {err}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY
    except (SingularModelError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
