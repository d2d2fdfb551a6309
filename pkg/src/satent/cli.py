"""Command-line interface.

    satent <command> --config <path> [--out <path>] [--seed <u64>]
                     [--trials <int>] [--fail-on-infeasible]

Commands: evaluate (one analytic point), sweep (optimizer grid),
mc (Monte Carlo only), validate (paired analytic/MC audit).  Exit codes:
0 success, 1 validation failure (bad config, or validate found
disagreement), 2 only-infeasible results with --fail-on-infeasible.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import optimizer
from .errors import ConfigError
from .io import ResultRow, RunConfig, load_config, write_results
from .montecarlo import McSummary, RngSpec, simulate_batch

_AGREE_SIGMA = 3.0
_AGREE_SLACK = 1e-12


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    cfg = replace(cfg, command=args.command)
    if args.out is not None:
        cfg = replace(cfg, output_path=args.out)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        algorithm = cfg.rng.algorithm_id if cfg.rng is not None else "philox"
        cfg = replace(cfg, rng=RngSpec(seed=args.seed, algorithm_id=algorithm))
    if cfg.command in ("mc", "validate") and cfg.rng is None:
        print("config error: rng.seed: missing required key "
              f"(command {cfg.command!r} is stochastic)", file=sys.stderr)
        return 1

    handler = {
        "evaluate": _run_evaluate,
        "sweep": _run_sweep,
        "mc": _run_mc,
        "validate": _run_validate,
    }[cfg.command]
    return handler(cfg, args)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satent",
        description="Rate/fidelity analytics for satellite entanglement distribution")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("evaluate", "analytic metrics for the configured point"),
            ("sweep", "optimize the squeezing/cutoff grids across distances"),
            ("validate", "compare analytic metrics with the Monte Carlo oracle"),
            ("mc", "run the Monte Carlo oracle only")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="TOML config path")
        cmd.add_argument("--out", default=None, help="output CSV path")
        cmd.add_argument("--seed", type=int, default=None, help="override rng.seed")
        cmd.add_argument("--trials", type=int, default=None, help="override run.trials")
        cmd.add_argument("--fail-on-infeasible", action="store_true",
                         help="exit 2 when every optimized point is infeasible")
    return parser


def _analytic_row(point: optimizer.PointEvaluation, feasible: bool = True) -> ResultRow:
    return ResultRow(
        distance_m=point.distance_m, mode=point.mode, m=point.m, n=point.n,
        lambda_=point.lambda_,
        t_cut_s=point.t_cut if point.t_cut is not None else "none",
        p_T=point.p_T, p_ent=point.metrics.p_ent,
        avg_attempts=point.metrics.avg_attempts,
        rate_hz=point.metrics.rate_hz,
        avg_fidelity=point.metrics.avg_fidelity,
        feasible=feasible, source="analytic",
    )


def _mc_row(cfg: RunConfig, summary: McSummary, agree: bool | None = None) -> ResultRow:
    return ResultRow(
        distance_m=cfg.link.ground_separation, mode=cfg.source.mode,
        m=cfg.source.m, n=cfg.source.n, lambda_=cfg.source.lambda_,
        t_cut_s=cfg.memory.t_cut if cfg.memory.t_cut is not None else "none",
        p_T=None, p_ent=None,
        avg_attempts=summary.mean_attempts,
        avg_attempts_stderr=summary.stderr_attempts,
        rate_hz=summary.rate_hz,
        avg_fidelity=summary.mean_fidelity,
        avg_fidelity_stderr=summary.stderr_fidelity,
        feasible=True, source="mc", agree=agree,
    )


def _run_evaluate(cfg: RunConfig, args) -> int:
    point = optimizer.evaluate_operating_point(cfg.link, cfg.source, cfg.memory)
    write_results([_analytic_row(point)], cfg.output_path)
    print(f"wrote 1 row to {cfg.output_path}")
    return 0


def _run_sweep(cfg: RunConfig, args) -> int:
    results = optimizer.sweep(cfg.link, cfg.source, cfg.memory, cfg.sweep)
    rows = []
    for res in results:
        if res.feasible:
            rows.append(_analytic_row(res.best))
        else:
            rows.append(ResultRow(
                distance_m=res.distance_m, mode=res.mode, m=cfg.source.m, n=res.n,
                lambda_=None, t_cut_s=None, p_T=None, p_ent=None,
                avg_attempts=None, rate_hz=0.0, avg_fidelity=None,
                feasible=False, source="analytic"))
    write_results(rows, cfg.output_path)
    feasible_count = sum(1 for r in results if r.feasible)
    print(f"wrote {len(rows)} rows to {cfg.output_path} ({feasible_count} feasible)")
    if args.fail_on_infeasible and feasible_count == 0:
        return 2
    return 0


def _run_mc(cfg: RunConfig, args) -> int:
    summary = simulate_batch(cfg.source, cfg.memory, cfg.link, cfg.source.mode,
                             cfg.trials, cfg.rng, partitions=cfg.partitions)
    write_results([_mc_row(cfg, summary)], cfg.output_path)
    print(f"wrote 1 row to {cfg.output_path} "
          f"({summary.completed}/{summary.trials} trials completed)")
    return 0


def _run_validate(cfg: RunConfig, args) -> int:
    point = optimizer.evaluate_operating_point(cfg.link, cfg.source, cfg.memory)
    summary = simulate_batch(cfg.source, cfg.memory, cfg.link, cfg.source.mode,
                             cfg.trials, cfg.rng, partitions=cfg.partitions)
    agree = (_within(point.metrics.avg_attempts, summary.mean_attempts,
                     summary.stderr_attempts)
             and _within(point.metrics.avg_fidelity, summary.mean_fidelity,
                         summary.stderr_fidelity))
    rows = [
        replace(_analytic_row(point), agree=agree),
        _mc_row(cfg, summary, agree=agree),
    ]
    write_results(rows, cfg.output_path)
    print(f"wrote 2 rows to {cfg.output_path} (agree={str(agree).lower()})")
    return 0 if agree else 1


def _within(analytic: float, measured: float, stderr: float) -> bool:
    return abs(analytic - measured) <= _AGREE_SIGMA * stderr + _AGREE_SLACK


if __name__ == "__main__":
    sys.exit(main())
