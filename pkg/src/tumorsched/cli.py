"""Command-line front end.

Subcommands: simulate, benchmark, optimize, evaluate, export-ensemble.
All user-facing times are in days; conversion to the non-dimensional
clock uses the sensitive proliferation rate (--rs, default 0.027 per
day). Option precedence is flags > config file > defaults, where the
config file is a flat JSON object whose keys mirror the long flag names.
Outputs are deterministic: the same command writes byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import TumorParams
from .ensemble import PAPER_D_D, PAPER_D_T, EnsembleMeasure, paper_ensemble
from .errors import ConfigurationError, NumericalFailureError
from .objective import CostKind
from .optimize import DescentConfig, optimize
from .simulate import (DEFAULT_R_S, DEFAULT_STEPS_PER_DAY, BenchmarkSummary,
                       ControlSchedule, Protocol, TimeGrid, benchmark,
                       compute_outcome, outcomes_to_csv, run_protocol,
                       trajectory_to_csv)

# Optimization horizons of the reference experiments, by initial size.
PAPER_HORIZON_DAYS = {0.25: 750.0, 0.5: 1000.0, 0.75: 1500.0}
# Long default cap for feedback-protocol benchmarks; progression of every
# ensemble member occurs well before this for the reference parameters.
PROTOCOL_CAP_DAYS = 3000.0

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


@dataclass
class ExperimentConfig:
    command: str
    n0: float | None = None
    cost: str = "hyperbolic"
    protocol: str | None = None
    rR: float | None = None
    f0: float | None = None
    horizon_days: float | None = None
    censor_at_horizon: bool = False
    eta: float = 0.125
    iterations: int = 500
    init: float = 0.5
    step_per_day: int = DEFAULT_STEPS_PER_DAY
    ensemble: str = "paper"
    schedule: str | None = None
    out: str = "."
    threads: int = 0
    rs: float = DEFAULT_R_S


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tumorsched",
        description="Ensemble drug-schedule simulation, optimization, and "
                    "time-to-progression benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_n0: bool = True):
        if needs_n0:
            p.add_argument("--n0", type=float, help="initial tumor size in (0,1)")
        p.add_argument("--config", type=str, help="flat JSON config file; flags win")
        p.add_argument("--horizon-days", type=float, dest="horizon_days")
        p.add_argument("--step-per-day", type=int, dest="step_per_day",
                       help=f"Euler nodes per day (default {DEFAULT_STEPS_PER_DAY})")
        p.add_argument("--rs", type=float, help="sensitive proliferation rate per day")
        p.add_argument("--out", type=str, help="output directory (default .)")
        p.add_argument("--threads", type=int,
                       help="accepted for interface compatibility; the "
                            "single-threaded kernels make results "
                            "independent of it")

    p_sim = sub.add_parser("simulate", help="one tumor under a protocol or schedule")
    common(p_sim)
    p_sim.add_argument("--protocol", type=str,
                       choices=["mtd", "onoff-at", "offon-at", "schedule-file"])
    p_sim.add_argument("--rR", type=float, dest="rR", help="resistant proliferation rate")
    p_sim.add_argument("--f0", type=float, dest="f0", help="initial resistant fraction")
    p_sim.add_argument("--schedule", type=str, help="schedule JSON (protocol schedule-file)")

    p_bench = sub.add_parser("benchmark", help="per-member TTP over an ensemble")
    common(p_bench)
    p_bench.add_argument("--protocol", type=str,
                         choices=["mtd", "onoff-at", "offon-at", "schedule-file"])
    p_bench.add_argument("--schedule", type=str)
    p_bench.add_argument("--ensemble", type=str, help="'paper' or a JSON path")
    p_bench.add_argument("--censor-at-horizon", action="store_true",
                         dest="censor_at_horizon",
                         help="cap the run at the optimization horizon for "
                              "this n0 instead of the long default cap")

    p_opt = sub.add_parser("optimize", help="projected gradient descent schedule")
    common(p_opt)
    p_opt.add_argument("--cost", type=str, choices=["linear", "hyperbolic"])
    p_opt.add_argument("--ensemble", type=str)
    p_opt.add_argument("--eta", type=float)
    p_opt.add_argument("--iterations", type=int)
    p_opt.add_argument("--init", type=float, help="initial constant control value")

    p_eval = sub.add_parser("evaluate", help="stored schedule over an ensemble")
    common(p_eval)
    p_eval.add_argument("--schedule", type=str, required=True)
    p_eval.add_argument("--cost", type=str, choices=["linear", "hyperbolic"])
    p_eval.add_argument("--ensemble", type=str)

    p_exp = sub.add_parser("export-ensemble", help="write the ensemble as JSON")
    common(p_exp, needs_n0=False)
    p_exp.add_argument("--ensemble", type=str)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    return {str(k).replace("-", "_"): v for k, v in payload.items()}


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command)
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in file_values.items():
        if not hasattr(cfg, key):
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        if isinstance(value, bool) and not value:
            continue  # store_true flags only override when set
        setattr(cfg, key, value)
    return cfg


def _validate_common(cfg: ExperimentConfig, needs_n0: bool = True) -> None:
    if needs_n0:
        if cfg.n0 is None:
            raise ConfigurationError("--n0 is required")
        if not (0.0 < cfg.n0 < 1.0):
            raise ConfigurationError(f"--n0 must lie in (0, 1), got {cfg.n0}")
    if cfg.step_per_day < 1:
        raise ConfigurationError("--step-per-day must be >= 1")
    if not (cfg.rs > 0.0):
        raise ConfigurationError("--rs must be positive")


def _resolve_ensemble(cfg: ExperimentConfig) -> EnsembleMeasure:
    if cfg.ensemble == "paper":
        return paper_ensemble()
    return EnsembleMeasure.load(cfg.ensemble)


def _default_horizon(cfg: ExperimentConfig) -> float:
    if cfg.horizon_days is not None:
        if not (cfg.horizon_days > 0.0):
            raise ConfigurationError("--horizon-days must be positive")
        return cfg.horizon_days
    horizon = PAPER_HORIZON_DAYS.get(cfg.n0)
    if horizon is None:
        raise ConfigurationError(
            f"no default horizon for n0={cfg.n0}; pass --horizon-days")
    return horizon


def _protocol_horizon(cfg: ExperimentConfig) -> float:
    if cfg.horizon_days is not None:
        if not (cfg.horizon_days > 0.0):
            raise ConfigurationError("--horizon-days must be positive")
        return cfg.horizon_days
    if cfg.censor_at_horizon:
        return _default_horizon(cfg)
    return PROTOCOL_CAP_DAYS


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary_rows(summary: BenchmarkSummary) -> list[list]:
    return [
        ["ttp", round(summary.max_ttp), round(summary.min_ttp),
         round(summary.mean_ttp)],
        ["ttp_prime", round(summary.max_ttp_prime), round(summary.min_ttp_prime),
         round(summary.mean_ttp_prime)],
    ]


def _write_summary(summary: BenchmarkSummary, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["statistic", "max_days", "min_days", "mean_days"])
        for row in _summary_rows(summary):
            writer.writerow(row)


def _print_summary(summary: BenchmarkSummary) -> None:
    print("statistic   max   min  mean  (days, rounded)")
    for name, mx, mn, mean in _summary_rows(summary):
        print(f"{name:10s} {mx:5d} {mn:5d} {mean:5d}")
    print(f"censored members: {summary.n_censored}")


def _member_from_cfg(cfg: ExperimentConfig) -> TumorParams:
    if cfg.rR is None or cfg.f0 is None:
        raise ConfigurationError("simulate needs --rR and --f0")
    return TumorParams(d_D=PAPER_D_D, d_T=PAPER_D_T, r_R=cfg.rR, f_0=cfg.f0)


def cmd_simulate(cfg: ExperimentConfig) -> int:
    _validate_common(cfg)
    if cfg.protocol is None:
        raise ConfigurationError("simulate needs --protocol")
    theta = _member_from_cfg(cfg)
    out = _out_dir(cfg)
    if cfg.protocol == "schedule-file":
        if cfg.schedule is None:
            raise ConfigurationError("--protocol schedule-file needs --schedule")
        schedule = ControlSchedule.load(cfg.schedule, r_S=cfg.rs)
        from .simulate import euler_forward, initial_state

        traj = euler_forward(theta, initial_state(theta, cfg.n0), schedule)
    else:
        horizon = _protocol_horizon(cfg)
        grid = TimeGrid.from_days(horizon, cfg.step_per_day, cfg.rs)
        traj = run_protocol(theta, cfg.n0, Protocol.from_name(cfg.protocol), grid)
    record = compute_outcome(traj, cfg.n0)
    trajectory_to_csv(traj, out / "trajectory.csv")
    print(f"ttp_days={record.ttp_days} ttp_prime_days={record.ttp_prime_days} "
          f"censored={int(record.censored)}")
    return EXIT_OK


def cmd_benchmark(cfg: ExperimentConfig) -> int:
    _validate_common(cfg)
    if cfg.protocol is None:
        raise ConfigurationError("benchmark needs --protocol")
    ensemble = _resolve_ensemble(cfg)
    out = _out_dir(cfg)
    if cfg.protocol == "schedule-file":
        if cfg.schedule is None:
            raise ConfigurationError("--protocol schedule-file needs --schedule")
        schedule = ControlSchedule.load(cfg.schedule, r_S=cfg.rs)
        records, summary = benchmark(ensemble, cfg.n0, schedule)
    else:
        horizon = _protocol_horizon(cfg)
        grid = TimeGrid.from_days(horizon, cfg.step_per_day, cfg.rs)
        records, summary = benchmark(
            ensemble, cfg.n0, Protocol.from_name(cfg.protocol), grid)
    outcomes_to_csv(records, ensemble, out / "outcomes.csv")
    _write_summary(summary, out / "summary.csv")
    _print_summary(summary)
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig) -> int:
    _validate_common(cfg)
    ensemble = _resolve_ensemble(cfg)
    horizon = _default_horizon(cfg)
    grid = TimeGrid.from_days(horizon, cfg.step_per_day, cfg.rs)
    kind = CostKind(cfg.cost, cfg.n0)
    descent = DescentConfig(eta=cfg.eta, iterations=cfg.iterations,
                            initial_value=cfg.init)
    trace = optimize(ensemble, cfg.n0, kind, grid, descent)
    out = _out_dir(cfg)
    trace.schedule.save(out / "schedule.json")
    with open(out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "J", "grad_inf_norm"])
        for i in range(trace.objective_values.size):
            writer.writerow([i, repr(float(trace.objective_values[i])),
                             repr(float(trace.grad_inf_norms[i]))])
    if trace.objective_values.size:
        print(f"J: {trace.objective_values[0]!r} -> "
              f"{trace.objective_values[-1]!r} "
              f"({trace.objective_values.size} iterations)")
    else:
        print("0 iterations: wrote the initial guess")
    return EXIT_OK


def cmd_evaluate(cfg: ExperimentConfig) -> int:
    _validate_common(cfg)
    schedule = ControlSchedule.load(cfg.schedule, r_S=cfg.rs)
    ensemble = _resolve_ensemble(cfg)
    records, summary = benchmark(ensemble, cfg.n0, schedule)
    out = _out_dir(cfg)
    outcomes_to_csv(records, ensemble, out / "outcomes.csv")
    _write_summary(summary, out / "summary.csv")
    _print_summary(summary)
    return EXIT_OK


def cmd_export_ensemble(cfg: ExperimentConfig) -> int:
    _validate_common(cfg, needs_n0=False)
    ensemble = _resolve_ensemble(cfg)
    out = _out_dir(cfg)
    ensemble.save(out / "ensemble.json")
    print(f"wrote {len(ensemble)} members")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "export-ensemble": cmd_export_ensemble,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
