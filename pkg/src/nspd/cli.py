"""Command-line surface: simulate, ensemble, convergence, check,
print-defaults.

All delimited outputs are deterministic functions of (config, seed); the
ensemble aggregator writes in trajectory-id order regardless of worker
completion order.  Figures are rendered next to each CSV unless --no-plots
is given.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys
from dataclasses import replace

import numpy as np

from .checks import format_report, human_report, run_all_checks
from .config import (
    ConfigError,
    SolverConfig,
    config_hash,
    default_config,
    read_config,
    serialize_config,
)
from .diagnostics import blowup_monitor, lifespan_statistics
from .integrators import run_trajectory
from .records import EXIT_CODES, TrajectoryRecord, write_snapshot
from .spectral import to_spectral
from .studies import run_convergence_report, validate_dt_list

def _FMT(x: float) -> str:
    return repr(float(x))


def _ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_config(args: argparse.Namespace) -> SolverConfig:
    cfg = read_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = cfg.with_overrides(noise=replace(cfg.noise, seed=args.seed))
    if args.out is not None:
        cfg = cfg.with_overrides(out_dir=args.out)
    if getattr(args, "snapshots_every", None) is not None:
        cfg = cfg.with_overrides(snapshot_stride=args.snapshots_every)
    return cfg


def _write_trajectory_outputs(
    record: TrajectoryRecord, cfg: SolverConfig, out_dir: str, stem: str, plots: bool
) -> None:
    _write(os.path.join(out_dir, f"{stem}.csv"), record.diagnostics_csv())
    _write(os.path.join(out_dir, f"{stem}_crossings.csv"), record.crossings_csv())
    for idx, (t, v_samples, d_samples) in enumerate(record.snapshots):
        write_snapshot(
            to_spectral(cfg.grid, v_samples),
            os.path.join(out_dir, f"{stem}_snap_v_{idx:06d}.nspd"),
        )
        write_snapshot(
            to_spectral(cfg.grid, d_samples),
            os.path.join(out_dir, f"{stem}_snap_d_{idx:06d}.nspd"),
        )
    if plots:
        from . import plots as plotting

        plotting.trajectory_figure(record, os.path.join(out_dir, f"{stem}.png"))


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _ensure_dir(cfg.out_dir)
    record = run_trajectory(cfg, trajectory_id=0)
    _write_trajectory_outputs(record, cfg, cfg.out_dir, "trajectory", not args.no_plots)
    return EXIT_CODES[record.status]


_WORKER_CONFIG: SolverConfig | None = None


def _init_worker(config_text: str) -> None:
    global _WORKER_CONFIG
    from .config import parse_config

    _WORKER_CONFIG = parse_config(config_text)


def _run_one(trajectory_id: int) -> TrajectoryRecord:
    assert _WORKER_CONFIG is not None
    return run_trajectory(_WORKER_CONFIG, trajectory_id=trajectory_id)


def cmd_ensemble(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    n_traj = args.n_traj if args.n_traj is not None else cfg.n_traj
    if n_traj < 1:
        print("ensemble needs --n-traj >= 1", file=sys.stderr)
        return 1
    _ensure_dir(cfg.out_dir)
    ids = list(range(n_traj))
    if args.workers > 1:
        with multiprocessing.Pool(
            args.workers, initializer=_init_worker, initargs=(serialize_config(cfg),)
        ) as pool:
            records = pool.map(_run_one, ids)
    else:
        records = [run_trajectory(cfg, trajectory_id=i) for i in ids]

    header = ["trajectory_id [-]", "status [-]", "t_final [-]", "v_alpha_final [-]"]
    header += [f"tau_{i + 1} [-]" for i in range(len(cfg.thresholds))]
    lines = [f"# config_hash={config_hash(cfg)}", ",".join(header)]
    samples = []
    for i, rec in zip(ids, records):
        taus = [
            _FMT(rec.tau[m]) if m in rec.tau else "nan" for m in cfg.thresholds
        ]
        lines.append(
            ",".join(
                [str(i), rec.status, _FMT(rec.times[-1]), _FMT(rec.v_alpha[-1])] + taus
            )
        )
        samples.append(
            blowup_monitor(
                np.array(rec.times),
                np.array(rec.v_alpha),
                cfg.thresholds,
                trajectory_id=i,
                status=rec.status,
                amplitude=cfg.velocity_amplitude,
            )
        )
        _write_trajectory_outputs(
            rec, cfg, cfg.out_dir, f"traj_{i:06d}", plots=False
        )
    _write(os.path.join(cfg.out_dir, "summary.csv"), "\n".join(lines) + "\n")

    t_grid = np.linspace(0.0, cfg.scheme.t_max, 51)
    curves = lifespan_statistics(samples, t_grid)
    surv_lines = [
        f"# config_hash={config_hash(cfg)}",
        "amplitude [-],t [-],survival [prob],wilson_low [prob],wilson_high [prob],n [count]",
    ]
    for amp in sorted(curves):
        c = curves[amp]
        for j in range(c.t_grid.size):
            surv_lines.append(
                ",".join(
                    [
                        _FMT(amp),
                        _FMT(c.t_grid[j]),
                        _FMT(c.survival[j]),
                        _FMT(c.wilson_low[j]),
                        _FMT(c.wilson_high[j]),
                        str(c.n_samples),
                    ]
                )
            )
    _write(os.path.join(cfg.out_dir, "survival.csv"), "\n".join(surv_lines) + "\n")
    if not args.no_plots:
        from . import plots as plotting

        plotting.survival_figure(curves, os.path.join(cfg.out_dir, "survival.png"))

    statuses = {rec.status for rec in records}
    if "numerical_failure" in statuses:
        return 3
    if "stopped_at_threshold" in statuses:
        return 2
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    try:
        dt_list = validate_dt_list([float(tok) for tok in args.dt_list.split(",")])
        if len(dt_list) < 4:
            raise ValueError("convergence needs at least 4 halving dt values")
    except ValueError as exc:
        print(f"invalid --dt-list: {exc}", file=sys.stderr)
        return 1
    _ensure_dir(cfg.out_dir)
    results = run_convergence_report(cfg, dt_list, n_paths=args.n_paths)
    lines = [f"# config_hash={config_hash(cfg)}", "study [-],dt [-],error [-]"]
    slope_lines = [f"# config_hash={config_hash(cfg)}", "study [-],slope [-]"]
    for res in results:
        for dt, err in zip(res.dts, res.errors):
            lines.append(f"{res.name},{_FMT(dt)},{_FMT(err)}")
        slope_lines.append(f"{res.name},{_FMT(res.slope)}")
        print(f"{res.name}: slope {res.slope:.3f}")
    _write(os.path.join(cfg.out_dir, "convergence.csv"), "\n".join(lines) + "\n")
    _write(os.path.join(cfg.out_dir, "slopes.csv"), "\n".join(slope_lines) + "\n")
    if not args.no_plots:
        from . import plots as plotting

        plotting.convergence_figure(results, os.path.join(cfg.out_dir, "convergence.png"))
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    _ensure_dir(cfg.out_dir)
    results, all_pass = run_all_checks(cfg)
    print(human_report(results))
    _write(os.path.join(cfg.out_dir, "check_report.csv"), format_report(results))
    print("all checks passed" if all_pass else "CHECK FAILURES PRESENT")
    return 0 if all_pass else 1


def cmd_print_defaults(_args: argparse.Namespace) -> int:
    sys.stdout.write(serialize_config(default_config()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nspd",
        description="pseudospectral stochastic nematic liquid crystal simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, metavar="U64", help="override noise seed")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = sub.add_parser("simulate", help="run one trajectory")
    common(p)
    p.add_argument("--snapshots-every", type=int, metavar="N", help="field snapshot stride")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="run an ensemble and aggregate survival")
    common(p)
    p.add_argument("--snapshots-every", type=int, metavar="N", help="field snapshot stride")
    p.add_argument("--n-traj", type=int, metavar="N", help="number of trajectories")
    p.add_argument(
        "--workers",
        type=int,
        metavar="N",
        default=int(os.environ.get("NSPD_WORKERS", "1")),
        help="parallel workers (default: NSPD_WORKERS or 1)",
    )
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("convergence", help="strong/weak/deterministic order studies")
    common(p)
    p.add_argument(
        "--dt-list",
        metavar="LIST",
        default="4e-3,2e-3,1e-3,5e-4",
        help="comma-separated halving dt values (>= 4)",
    )
    p.add_argument("--n-paths", type=int, default=100, help="paths for the strong study")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("check", help="run the full invariant battery")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("print-defaults", help="print the default config")
    p.set_defaults(func=cmd_print_defaults)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
