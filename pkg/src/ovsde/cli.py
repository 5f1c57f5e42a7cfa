"""Command-line interface.

Subcommands: ``deterministic``, ``sde``, ``sweep``, ``barrier``, ``validate``,
``curves`` (analytic curve exports for the plotting frontend).  Exit codes:
0 success, 1 scientific-check failure, 2 usage/config/IO error.

All inputs come from a JSON config file (see ``configs/canonical.json``);
``--seed`` and ``--threads`` override the corresponding config entries.  Every
output file embeds the resolved configuration for provenance.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, barrier, mc, model, ode, sde, validate
from ._backend import resolve_backend
from ._serialize import write_csv, write_json
from .model import ModelParams, State


class ConfigError(Exception):
    pass


_DEFAULTS = {
    "deterministic": {"horizon": 200.0, "sample_dt": 0.01, "rtol": 1e-9, "atol": 1e-11},
    "sde": {"epsilon": 0.05, "delta": None, "dt": 1e-3, "horizon": 10.0, "seed": 1,
            "trial_index": 0, "store_stride": 10},
    "sweep": {"epsilons": [0.0, 0.01, 0.02, 0.05, 0.1, 0.2], "horizons": [5.0, 10.0, 20.0, 40.0],
              "trials_per_cell": 10_000, "dt": 1e-3, "base_seed": 20260810},
    "barrier": {"grid_resolution": 10_000},
    "curves": {"delta": 0.25},
    "validate": {"digamma_grid": 800},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovsde",
        description="Stochastic optimal-velocity car-following simulations",
    )
    parser.add_argument("--version", action="version", version=f"ovsde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("deterministic", "integrate the noiseless dynamics and export the trajectory"),
        ("sde", "simulate one stochastic path and export trajectory + stopping record"),
        ("sweep", "Monte Carlo sweep over (epsilon, horizon) cells"),
        ("barrier", "build and export the collision barrier table"),
        ("validate", "run the invariant health checks and export a report"),
        ("curves", "export analytic model curves for the plotting frontend"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", default=".", help="output directory (must exist)")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=None, help="compute threads for sweeps")
        cmd.add_argument("--backend", default=None, choices=("numba", "numpy"),
                         help="kernel backend override")
    return parser


def load_config(path: str) -> dict:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        raw = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {cfg_path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(raw).__name__}")
    if "model" not in raw:
        raise ConfigError("config must contain a 'model' block")
    return raw


def _section(config: dict, name: str) -> dict:
    merged = dict(_DEFAULTS.get(name, {}))
    block = config.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    merged.update(block)
    return merged


def _resolved_echo(command: str, config: dict, section: dict, args) -> dict:
    return {
        "command": command,
        "model": config["model"],
        command: section,
        "seed_override": args.seed,
        "backend": resolve_backend(args.backend),
        "version": __version__,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        params = ModelParams.from_dict(config["model"])
        out_dir = Path(args.out)
        if not out_dir.is_dir():
            raise ConfigError(f"output directory does not exist: {out_dir}")
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError(f"--threads must be >= 1, got {args.threads}")
            from ._backend import NUMBA_AVAILABLE, set_num_threads

            if NUMBA_AVAILABLE:
                set_num_threads(args.threads)
        handler = {
            "deterministic": cmd_deterministic,
            "sde": cmd_sde,
            "sweep": cmd_sweep,
            "barrier": cmd_barrier,
            "validate": cmd_validate,
            "curves": cmd_curves,
        }[args.command]
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        return handler(config, params, out_dir, args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def cmd_deterministic(config, params, out_dir, args) -> int:
    section = _section(config, "deterministic")
    traj = ode.integrate_deterministic(
        params.z_circ,
        params,
        horizon=float(section["horizon"]),
        step_control=(float(section["rtol"]), float(section["atol"])),
        sample_dt=float(section["sample_dt"]),
    )
    echo = _resolved_echo("deterministic", config, section, args)
    _write_trajectory(out_dir / "deterministic_trajectory.csv", traj, echo)
    fx, fy = traj.final_state
    print(f"status: {traj.status.value}")
    print(f"final state: ({fx:.12g}, {fy:.12g}) at t={traj.final_time:.6g}")
    print(f"wrote {out_dir / 'deterministic_trajectory.csv'}")
    return 0


def _write_trajectory(path, traj, echo) -> None:
    rows = (
        (float(t), float(x), float(y), float(h))
        for t, (x, y), h in zip(traj.times, traj.states, traj.h_values)
    )
    write_csv(path, ["t", "x", "y", "H"], rows, config_echo=echo)


def cmd_sde(config, params, out_dir, args) -> int:
    section = _section(config, "sde")
    seed = args.seed if args.seed is not None else int(section["seed"])
    delta = section["delta"]
    cfg = sde.SdePathConfig(
        epsilon=float(section["epsilon"]),
        delta=float(delta) if delta is not None else sde.working_delta(params),
        dt=float(section["dt"]),
        horizon=float(section["horizon"]),
        seed=seed,
        trial_index=int(section["trial_index"]),
        store_stride=int(section["store_stride"]),
    )
    table = barrier.build_barrier(params)
    traj, record = sde.simulate_path(params.z_circ, cfg, params, table, backend=args.backend)
    echo = _resolved_echo("sde", config, {**section, "seed": seed, "delta": cfg.delta}, args)
    _write_trajectory(out_dir / "sde_path.csv", traj, echo)
    write_json(out_dir / "sde_record.json", {"config": echo, **record.to_json_dict()})
    print(f"terminal status: {record.terminal_status.value}")
    print(f"tau_eps_delta={record.tau_eps_delta} tau_H={record.tau_H} "
          f"tau_D={record.tau_D} collision_proxy={record.collision_proxy}")
    print(f"wrote {out_dir / 'sde_path.csv'} and {out_dir / 'sde_record.json'}")
    return 0


def cmd_sweep(config, params, out_dir, args) -> int:
    section = _section(config, "sweep")
    base_seed = args.seed if args.seed is not None else int(section["base_seed"])
    spec = mc.SweepSpec(
        epsilons=tuple(section["epsilons"]),
        horizons=tuple(section["horizons"]),
        trials_per_cell=int(section["trials_per_cell"]),
        base_seed=base_seed,
        dt=float(section["dt"]),
        params=params,
        z0=params.z_circ,
    )
    table = barrier.build_barrier(params)
    result = mc.run_sweep(spec, table, threads=args.threads, backend=args.backend)
    summary = mc.summarize(result)
    echo = _resolved_echo("sweep", config, {**section, "base_seed": base_seed}, args)
    write_csv(
        out_dir / "sweep_cells.csv",
        mc.CSV_COLUMNS,
        ([getattr(c, col) for col in mc.CSV_COLUMNS] for c in summary.rows),
        config_echo=echo,
    )
    write_json(out_dir / "sweep_result.json", {"config": echo, **result.to_dict()})
    print(summary.format_table())
    print(f"wrote {out_dir / 'sweep_cells.csv'} and {out_dir / 'sweep_result.json'}")
    if not summary.ok:
        print(f"FAILURE: {len(summary.failures)} bound violations, "
              f"{len(summary.invalid)} invalid cells", file=sys.stderr)
        return 1
    return 0


def cmd_barrier(config, params, out_dir, args) -> int:
    section = _section(config, "barrier")
    table = barrier.build_barrier(params, int(section["grid_resolution"]))
    echo = _resolved_echo("barrier", config, section, args)
    rows = zip(table.y_grid, table.phi_vals, table.dphi_vals, table.d2phi_vals)
    write_csv(out_dir / "barrier_table.csv", ["y", "phi", "dphi", "d2phi"],
              ((float(a), float(b), float(c), float(d)) for a, b, c, d in rows),
              config_echo=echo)
    constants = {
        "config": echo,
        "derived": dataclasses.asdict(params.derived),
        "phi_lower": table.phi_lower,
        "varpi_dagger": table.varpi_dagger,
        "deriv_bound": table.deriv_bound,
        "bar_delta": sde.bar_delta(params),
        "working_delta": sde.working_delta(params),
    }
    write_json(out_dir / "barrier_constants.json", constants)
    print(f"barrier: {len(table.y_grid)} points, floor {table.phi_lower:.12g}, "
          f"certified derivative bound {table.deriv_bound:.12g}")
    print(f"wrote {out_dir / 'barrier_table.csv'} and {out_dir / 'barrier_constants.json'}")
    return 0


def cmd_validate(config, params, out_dir, args) -> int:
    section = _section(config, "validate")
    checks = validate.run_validation(params, digamma_grid=int(section["digamma_grid"]),
                                     backend=args.backend)
    echo = _resolved_echo("validate", config, section, args)
    write_json(out_dir / "validation_report.json",
               {"config": echo, "checks": [c.to_dict() for c in checks]})
    failed = [c for c in checks if not c.passed]
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"[{mark}] {c.name}: measured={c.measured:.6g} bound={c.bound:.6g}")
    print(f"wrote {out_dir / 'validation_report.json'}")
    if failed:
        print(f"FAILURE: {len(failed)} checks failed", file=sys.stderr)
        return 1
    return 0


def cmd_curves(config, params, out_dir, args) -> int:
    section = _section(config, "curves")
    delta = float(section["delta"])
    c = params.derived
    echo = _resolved_echo("curves", config, section, args)

    x_v = np.linspace(0.0, 8.0, 801)
    write_csv(out_dir / "v_curve.csv", ["x", "v"],
              zip(x_v.tolist(), model.optimal_velocity(x_v).tolist()), config_echo=echo)

    x_p = np.linspace(0.02, 1.2 * c.x_bar, 600)
    write_csv(out_dir / "potential.csv", ["x", "p"],
              zip(x_p.tolist(), model.potential(x_p, params).tolist()), config_echo=echo)

    gx = np.linspace(0.02, 1.2 * c.x_bar, 220)
    gy = np.linspace(-1.2 * c.y_bar, 1.2 * c.y_bar, 221)
    mx, my = np.meshgrid(gx, gy)
    h = model.hamiltonian((mx.ravel(), my.ravel()), params)
    write_csv(out_dir / "h_grid.csv", ["x", "y", "h"],
              zip(mx.ravel().tolist(), my.ravel().tolist(), np.asarray(h).tolist()),
              config_echo=echo)

    y_c = np.linspace(-2.0 / delta, 2.0 / delta, 801)
    write_csv(out_dir / "cutoff.csv", ["y", "c"],
              zip(y_c.tolist(), model.cutoff(y_c, delta).tolist()), config_echo=echo)

    write_json(out_dir / "constants.json", {
        "config": echo,
        "model": params.to_dict(),
        "derived": dataclasses.asdict(params.derived),
        "delta": delta,
        "bar_delta": sde.bar_delta(params),
        "working_delta": sde.working_delta(params),
        "h_budget": c.h_circ + 1.0,
        "velocity_sup": model.VELOCITY_SUP,
    })
    print(f"wrote analytic curve CSVs and constants.json to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
