"""Monte Carlo sweep over noise amplitudes and horizons.

Each cell (epsilon, L) runs ``trials_per_cell`` independent absorbing paths at
the working regularization scale and tallies how often the energy budget is
exceeded and how often the collision surrogate fires before the horizon.
Every trial owns a globally unique stream id ``cell_index * trials_per_cell +
trial_index``, so results are reproducible bit for bit and independent of
worker count; trials with nonfinite states are excluded from frequency
denominators and reported per cell.

The theoretical comparison column is ``min(1, 4 epsilon^2 y_bar^2 L)``, the
explicit bound on the probability of energy escape before ``L``; the sweep's
controlling quantity is ``epsilon * sqrt(L)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _pkg_version
from . import _kernels
from ._backend import NUMBA_AVAILABLE, resolve_backend, set_num_threads, get_num_threads
from ._rng import stream_keys
from .barrier import BarrierTable
from .model import ModelParams, State
from .sde import SdePathConfig, working_delta, bar_delta, _kernel_call

__all__ = ["SweepSpec", "CellResult", "SweepResult", "SweepSummary", "run_sweep",
           "summarize", "wilson_halfwidth", "energy_escape_bound"]

#: 97.5% standard normal quantile (two-sided 95%)
_Z95 = 1.959963984540054


def wilson_halfwidth(successes: int, n: int, z: float = _Z95) -> float:
    """Half-width of the Wilson score interval; well-behaved at frequencies near 0."""
    if n <= 0:
        return math.nan
    p_hat = successes / n
    z2n = z * z / n
    return (z / (1.0 + z2n)) * math.sqrt(p_hat * (1.0 - p_hat) / n + z2n / (4.0 * n))


def energy_escape_bound(epsilon: float, horizon: float, y_bar: float) -> float:
    """Bound ``min(1, 4 epsilon^2 y_bar^2 L)`` on P{energy escape before L}."""
    return min(1.0, 4.0 * epsilon * epsilon * y_bar * y_bar * horizon)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition for a sweep; fully determines the output."""

    epsilons: tuple[float, ...]
    horizons: tuple[float, ...]
    trials_per_cell: int
    base_seed: int
    dt: float
    params: ModelParams
    z0: State

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "horizons", tuple(float(h) for h in self.horizons))
        if self.trials_per_cell < 100:
            raise ValueError(f"trials_per_cell must be >= 100, got {self.trials_per_cell}")
        if any(e < 0.0 for e in self.epsilons):
            raise ValueError(f"epsilons must be >= 0, got {self.epsilons}")
        if any(h <= 0.0 for h in self.horizons) or not self.horizons or not self.epsilons:
            raise ValueError("horizons must be nonempty and positive; epsilons nonempty")
        if not 0.0 < self.dt <= 1e-3:
            raise ValueError(f"dt must lie in (0, 1e-3], got {self.dt}")

    def cells(self) -> list[tuple[int, float, float]]:
        """Cell index plus (epsilon, L), in deterministic row-major order."""
        out = []
        idx = 0
        for eps in self.epsilons:
            for hor in self.horizons:
                out.append((idx, eps, hor))
                idx += 1
        return out

    def to_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "horizons": list(self.horizons),
            "trials_per_cell": self.trials_per_cell,
            "base_seed": self.base_seed,
            "dt": self.dt,
            "model": self.params.to_dict(),
            "z0": [self.z0.x, self.z0.y],
        }


@dataclass(frozen=True)
class CellResult:
    epsilon: float
    L: float
    eps_sqrt_l: float
    n_trials: int
    n_ok: int
    n_tau_h: int
    n_collision: int
    n_danger: int
    n_exited_y_edge: int
    n_faults: int
    freq_tau_h: float
    freq_collision: float
    ci_halfwidth_95: float
    paper_bound: float
    valid: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "L": self.L,
            "eps_sqrt_l": self.eps_sqrt_l,
            "n_trials": self.n_trials,
            "n_ok": self.n_ok,
            "n_tau_h": self.n_tau_h,
            "n_collision": self.n_collision,
            "n_danger": self.n_danger,
            "n_exited_y_edge": self.n_exited_y_edge,
            "n_faults": self.n_faults,
            "freq_tau_h": self.freq_tau_h,
            "freq_collision": self.freq_collision,
            "ci_halfwidth_95": self.ci_halfwidth_95,
            "paper_bound": self.paper_bound,
            "valid": self.valid,
        }


CSV_COLUMNS = [
    "epsilon", "L", "eps_sqrt_l", "n_trials", "n_ok", "n_tau_h", "n_collision",
    "n_danger", "n_exited_y_edge", "n_faults", "freq_tau_h", "freq_collision",
    "ci_halfwidth_95", "paper_bound", "valid",
]


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    cells: list[CellResult]
    backend: str
    threads: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "working_delta": working_delta(self.spec.params),
            "bar_delta": bar_delta(self.spec.params),
            "version": _pkg_version,
            "cells": [c.to_dict() for c in self.cells],
            # volatile block: excluded from determinism comparisons
            "runtime": {
                "backend": self.backend,
                "threads": self.threads,
                "wall_time_s": self.wall_time_s,
            },
        }


def run_sweep(
    spec: SweepSpec,
    table: BarrierTable | None = None,
    *,
    threads: int | None = None,
    backend: str | None = None,
) -> SweepResult:
    """Run every cell of the sweep; deterministic given ``spec.base_seed``."""
    which = resolve_backend(backend)
    if threads is not None and which == "numba" and NUMBA_AVAILABLE:
        set_num_threads(threads)
    used_threads = get_num_threads() if (which == "numba" and NUMBA_AVAILABLE) else 1
    y_bar = spec.params.derived.y_bar
    t0 = time.perf_counter()
    cells: list[CellResult] = []
    for idx, eps, horizon in spec.cells():
        cfg = SdePathConfig(
            epsilon=eps, delta=working_delta(spec.params), dt=spec.dt, horizon=horizon,
            seed=spec.base_seed, trial_index=0, store_stride=0, absorb_at_edge=True,
        )
        ids = np.arange(spec.trials_per_cell, dtype=np.uint64) + np.uint64(idx * spec.trials_per_cell)
        keys = stream_keys(spec.base_seed, ids)
        batch = _kernel_call(spec.z0, cfg, spec.params, keys, table, 0, which)
        cells.append(_aggregate_cell(eps, horizon, cfg.n_steps, batch, y_bar))
    wall = time.perf_counter() - t0
    return SweepResult(spec=spec, cells=cells, backend=which, threads=used_threads, wall_time_s=wall)


def _aggregate_cell(eps: float, horizon: float, n_steps: int,
                    batch: _kernels.BatchResult, y_bar: float) -> CellResult:
    n = len(batch.cause)
    faults = batch.cause == _kernels.CAUSE_FAULT
    ok = ~faults
    n_ok = int(ok.sum())
    # events strictly before the horizon, on the step grid
    tau_h_hit = ok & (batch.tau_h_step >= 0) & (batch.tau_h_step < n_steps)
    col_hit = ok & (batch.collision_step >= 0) & (batch.collision_step < n_steps)
    dz_hit = ok & (batch.tau_d_step >= 0) & (batch.tau_d_step < n_steps)
    y_edge = ok & (batch.cause == _kernels.CAUSE_Y_EDGE)
    k_h = int(tau_h_hit.sum())
    k_c = int(col_hit.sum())
    freq_h = k_h / n_ok if n_ok else math.nan
    freq_c = k_c / n_ok if n_ok else math.nan
    n_faults = int(faults.sum())
    return CellResult(
        epsilon=eps,
        L=horizon,
        eps_sqrt_l=eps * math.sqrt(horizon),
        n_trials=n,
        n_ok=n_ok,
        n_tau_h=k_h,
        n_collision=k_c,
        n_danger=int(dz_hit.sum()),
        n_exited_y_edge=int(y_edge.sum()),
        n_faults=n_faults,
        freq_tau_h=freq_h,
        freq_collision=freq_c,
        ci_halfwidth_95=wilson_halfwidth(k_h, n_ok),
        paper_bound=energy_escape_bound(eps, horizon, y_bar),
        valid=n_faults <= 0.01 * n,
    )


@dataclass(frozen=True)
class SweepSummary:
    """Rows sorted by the controlling quantity, with bound-violation flags."""

    rows: list[CellResult]
    failures: list[CellResult] = field(default_factory=list)
    invalid: list[CellResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.invalid

    def format_table(self) -> str:
        header = (
            f"{'eps':>8} {'L':>8} {'eps*sqrt(L)':>12} {'freq_tauH':>10} "
            f"{'freq_coll':>10} {'ci95':>9} {'bound':>9} {'flag':>8}"
        )
        lines = [header, "-" * len(header)]
        fail_set = {id(c) for c in self.failures}
        invalid_set = {id(c) for c in self.invalid}
        for c in self.rows:
            flag = "FAILURE" if id(c) in fail_set else ("INVALID" if id(c) in invalid_set else "")
            lines.append(
                f"{c.epsilon:>8.4g} {c.L:>8.4g} {c.eps_sqrt_l:>12.5g} {c.freq_tau_h:>10.5f} "
                f"{c.freq_collision:>10.5f} {c.ci_halfwidth_95:>9.5f} {c.paper_bound:>9.5f} {flag:>8}"
            )
        return "\n".join(lines)


def summarize(result: SweepResult) -> SweepSummary:
    """Sort cells by ``epsilon * sqrt(L)`` and flag bound violations beyond the CI."""
    if not result.cells:
        raise ValueError("cannot summarize an empty sweep result")
    order = sorted(result.cells, key=lambda c: (c.eps_sqrt_l, c.epsilon, c.L))
    failures = [c for c in order if c.freq_tau_h > c.paper_bound + c.ci_halfwidth_95]
    invalid = [c for c in order if not c.valid]
    return SweepSummary(rows=order, failures=failures, invalid=invalid)
