"""Stochastic paths of the regularized dynamics with first-passage bookkeeping.

Paths are generated by Euler-Maruyama with additive noise in the velocity
equation only.  Every path records, as first-crossing times on the step grid:

* ``tau_eps_delta`` - first exit of the agreement box
  ``[2 delta, inf) x [-1/(2 delta), 1/(2 delta)]``,
* ``tau_H``         - first time the energy exceeds ``h_circ + 1``,
* ``tau_D``         - first time the gap falls below ``phi_lower / 2``,
* ``collision_proxy`` - first time the gap falls below ``2 delta``.

With the default absorbing mode the path stops at the agreement-box exit;
exits through the gap edge are the operational collision events.  Because
the working regularization scale for collision runs lies below
``min(1/(2 y_bar), phi_lower/4)``, a pre-energy-escape exit can only happen
through the gap edge; velocity-edge exits are logged as a distinct status
rather than folded into either class.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import stream_key, stream_keys
from .barrier import BarrierTable
from .model import ModelParams, State
from .ode import Trajectory

__all__ = [
    "PathStatus",
    "SdePathConfig",
    "StoppingRecord",
    "ConsistencyResult",
    "bar_delta",
    "working_delta",
    "simulate_path",
    "simulate_batch",
    "check_consistency",
    "check_consistency_batch",
    "effective_collision_run",
]

MAX_DT = 1e-3


class PathStatus(enum.Enum):
    HORIZON_REACHED = "HorizonReached"
    EXITED_REGULARIZATION_SET = "ExitedRegularizationSet"
    ENERGY_ESCAPE = "EnergyEscape"
    DANGER_ZONE = "DangerZone"
    COLLISION_PROXY = "CollisionProxy"
    INTEGRATOR_FAULT = "IntegratorFault"


@dataclass(frozen=True)
class SdePathConfig:
    """One path's full configuration; the RNG stream is a pure function of
    ``(seed, trial_index)``, so a record is reproducible in isolation.

    ``absorb_at_edge`` selects the default absorbing semantics (stop at the
    agreement-box exit).  When it is off the regularized dynamics run on the
    whole plane to the horizon, and the step must then also resolve the
    stiffest retained rate ``beta / delta^2`` (checked against the model's
    ``beta`` in :func:`simulate_path`).
    """

    epsilon: float
    delta: float
    dt: float
    horizon: float
    seed: int
    trial_index: int = 0
    store_stride: int = 1
    absorb_at_edge: bool = True

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if not 0.0 < self.dt <= MAX_DT:
            raise ValueError(f"dt must lie in (0, {MAX_DT}], got {self.dt!r}")
        if not self.horizon >= self.dt:
            raise ValueError(f"horizon must be >= dt, got {self.horizon!r}")
        if self.store_stride < 0:
            raise ValueError(f"store_stride must be >= 0, got {self.store_stride!r}")
        if self.trial_index < 0:
            raise ValueError(f"trial_index must be >= 0, got {self.trial_index!r}")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    def validate_for(self, p: ModelParams) -> None:
        """Parameter-dependent step check for the non-absorbing (whole plane) mode."""
        if not self.absorb_at_edge:
            cap = self.delta**2 / (10.0 * p.beta)
            if self.dt > cap:
                raise ValueError(
                    f"dt={self.dt} does not resolve the retained rate beta/delta^2; "
                    f"need dt <= {cap} in non-absorbing mode"
                )


@dataclass(frozen=True)
class StoppingRecord:
    """First-crossing times (in time units, ``inf`` when never crossed) plus the
    terminal state and a status summarizing how the path ended."""

    tau_eps_delta: float
    tau_H: float
    tau_D: float
    collision_proxy: float
    terminal_state: State
    terminal_status: PathStatus
    seed: int
    trial_index: int

    def to_json_dict(self) -> dict:
        def _time(v):
            return None if math.isinf(v) else v

        return {
            "tau_eps_delta": _time(self.tau_eps_delta),
            "tau_H": _time(self.tau_H),
            "tau_D": _time(self.tau_D),
            "collision_proxy": _time(self.collision_proxy),
            "terminal_status": self.terminal_status.value,
            "terminal_state": [self.terminal_state.x, self.terminal_state.y],
            "seed": self.seed,
            "trial_index": self.trial_index,
        }


@dataclass(frozen=True)
class ConsistencyResult:
    """Outcome of one coupled (delta_minus, delta_plus) pair run."""

    max_divergence: float
    tau_plus: float
    tau_minus: float
    ordering: bool | None  # tau_plus < tau_minus; None unless both observed


def bar_delta(p: ModelParams) -> float:
    """Threshold ``min(1/(2 y_bar), phi_lower/4)`` below which agreement-box exits
    (before energy escape) can only happen through the gap edge."""
    c = p.derived
    return min(0.5 / c.y_bar, 0.25 * c.phi_lower)


def working_delta(p: ModelParams) -> float:
    """Regularization scale used for effective collision runs: ``min(bar_delta/4, 1e-3)``."""
    return min(bar_delta(p) / 4.0, 1e-3)


def _kernel_call(z0, cfg: SdePathConfig, p: ModelParams, keys, table: BarrierTable | None,
                 store_stride: int, backend: str | None):
    cfg.validate_for(p)
    x0, y0 = (z0.x, z0.y) if isinstance(z0, State) else (float(z0[0]), float(z0[1]))
    if x0 <= 0.0:
        raise ValueError(f"initial gap must be positive, got {x0!r}")
    phi_lower = table.phi_lower if table is not None else p.derived.phi_lower
    if table is not None and table.y_bar < p.derived.y_bar * (1.0 - 1e-12):
        raise ValueError("barrier table does not cover [-y_bar, y_bar]")
    return _kernels.run_batch(
        keys,
        x0,
        y0,
        cfg.n_steps,
        cfg.dt,
        cfg.epsilon,
        cfg.delta,
        p.alpha,
        p.beta,
        p.d,
        p.v_circ,
        p.derived.x_inf,
        p.derived.h_circ + 1.0,
        0.5 * phi_lower,
        cfg.absorb_at_edge,
        store_stride=store_stride,
        backend=backend,
    )


_CAUSE_TO_STATUS = {
    _kernels.CAUSE_FAULT: PathStatus.INTEGRATOR_FAULT,
    _kernels.CAUSE_X_EDGE: PathStatus.COLLISION_PROXY,
    _kernels.CAUSE_Y_EDGE: PathStatus.EXITED_REGULARIZATION_SET,
}


def _status_of(cause: int, tau_h_step: int, tau_d_step: int, collision_step: int,
               tau_a_step: int) -> PathStatus:
    if cause in _CAUSE_TO_STATUS:
        return _CAUSE_TO_STATUS[cause]
    # horizon reached: escalate to the most collision-relevant recorded event
    if collision_step >= 0:
        return PathStatus.COLLISION_PROXY
    if tau_d_step >= 0:
        return PathStatus.DANGER_ZONE
    if tau_h_step >= 0:
        return PathStatus.ENERGY_ESCAPE
    if tau_a_step >= 0:
        return PathStatus.EXITED_REGULARIZATION_SET
    return PathStatus.HORIZON_REACHED


def _record_from(batch: _kernels.BatchResult, i: int, cfg: SdePathConfig) -> StoppingRecord:
    def _time(step):
        return math.inf if step < 0 else step * cfg.dt

    return StoppingRecord(
        tau_eps_delta=_time(int(batch.tau_a_step[i])),
        tau_H=_time(int(batch.tau_h_step[i])),
        tau_D=_time(int(batch.tau_d_step[i])),
        collision_proxy=_time(int(batch.collision_step[i])),
        terminal_state=State(float(batch.final_x[i]), float(batch.final_y[i])),
        terminal_status=_status_of(
            int(batch.cause[i]),
            int(batch.tau_h_step[i]),
            int(batch.tau_d_step[i]),
            int(batch.collision_step[i]),
            int(batch.tau_a_step[i]),
        ),
        seed=cfg.seed,
        trial_index=cfg.trial_index,
    )


def simulate_path(
    z0,
    cfg: SdePathConfig,
    p: ModelParams,
    table: BarrierTable | None = None,
    backend: str | None = None,
) -> tuple[Trajectory, StoppingRecord]:
    """Simulate one path; returns the thinned trajectory and its stopping record.

    The trajectory is sampled every ``cfg.store_stride`` steps (plus the exact
    terminal step); ``store_stride == 0`` keeps only the terminal state.
    """
    keys = np.array([stream_key(cfg.seed, cfg.trial_index)], dtype=np.uint64)
    stride = cfg.store_stride
    batch = _kernel_call(z0, cfg, p, keys, table, stride, backend)
    record = _record_from(batch, 0, cfg)

    end = int(batch.end_step[0])
    if stride > 0:
        n_rows = int(end // stride) + 1
        steps = batch.store_steps[:n_rows]
        times = steps * cfg.dt
        states = np.column_stack([batch.store_x[0, :n_rows], batch.store_y[0, :n_rows]])
        h_vals = batch.store_h[0, :n_rows].copy()
        if end % stride != 0:
            times = np.append(times, end * cfg.dt)
            states = np.vstack([states, [record.terminal_state.x, record.terminal_state.y]])
            h_vals = np.append(h_vals, _terminal_h(record, p))
    else:
        times = np.array([end * cfg.dt])
        states = np.array([[record.terminal_state.x, record.terminal_state.y]])
        h_vals = np.array([_terminal_h(record, p)])
    traj = Trajectory(times=times, states=states, h_values=h_vals, status=record.terminal_status)
    return traj, record


def _terminal_h(record: StoppingRecord, p: ModelParams) -> float:
    from . import model

    x = record.terminal_state.x
    if x <= 0.0 or not math.isfinite(x) or not math.isfinite(record.terminal_state.y):
        return math.nan
    return model.hamiltonian(record.terminal_state, p)


def simulate_batch(
    z0,
    cfg: SdePathConfig,
    p: ModelParams,
    n_trials: int,
    table: BarrierTable | None = None,
    first_trial_index: int = 0,
    backend: str | None = None,
) -> list[StoppingRecord]:
    """Run ``n_trials`` independent paths (trial indices offset from
    ``first_trial_index``), without trajectory storage."""
    ids = np.arange(first_trial_index, first_trial_index + n_trials, dtype=np.uint64)
    keys = stream_keys(cfg.seed, ids)
    batch = _kernel_call(z0, cfg, p, keys, table, 0, backend)
    records = []
    for i in range(n_trials):
        cfg_i = SdePathConfig(
            epsilon=cfg.epsilon, delta=cfg.delta, dt=cfg.dt, horizon=cfg.horizon,
            seed=cfg.seed, trial_index=first_trial_index + i,
            store_stride=0, absorb_at_edge=cfg.absorb_at_edge,
        )
        records.append(_record_from(batch, i, cfg_i))
    return records


def check_consistency(
    z0,
    epsilon: float,
    delta_minus: float,
    delta_plus: float,
    shared_seed: int,
    p: ModelParams,
    *,
    dt: float = 1e-3,
    horizon: float = 60.0,
    trial_index: int = 0,
    backend: str | None = None,
) -> ConsistencyResult:
    """Couple two regularization scales through identical noise increments.

    Both paths use the stream of ``(shared_seed, trial_index)``; the coarser
    path (larger ``delta_plus``) must exit its agreement box strictly first,
    and the paths must coincide up to that exit.
    """
    results = check_consistency_batch(
        z0, epsilon, delta_minus, delta_plus, [shared_seed], p,
        dt=dt, horizon=horizon, trial_index=trial_index, backend=backend,
    )
    return results[0]


def check_consistency_batch(
    z0,
    epsilon: float,
    delta_minus: float,
    delta_plus: float,
    seeds,
    p: ModelParams,
    *,
    dt: float = 1e-3,
    horizon: float = 60.0,
    trial_index: int = 0,
    chunk: int = 32,
    backend: str | None = None,
) -> list[ConsistencyResult]:
    """Vectorized :func:`check_consistency` over many seeds (chunked for memory)."""
    if not 0.0 < delta_minus < delta_plus:
        raise ValueError(
            f"need 0 < delta_minus < delta_plus, got {delta_minus!r}, {delta_plus!r}"
        )
    out: list[ConsistencyResult] = []
    seeds = list(seeds)
    for lo in range(0, len(seeds), chunk):
        part = seeds[lo : lo + chunk]
        keys = np.array([stream_key(s, trial_index) for s in part], dtype=np.uint64)
        runs = {}
        for name, delta in (("plus", delta_plus), ("minus", delta_minus)):
            cfg = SdePathConfig(
                epsilon=epsilon, delta=delta, dt=dt, horizon=horizon,
                seed=part[0], trial_index=trial_index, store_stride=1,
            )
            runs[name] = _kernel_call(z0, cfg, p, keys, None, 1, backend)
        bp, bm = runs["plus"], runs["minus"]
        for i in range(len(part)):
            tp_step = int(bp.tau_a_step[i])
            tm_step = int(bm.tau_a_step[i])
            if tp_step >= 0:
                n_cmp = tp_step + 1
            else:
                n_cmp = min(int(bp.end_step[i]), int(bm.end_step[i])) + 1
            dx = bp.store_x[i, :n_cmp] - bm.store_x[i, :n_cmp]
            dy = bp.store_y[i, :n_cmp] - bm.store_y[i, :n_cmp]
            div = float(np.hypot(dx, dy).max()) if n_cmp > 0 else 0.0
            tp = math.inf if tp_step < 0 else tp_step * dt
            tm = math.inf if tm_step < 0 else tm_step * dt
            ordering = (tp < tm) if (tp_step >= 0 and tm_step >= 0) else None
            out.append(ConsistencyResult(div, tp, tm, ordering))
    return out


def effective_collision_run(
    z0,
    epsilon: float,
    L: float,
    seed: int,
    p: ModelParams,
    table: BarrierTable | None = None,
    *,
    dt: float = 1e-3,
    trial_index: int = 0,
    backend: str | None = None,
) -> StoppingRecord:
    """One absorbing run at the small working regularization scale.

    The scale is asserted below ``bar_delta`` at construction, so that exits
    before energy escape can only cross the gap edge; a gap-edge exit is the
    collision-relevant event (status ``COLLISION_PROXY``).
    """
    delta = working_delta(p)
    if not delta < bar_delta(p):
        raise ValueError(
            f"working delta {delta} must be below bar_delta {bar_delta(p)}"
        )
    cfg = SdePathConfig(
        epsilon=epsilon, delta=delta, dt=dt, horizon=L, seed=seed,
        trial_index=trial_index, store_stride=0, absorb_at_edge=True,
    )
    _, record = simulate_path(z0, cfg, p, table, backend=backend)
    return record
