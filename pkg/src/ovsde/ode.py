"""Deterministic trajectories, boundary-strip diagnostics, and the gap-curve machinery.

The noiseless dynamics never reach the collision boundary and converge to the
unique equilibrium ``(x_inf, 0)``; :func:`integrate_deterministic` verifies
this empirically with an adaptive Runge-Kutta pair plus event handling for
collision and sustained convergence.  The strip machinery (region labels,
velocity-parametrized gap curve, hyperbolic reference curve) mirrors the
boundary-layer argument that rules collisions out.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .model import ModelParams, State

__all__ = [
    "TrajectoryStatus",
    "Trajectory",
    "Region",
    "integrate_deterministic",
    "classify_region",
    "parametrization_rhs",
    "reference_curve",
    "solve_strip_curve",
]


class TrajectoryStatus(enum.Enum):
    RUNNING = "Running"
    CONVERGED_TO_EQUILIBRIUM = "ConvergedToEquilibrium"
    COLLISION_DETECTED = "CollisionDetected"
    HORIZON_REACHED = "HorizonReached"


class Region(enum.Enum):
    """Labels for the boundary strip ``(0, x_minus/2) x R`` and its complement."""

    LOWER = "L"      # x in (0, x_minus/2), y < 0
    UPPER = "U"      # x in (0, x_minus/2), y >= 0
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution path.

    ``times`` is strictly increasing and aligned with ``states`` (N x 2) and
    ``h_values``.  For deterministic runs ``h_values`` is nonincreasing up to
    integration tolerance.  ``status`` may also hold an SDE path status when a
    stochastic module produced the object.
    """

    times: np.ndarray
    states: np.ndarray
    h_values: np.ndarray
    status: object

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.h_values):
            raise ValueError("times, states and h_values must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final_state(self) -> State:
        return State(float(self.states[-1, 0]), float(self.states[-1, 1]))

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def integrate_deterministic(
    z0,
    p: ModelParams,
    horizon: float,
    step_control: tuple[float, float] = (1e-9, 1e-11),
    *,
    sample_dt: float | None = None,
    collision_threshold: float = 1e-6,
    convergence_tol: float = 1e-8,
    convergence_hold: float = 1.0,
) -> Trajectory:
    """Integrate the noiseless dynamics with adaptive RK45 and event handling.

    Terminates early with ``CONVERGED_TO_EQUILIBRIUM`` once the state has
    stayed within ``convergence_tol`` of the equilibrium for a full
    ``convergence_hold`` time window, or with ``COLLISION_DETECTED`` if the
    gap falls below ``collision_threshold`` (which the theory excludes; seeing
    it is a test failure, not a model outcome).  A solver step failure is
    reported with a warning and a trajectory truncated at the failure, with
    status ``RUNNING``.

    Args:
        z0: initial state, inside the open half plane x > 0.
        p: model parameters.
        horizon: time limit (> 0).
        step_control: (rtol, atol) pair for the adaptive integrator.
        sample_dt: if given, resample output on a uniform grid of this spacing;
            otherwise the solver's accepted steps are returned.
    """
    x0, y0 = (z0.x, z0.y) if isinstance(z0, State) else (float(z0[0]), float(z0[1]))
    if x0 <= 0.0:
        raise ValueError(f"initial gap must be positive, got {x0!r}")
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    rtol, atol = step_control

    alpha, beta, d, v_circ = p.alpha, p.beta, p.d, p.v_circ
    tanh2 = math.tanh(2.0)
    x_inf = p.derived.x_inf

    def rhs(t, z):
        x, y = z[0], z[1]
        return (y, -alpha * (math.tanh(x / d - 2.0) + tanh2 - v_circ + y) - beta * y / (x * x))

    def ev_collision(t, z):
        return z[0] - collision_threshold

    ev_collision.terminal = True
    ev_collision.direction = -1.0

    def ev_near(t, z):
        return math.hypot(z[0] - x_inf, z[1]) - convergence_tol

    ev_near.terminal = True
    ev_near.direction = -1.0

    def ev_far(t, z):
        return math.hypot(z[0] - x_inf, z[1]) - convergence_tol

    ev_far.terminal = True
    ev_far.direction = 1.0

    pieces = []
    t_cur, z_cur = 0.0, np.array([x0, y0])
    status = TrajectoryStatus.HORIZON_REACHED
    t_end = horizon
    verifying = math.hypot(x0 - x_inf, y0) < convergence_tol

    for _ in range(100_000):
        if verifying:
            t_hold = min(t_cur + convergence_hold, horizon)
            sol = solve_ivp(
                rhs, (t_cur, t_hold), z_cur, method="RK45", rtol=rtol, atol=atol,
                dense_output=True, events=(ev_collision, ev_far),
            )
            pieces.append(sol)
            if sol.status < 0:
                warnings.warn(f"integrator fault at t={sol.t[-1]:.6g}: {sol.message}")
                status, t_end = TrajectoryStatus.RUNNING, sol.t[-1]
                break
            if sol.t_events[0].size:
                status, t_end = TrajectoryStatus.COLLISION_DETECTED, float(sol.t_events[0][0])
                break
            if sol.t_events[1].size:
                # left the convergence ball; resume normal integration
                t_cur, z_cur = float(sol.t_events[1][0]), sol.y_events[1][0]
                verifying = False
                continue
            if t_hold >= t_cur + convergence_hold:
                status, t_end = TrajectoryStatus.CONVERGED_TO_EQUILIBRIUM, t_hold
            else:
                status, t_end = TrajectoryStatus.HORIZON_REACHED, horizon
            break
        sol = solve_ivp(
            rhs, (t_cur, horizon), z_cur, method="RK45", rtol=rtol, atol=atol,
            dense_output=True, events=(ev_collision, ev_near),
        )
        pieces.append(sol)
        if sol.status < 0:
            warnings.warn(f"integrator fault at t={sol.t[-1]:.6g}: {sol.message}")
            status, t_end = TrajectoryStatus.RUNNING, sol.t[-1]
            break
        if sol.t_events[0].size:
            status, t_end = TrajectoryStatus.COLLISION_DETECTED, float(sol.t_events[0][0])
            break
        if sol.t_events[1].size:
            t_cur, z_cur = float(sol.t_events[1][0]), sol.y_events[1][0]
            verifying = True
            continue
        status, t_end = TrajectoryStatus.HORIZON_REACHED, horizon
        break
    else:  # pragma: no cover - defensive
        raise RuntimeError("event loop failed to terminate")

    times, states = _sample_pieces(pieces, t_end, sample_dt)
    h_values = model.hamiltonian((states[:, 0], states[:, 1]), p)
    return Trajectory(times=times, states=states, h_values=np.asarray(h_values), status=status)


def _sample_pieces(pieces, t_end, sample_dt):
    if sample_dt is not None:
        n = max(1, int(math.floor(t_end / sample_dt + 1e-12)))
        times = np.unique(np.append(np.arange(n + 1) * sample_dt, t_end))
        times = times[times <= t_end + 1e-15]
        states = np.empty((len(times), 2))
        idx = 0
        for sol in pieces:
            lo, hi = sol.t[0], sol.t[-1]
            while idx < len(times) and times[idx] <= hi + 1e-15:
                states[idx] = sol.sol(min(times[idx], hi))
                idx += 1
        while idx < len(times):  # pragma: no cover - numerical edge
            states[idx] = pieces[-1].sol(pieces[-1].t[-1])
            idx += 1
        return times, states
    ts, zs = [], []
    for sol in pieces:
        t_piece = sol.t
        z_piece = sol.y.T
        if ts and t_piece.size and abs(t_piece[0] - ts[-1][-1]) < 1e-15:
            t_piece, z_piece = t_piece[1:], z_piece[1:]
        mask = t_piece <= t_end + 1e-15
        ts.append(t_piece[mask])
        zs.append(z_piece[mask])
    times = np.concatenate(ts)
    states = np.concatenate(zs, axis=0)
    if times[-1] < t_end - 1e-12:
        times = np.append(times, t_end)
        states = np.vstack([states, pieces[-1].sol(t_end)])
    keep = np.append(True, np.diff(times) > 0)
    return times[keep], states[keep]


def classify_region(z, p: ModelParams) -> Region:
    """Exact membership in the lower/upper halves of the boundary strip."""
    x, y = (z.x, z.y) if isinstance(z, State) else (float(z[0]), float(z[1]))
    half = 0.5 * p.derived.x_minus
    if 0.0 < x < half:
        return Region.LOWER if y < 0.0 else Region.UPPER
    return Region.OUTSIDE


def parametrization_rhs(y: float, phi_val: float, p: ModelParams) -> float:
    """Slope ``dx/dy`` of the gap curve parametrized by velocity inside the strip.

    Equals ``-y / (P'(phi) + (alpha + beta/phi^2) y)``; well-defined on
    ``y < 0``, ``0 < phi < x_minus`` where both denominator terms are negative.

    Raises:
        ValueError: outside that rectangle.
    """
    if not y < 0.0:
        raise ValueError(f"parametrization requires y < 0, got {y!r}")
    if not 0.0 < phi_val < p.derived.x_minus:
        raise ValueError(
            f"parametrization requires 0 < phi < x_minus={p.derived.x_minus}, got {phi_val!r}"
        )
    return _parametrization_rhs_unchecked(y, phi_val, p)


def _parametrization_rhs_unchecked(y, phi_val, p: ModelParams):
    dp = model.potential_derivative(phi_val, p)
    return -y / (dp + (p.alpha + p.beta / phi_val**2) * y)


def reference_curve(y, y_start: float, x_start: float, p: ModelParams):
    """Hyperbolic lower reference ``(1/x_start + (y - y_start)/beta)^-1``.

    Defined for ``y >= y_start``; bounds the strip gap curve from below.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < y_start):
        raise ValueError(f"reference curve requires y >= y_start={y_start}, got {y!r}")
    value = 1.0 / (1.0 / x_start + (y_arr - y_start) / p.beta)
    return value if isinstance(y, np.ndarray) else float(value)


def solve_strip_curve(
    p: ModelParams,
    y_start: float,
    x_start: float | None = None,
    *,
    n_points: int = 2001,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the velocity-parametrized gap curve from ``(y_start, x_start)`` up to 0.

    Returns a grid ``y`` in ``[y_start, 0]`` and the solved gaps ``phi(y)``.
    The default anchor is the strip edge ``x_minus / 2``.
    """
    if x_start is None:
        x_start = 0.5 * p.derived.x_minus
    if not y_start < 0.0:
        raise ValueError(f"y_start must be negative, got {y_start!r}")
    if not 0.0 < x_start < p.derived.x_minus:
        raise ValueError(f"x_start must lie in (0, x_minus), got {x_start!r}")

    def rhs(y, phi):
        return [_parametrization_rhs_unchecked(y, phi[0], p)]

    y_grid = np.linspace(y_start, 0.0, n_points)
    sol = solve_ivp(
        rhs, (y_start, 0.0), [x_start], method="RK45",
        rtol=rtol, atol=atol, dense_output=True,
    )
    if sol.status < 0:  # pragma: no cover - smooth bounded RHS
        raise RuntimeError(f"strip-curve integration failed: {sol.message}")
    return y_grid, sol.sol(y_grid)[0]
