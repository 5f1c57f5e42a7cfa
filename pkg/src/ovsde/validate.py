"""User-facing health checks: every structural invariant, measured and bounded.

The checks mirror the test suite's core invariants so a fresh install (or a
new parameter set) can be validated from the command line without running
pytest: equilibrium residual, energy dissipation identity, level-set box,
monotonicity of the velocity law and potential, raw/regularized drift
agreement, barrier certification, drift-sign functional grid maximum, and
agreement of the coupled-noise paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import barrier as barrier_mod
from . import model, ode, sde
from .model import ModelParams, State

__all__ = ["CheckResult", "run_validation"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "passed": self.passed,
            "note": self.note,
        }


def _leq(name: str, measured: float, bound: float, note: str = "") -> CheckResult:
    return CheckResult(name, float(measured), float(bound), bool(measured <= bound), note)


def run_validation(p: ModelParams, *, digamma_grid: int = 800,
                   backend: str | None = None) -> list[CheckResult]:
    c = p.derived
    checks: list[CheckResult] = []

    bx, by = model.drift(State(c.x_inf, 0.0), p)
    checks.append(_leq("equilibrium_residual", math.hypot(bx, by), 1e-12,
                       "|drift| at the equilibrium point"))

    rng = np.random.default_rng(0)
    xs = rng.uniform(0.05, 3.0, 4000)
    ys = rng.uniform(-2.0, 2.0, 4000)
    gx, gy = model.hamiltonian_gradient((xs, ys), p)
    dx, dy = model.drift((xs, ys), p)
    lhs = gx * dx + gy * dy
    rhs = -(p.alpha + p.beta / xs**2) * ys**2
    checks.append(_leq("energy_identity_max_abs_err", np.abs(lhs - rhs).max(), 1e-10,
                       "<grad H, drift> against the dissipation rate"))

    grid_x = np.linspace(1e-3, 3.0 * c.x_bar, 400)
    grid_y = np.linspace(-3.0 * c.y_bar, 3.0 * c.y_bar, 401)
    gxx, gyy = np.meshgrid(grid_x, grid_y)
    h = model.hamiltonian((gxx.ravel(), gyy.ravel()), p)
    inside = h <= c.h_circ + 1.0
    in_box = (gxx.ravel() <= c.x_bar + 1e-12) & (np.abs(gyy.ravel()) <= c.y_bar + 1e-12)
    checks.append(_leq("level_set_box_violations", int((inside & ~in_box).sum()), 0,
                       "points with H <= h_circ+1 outside (0, x_bar] x [-y_bar, y_bar]"))

    v_grid = model.optimal_velocity(np.linspace(-3.0, 8.0, 2000))
    checks.append(_leq("velocity_law_monotone_violations", int((np.diff(v_grid) <= 0).sum()), 0))

    px_grid = np.linspace(0.05, 3.0 * c.x_inf, 3001)
    p_vals = model.potential(px_grid, p)
    argmin = px_grid[int(np.argmin(p_vals))]
    cell = px_grid[1] - px_grid[0]
    checks.append(_leq("potential_argmin_offset", abs(argmin - c.x_inf), cell,
                       "grid argmin within one cell of the equilibrium gap"))

    delta = 0.25
    ax = rng.uniform(delta, 3.0, 2000)
    ay = rng.uniform(-1.0 / delta, 1.0 / delta, 2000)
    raw = model.drift((ax, ay), p)
    reg = model.drift_regularized((ax, ay), delta, p)
    rel = np.abs(raw[1] - reg[1]) / np.maximum(1.0, np.abs(raw[1]))
    checks.append(_leq("regularized_agreement_rel_err", rel.max(), 1e-15,
                       "raw vs regularized drift on the agreement box"))

    table = barrier_mod.build_barrier(p)
    checks.append(_leq("barrier_monotone_violations",
                       int((np.diff(table.phi_vals) > 1e-14).sum()), 0))
    checks.append(CheckResult("barrier_floor_margin", float(table.phi_vals.min() - c.phi_lower),
                              0.0, bool(table.phi_vals.min() >= c.phi_lower),
                              "min phi - phi_lower (must be >= 0)"))
    neg = table.y_grid <= 0.0
    ode_res = np.abs(table.dphi_vals[neg] + 1.0 / (p.alpha + p.beta / table.phi_vals[neg] ** 2))
    checks.append(_leq("barrier_ode_residual", ode_res.max(), 1e-7))
    flat = table.y_grid >= c.varpi_dagger
    checks.append(_leq("barrier_flat_side_slope", np.abs(table.dphi_vals[flat]).max(), 1e-12))

    table2 = barrier_mod.build_barrier(p, 20_000)
    probe_y = np.linspace(-c.y_bar, c.y_bar, 1537)
    checks.append(_leq("barrier_self_convergence",
                       np.abs(table.phi(probe_y) - table2.phi(probe_y)).max(), 1e-9,
                       "phi change under grid doubling"))

    gy_b = np.linspace(-c.y_bar, c.y_bar, digamma_grid)
    gx_b = np.linspace(0.5 * c.phi_lower, c.x_dagger, digamma_grid)
    bxx, byy = np.meshgrid(gx_b, gy_b)
    dgm = barrier_mod.drift_sign_functional((bxx.ravel(), byy.ravel()), table, p)
    dmask = barrier_mod.danger((bxx.ravel(), byy.ravel()), table) >= 0.0
    max_dgm = dgm[dmask].max() if dmask.any() else -math.inf
    checks.append(_leq("digamma_grid_max", max_dgm, 1e-9,
                       "max drift-sign functional over the danger region"))

    checks.append(_leq("mollifier_plateau_err",
                       max(abs(barrier_mod.mollifier(-1e-9) - 1.0),
                           abs(barrier_mod.mollifier(1.0 + 1e-9))), 0.0))

    res = sde.check_consistency(p.z_circ, 0.5, 0.2, 0.4, 20260810, p,
                                horizon=5.0, backend=backend)
    checks.append(_leq("consistency_divergence", res.max_divergence, 10.0 * 1e-3,
                       "coupled-path divergence before the coarse exit"))

    traj = ode.integrate_deterministic(p.z_circ, p, 200.0)
    ok = traj.status == ode.TrajectoryStatus.CONVERGED_TO_EQUILIBRIUM
    dist = math.hypot(traj.final_state.x - c.x_inf, traj.final_state.y)
    checks.append(CheckResult("deterministic_convergence", dist, 1e-6,
                              bool(ok and dist <= 1e-6),
                              f"status={getattr(traj.status, 'value', traj.status)}"))
    h_diff = np.diff(traj.h_values)
    checks.append(_leq("energy_decay_max_forward_diff", h_diff.max() if len(h_diff) else 0.0, 1e-8))

    return checks
