"""Collision barrier: decreasing gap curve, smooth flattening, danger functionals.

The barrier is the solution of the autonomous ODE

    phi'(y) = -phi(y)^2 / (alpha phi(y)^2 + beta),   phi(-y_bar) = x_dagger,

flattened to a constant right of the velocity window ``[0, varpi_dagger]`` by
a smooth nonincreasing step.  Because the ODE is separable, the inverse map
``y(phi) = -y_bar + alpha (x_dagger - phi) + beta (1/phi - 1/x_dagger)`` is
exact and strictly decreasing; the solver inverts it by bracketed Newton
bisection to near machine precision, so tabulated values, first and second
derivatives are all analytic rather than marched.

The danger function ``D(x, y) = phi(y) - x`` is positive left of the barrier
graph; its clipped square is continuously differentiable, and the associated
drift functional is nonpositive on the danger region, which is the mechanism
behind the small-noise collision bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import model
from .model import ModelParams, State

__all__ = [
    "PhiDaggerTable",
    "BarrierTable",
    "solve_barrier_dagger",
    "mollifier",
    "mollifier_d1",
    "mollifier_d2",
    "build_barrier",
    "danger",
    "danger_squared",
    "danger_squared_grad",
    "drift_sign_functional",
]


# ---------------------------------------------------------------------------
# raw barrier curve


def _barrier_ode_rhs(phi, alpha: float, beta: float):
    """Slope field ``f(phi) = -phi^2 / (alpha phi^2 + beta)`` of the barrier ODE."""
    phi2 = np.asarray(phi) ** 2
    return -phi2 / (alpha * phi2 + beta)


def _barrier_ode_rhs_d(phi, alpha: float, beta: float):
    """Derivative ``f'(phi)``; bounded, which makes the ODE globally well posed."""
    phi_arr = np.asarray(phi, dtype=float)
    den = alpha * phi_arr**2 + beta
    return -2.0 * phi_arr / den + 2.0 * alpha * phi_arr**3 / den**2


def _phi_dagger_values(y, p: ModelParams) -> np.ndarray:
    """Evaluate the barrier curve by inverting its exact separable form."""
    c = p.derived
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))

    def inverse_map(phi):
        return -c.y_bar + p.alpha * (c.x_dagger - phi) + p.beta * (1.0 / phi - 1.0 / c.x_dagger)

    out = np.empty_like(y_arr)
    for i, yv in enumerate(y_arr):
        # certified bracket: strict hyperbolic lower bound and, right of the
        # anchor, the anchor itself (slope is bounded by 1/alpha on the left)
        lo = 0.5 / (1.0 / c.x_dagger + max(yv + c.y_bar, 0.0) / p.beta)
        hi = c.x_dagger + max(0.0, -(yv + c.y_bar)) / p.alpha + 1.0
        phi = 0.5 * (lo + hi)
        for _ in range(200):
            g = inverse_map(phi) - yv
            if g > 0.0:
                lo = phi
            else:
                hi = phi
            dg = -p.alpha - p.beta / (phi * phi)
            step = g / dg
            nxt = phi - step
            if not lo < nxt < hi:
                nxt = 0.5 * (lo + hi)
            if abs(nxt - phi) <= 1e-15 * max(1.0, abs(phi)):
                phi = nxt
                break
            phi = nxt
        out[i] = phi
    return out


@dataclass(frozen=True)
class PhiDaggerTable:
    """Raw (unflattened) barrier curve tabulated on a grid."""

    y_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.values) >= 0.0):
            raise ValueError("barrier curve must be strictly decreasing")


def solve_barrier_dagger(p: ModelParams, y_span: tuple[float, float] | None = None,
                         n_points: int = 10_001) -> PhiDaggerTable:
    """Solve the barrier ODE to high accuracy over ``y_span``.

    ``y_span`` must contain ``[-y_bar, y_bar]`` (default exactly that span).
    """
    c = p.derived
    if y_span is None:
        y_span = (-c.y_bar, c.y_bar)
    lo, hi = y_span
    if lo > -c.y_bar or hi < c.y_bar:
        raise ValueError(f"y_span {y_span} must contain [-y_bar, y_bar] = [{-c.y_bar}, {c.y_bar}]")
    y_grid = np.linspace(lo, hi, n_points)
    return PhiDaggerTable(y_grid=y_grid, values=_phi_dagger_values(y_grid, p))


# ---------------------------------------------------------------------------
# smooth step

def _smooth_step_pieces(u):
    """Common masks and the log-ratio ``s(u) = -1/u + 1/(1-u)`` on the transition."""
    u_arr = np.asarray(u, dtype=float)
    inside = (u_arr > 0.0) & (u_arr < 1.0)
    uu = np.where(inside, u_arr, 0.5)
    s = -1.0 / uu + 1.0 / (1.0 - uu)
    return u_arr, inside, uu, np.clip(s, -700.0, 700.0)


def mollifier(u):
    """Smooth nonincreasing step: exactly 1 for ``u <= 0``, exactly 0 for ``u >= 1``.

    Built from the standard ``exp(-1/u)`` bump ratio, evaluated in the
    numerically stable logistic form.
    """
    u_arr, inside, _, s = _smooth_step_pieces(u)
    val = np.where(inside, 1.0 / (1.0 + np.exp(s)), np.where(u_arr <= 0.0, 1.0, 0.0))
    return val if isinstance(u, np.ndarray) else float(val)


def mollifier_d1(u):
    """First derivative of :func:`mollifier`; identically zero on both plateaus."""
    u_arr, inside, uu, s = _smooth_step_pieces(u)
    rho = 1.0 / (1.0 + np.exp(s))
    sp = 1.0 / uu**2 + 1.0 / (1.0 - uu) ** 2
    val = np.where(inside, -rho * (1.0 - rho) * sp, 0.0)
    return val if isinstance(u, np.ndarray) else float(val)


def mollifier_d2(u):
    """Second derivative of :func:`mollifier`."""
    u_arr, inside, uu, s = _smooth_step_pieces(u)
    rho = 1.0 / (1.0 + np.exp(s))
    sp = 1.0 / uu**2 + 1.0 / (1.0 - uu) ** 2
    spp = -2.0 / uu**3 + 2.0 / (1.0 - uu) ** 3
    d1 = -rho * (1.0 - rho) * sp
    val = np.where(inside, -(d1 * (1.0 - 2.0 * rho) * sp + rho * (1.0 - rho) * spp), 0.0)
    return val if isinstance(u, np.ndarray) else float(val)


# ---------------------------------------------------------------------------
# flattened barrier table


@dataclass(frozen=True)
class BarrierTable:
    """Flattened barrier on ``[-y_bar, y_bar]`` with derivatives and certified bounds.

    Invariants enforced at construction: values nonincreasing, floored by
    ``phi_lower``; derivative matches the barrier ODE for ``y <= 0`` and
    vanishes for ``y >= varpi_dagger``.
    """

    y_grid: np.ndarray
    phi_vals: np.ndarray
    dphi_vals: np.ndarray
    d2phi_vals: np.ndarray
    phi_lower: float
    deriv_bound: float
    alpha: float
    beta: float
    varpi_dagger: float
    _phi_interp: PchipInterpolator = field(init=False, repr=False, compare=False)
    _dphi_interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        diffs = np.diff(self.phi_vals)
        if np.any(diffs > 1e-14 * np.abs(self.phi_vals[:-1])):
            raise ValueError("barrier values must be nonincreasing")
        if self.phi_vals.min() < self.phi_lower:
            raise ValueError(
                f"barrier floor violated: min {self.phi_vals.min()} < {self.phi_lower}"
            )
        neg = self.y_grid <= 0.0
        ode_residual = np.abs(
            self.dphi_vals[neg] + 1.0 / (self.alpha + self.beta / self.phi_vals[neg] ** 2)
        )
        if ode_residual.size and ode_residual.max() > 1e-7:
            raise ValueError(f"barrier ODE residual {ode_residual.max()} exceeds 1e-7 for y <= 0")
        flat = self.y_grid >= self.varpi_dagger
        if flat.any() and np.abs(self.dphi_vals[flat]).max() > 1e-12:
            raise ValueError("barrier derivative must vanish on the flattened side")
        object.__setattr__(self, "_phi_interp", PchipInterpolator(self.y_grid, self.phi_vals))
        object.__setattr__(self, "_dphi_interp", PchipInterpolator(self.y_grid, self.dphi_vals))

    @property
    def y_bar(self) -> float:
        return float(self.y_grid[-1])

    def phi(self, y):
        """Barrier value by monotone cubic interpolation (preserves the decrease)."""
        self._check_domain(y)
        val = self._phi_interp(y)
        return val if isinstance(y, np.ndarray) else float(val)

    def dphi(self, y):
        """Barrier slope by cubic interpolation of the tabulated derivative."""
        self._check_domain(y)
        val = self._dphi_interp(y)
        return val if isinstance(y, np.ndarray) else float(val)

    def _check_domain(self, y):
        y_arr = np.asarray(y)
        bound = self.y_bar * (1.0 + 1e-12) + 1e-15
        if np.any(np.abs(y_arr) > bound):
            raise ValueError(f"velocity outside barrier domain [-{self.y_bar}, {self.y_bar}]")


def build_barrier(p: ModelParams, grid_resolution: int = 10_000) -> BarrierTable:
    """Tabulate the flattened barrier and its two derivatives on ``[-y_bar, y_bar]``.

    ``grid_resolution`` is the number of grid intervals (>= 1000).
    """
    if grid_resolution < 1000:
        raise ValueError(f"grid_resolution must be >= 1000, got {grid_resolution}")
    c = p.derived
    y = np.linspace(-c.y_bar, c.y_bar, grid_resolution + 1)
    # The flattening window [0, varpi_dagger] is narrow and carries the
    # mollifier's large higher derivatives; refine it (with margin) so the
    # cubic interpolants converge there too, at density proportional to the
    # base resolution.
    n_window = max(1000, grid_resolution // 10) + 1
    window = np.linspace(-0.5 * c.varpi_dagger, min(1.5 * c.varpi_dagger, c.y_bar), n_window)
    spacing = window[1] - window[0]
    y = y[np.min(np.abs(y[:, None] - window[None, :]), axis=1) > 0.25 * spacing]
    y = np.unique(np.concatenate([y, window, [c.varpi_dagger]]))
    y = y[np.append(True, np.diff(y) > 0.05 * spacing)]
    if c.varpi_dagger not in y:  # never drop the regime-matching point itself
        y = np.sort(np.append(y[np.abs(y - c.varpi_dagger) > 0.05 * spacing], c.varpi_dagger))

    phi_dag = _phi_dagger_values(y, p)
    phi_dag_w = float(_phi_dagger_values(c.varpi_dagger, p)[0])
    dphi_dag = _barrier_ode_rhs(phi_dag, p.alpha, p.beta)
    d2phi_dag = _barrier_ode_rhs_d(phi_dag, p.alpha, p.beta) * dphi_dag

    u = y / c.varpi_dagger
    rho = mollifier(u)
    rho1 = mollifier_d1(u) / c.varpi_dagger
    rho2 = mollifier_d2(u) / c.varpi_dagger**2
    gap = phi_dag - phi_dag_w

    phi = rho * gap + phi_dag_w
    dphi = rho * dphi_dag + rho1 * gap
    d2phi = rho * d2phi_dag + 2.0 * rho1 * dphi_dag + rho2 * gap

    # exact plateaus: left of zero the step is identically 1, right of the
    # window identically 0; avoid residual rounding from the blended formula
    left = y <= 0.0
    phi[left] = phi_dag[left]
    dphi[left] = dphi_dag[left]
    d2phi[left] = d2phi_dag[left]
    right = y >= c.varpi_dagger
    phi[right] = phi_dag_w
    dphi[right] = 0.0
    d2phi[right] = 0.0

    deriv_bound = float(max(np.abs(dphi).max(), np.abs(d2phi).max()))
    return BarrierTable(
        y_grid=y,
        phi_vals=phi,
        dphi_vals=dphi,
        d2phi_vals=d2phi,
        phi_lower=c.phi_lower,
        deriv_bound=deriv_bound,
        alpha=p.alpha,
        beta=p.beta,
        varpi_dagger=c.varpi_dagger,
    )


# ---------------------------------------------------------------------------
# danger functionals


def danger(z, table: BarrierTable):
    """Signed distance ``D(x, y) = phi(y) - x``; positive left of the barrier graph."""
    x, y = _split(z)
    dv = table.phi(y) - np.asarray(x, dtype=float)
    return dv if isinstance(dv, np.ndarray) and _any_array(z) else float(dv)


def danger_squared(z, table: BarrierTable):
    """Clipped square ``(max(D, 0))^2``; continuously differentiable in both arguments."""
    x, y = _split(z)
    dv = np.maximum(table.phi(y) - np.asarray(x, dtype=float), 0.0)
    out = dv * dv
    return out if _any_array(z) else float(out)


def danger_squared_grad(z, table: BarrierTable):
    """Gradient ``(-2 max(D,0), 2 max(D,0) phi'(y))`` of :func:`danger_squared`."""
    x, y = _split(z)
    dv = np.maximum(table.phi(y) - np.asarray(x, dtype=float), 0.0)
    gx = -2.0 * dv
    gy = 2.0 * dv * table.dphi(y)
    if _any_array(z):
        return gx, gy
    return float(gx), float(gy)


def drift_sign_functional(z, table: BarrierTable, p: ModelParams):
    """Drift term of the clipped-square danger under the dynamics.

    ``-phi'(y) { alpha (V(x/d) - v_circ) + (alpha + beta/x^2) y } - y``;
    nonpositive wherever the danger is nonnegative, the gap stays above
    ``phi_lower / 2``, and ``|y| <= y_bar``.

    Raises:
        ValueError: for ``x <= 0`` or ``|y|`` beyond the table domain.
    """
    x, y = _split(z)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError(f"drift_sign_functional requires x > 0, got {x!r}")
    y_arr = np.asarray(y, dtype=float)
    dphi = table.dphi(y_arr)
    v_term = p.alpha * (model.optimal_velocity(x_arr / p.d) - p.v_circ)
    out = -dphi * (v_term + (p.alpha + p.beta / x_arr**2) * y_arr) - y_arr
    return out if _any_array(z) else float(out)


def _split(z):
    if isinstance(z, State):
        return z.x, z.y
    x, y = z
    return x, y


def _any_array(z):
    if isinstance(z, State):
        return False
    return isinstance(z[0], np.ndarray) or isinstance(z[1], np.ndarray)
