"""Core car-following model: parameters, velocity law, potential, energy, drift fields.

Two vehicles in the lead vehicle's frame reduce to a planar state
``z = (x, y)`` where ``x > 0`` is the following gap and ``y`` the relative
velocity.  This module owns the parameter set, the derived constants every
other module consumes, and the pointwise model functions (velocity law and
its inverse, potential, energy, raw and regularized drift, velocity cutoff).

All functions are pure and accept either floats or numpy arrays where that
is meaningful.  Units are plain SI-style: ``alpha`` is 1/time, ``beta`` is
length^2/time, ``d`` and gaps are lengths, velocities length/time.  There is
no units system; everything is float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "VELOCITY_SUP",
    "ModelParams",
    "DerivedConstants",
    "State",
    "optimal_velocity",
    "optimal_velocity_inverse",
    "potential",
    "potential_derivative",
    "hamiltonian",
    "hamiltonian_gradient",
    "drift",
    "cutoff",
    "drift_regularized",
]

_TANH2 = math.tanh(2.0)

# Supremum of the velocity law: 1 + tanh(2) ~= 1.964.  Lead velocities must
# lie strictly inside (0, VELOCITY_SUP) or the equilibrium gap is undefined.
VELOCITY_SUP = 1.0 + _TANH2


class State(NamedTuple):
    """Phase-space point: gap ``x`` and relative velocity ``y``."""

    x: float
    y: float


def optimal_velocity(x):
    """Velocity law ``V(x) = tanh(x - 2) - tanh(-2)`` for a dimensionless gap ratio.

    Strictly increasing, with ``V(0) = 0`` and supremum ``VELOCITY_SUP``.
    """
    if isinstance(x, np.ndarray):
        return np.tanh(x - 2.0) + _TANH2
    return math.tanh(x - 2.0) + _TANH2


def optimal_velocity_inverse(v: float) -> float:
    """Inverse of the velocity law, ``2 + atanh(v - tanh(2))``.

    Raises:
        ValueError: if ``v`` is outside the open range ``(0, VELOCITY_SUP)``.
    """
    if not 0.0 < v < VELOCITY_SUP:
        raise ValueError(
            f"velocity {v!r} outside the invertible range (0, {VELOCITY_SUP})"
        )
    return 2.0 + math.atanh(v - _TANH2)


def _log_sech2(w):
    """``log(1 - tanh(w)^2)`` evaluated without cancellation for large ``|w|``."""
    aw = np.abs(w)
    return 2.0 * (math.log(2.0) - aw - np.log1p(np.exp(-2.0 * aw)))


@dataclass(frozen=True)
class DerivedConstants:
    """Constants implied by a parameter set; computed once, shared read-only.

    Attributes:
        x_inf: equilibrium gap, where the velocity law matches the lead velocity.
        h_circ: energy of the initial state.
        x_bar: gap bound of the level-set box at energy ``h_circ + 1``.
        y_bar: velocity bound of the level-set box, ``sqrt(2 (h_circ + 1))``.
        x_minus: ``min(x_circ, x_inf)``; half of it bounds the boundary strip.
        x_dagger: barrier anchor gap, ``min(x_circ, d * V^-1(v_circ / 2))``.
        phi_lower: certified floor of the barrier curve.
        varpi_dagger: width of the barrier's flattening window right of zero.
    """

    x_inf: float
    h_circ: float
    x_bar: float
    y_bar: float
    x_minus: float
    x_dagger: float
    phi_lower: float
    varpi_dagger: float


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the car-following model plus the initial state.

    Attributes:
        alpha: relaxation rate toward the velocity law (1/time, > 0).
        beta: velocity-matching gain of the singular braking term (length^2/time, > 0).
        d: sensitivity length scaling the gap inside the velocity law (> 0).
        v_circ: lead vehicle velocity, in ``(0, VELOCITY_SUP)``.
        x_circ: initial gap (> 0).
        y_circ: initial relative velocity.
    """

    alpha: float
    beta: float
    d: float
    v_circ: float
    x_circ: float
    y_circ: float
    derived: DerivedConstants = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("alpha", "beta", "d", "x_circ"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"invariant violated: {name} must be > 0, got {value!r}")
        if not (math.isfinite(self.v_circ) and 0.0 < self.v_circ < VELOCITY_SUP):
            raise ValueError(
                "invariant violated: v_circ must lie in the open velocity range "
                f"(0, {VELOCITY_SUP}), got {self.v_circ!r}"
            )
        if not math.isfinite(self.y_circ):
            raise ValueError(f"invariant violated: y_circ must be finite, got {self.y_circ!r}")
        object.__setattr__(self, "derived", _compute_derived(self))

    @property
    def z_circ(self) -> State:
        return State(self.x_circ, self.y_circ)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "d": self.d,
            "v_circ": self.v_circ,
            "x_circ": self.x_circ,
            "y_circ": self.y_circ,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        required = ("alpha", "beta", "d", "v_circ", "x_circ", "y_circ")
        missing = [k for k in required if k not in data]
        if missing:
            raise ValueError(f"model block missing keys: {missing}")
        return cls(**{k: float(data[k]) for k in required})


def potential(x, p: ModelParams):
    """Potential ``P(x)``: integral of the velocity mismatch force from the equilibrium gap.

    Closed form with a log term and a linear term; ``P(x_inf) = 0``, ``P >= 0``,
    decreasing left of ``x_inf`` and increasing right of it.

    Raises:
        ValueError: if any ``x <= 0``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError(f"potential requires x > 0, got {x!r}")
    value = _potential_unchecked(x_arr, p)
    return value if isinstance(x, np.ndarray) else float(value)


def _potential_unchecked(x, p: ModelParams):
    c = p.derived
    lref = _log_sech2(2.0 - c.x_inf / p.d)
    log_term = -(p.alpha * p.d / 2.0) * (_log_sech2(2.0 - np.asarray(x) / p.d) - lref)
    return log_term + p.alpha * (_TANH2 - p.v_circ) * (np.asarray(x) - c.x_inf)


def potential_derivative(x, p: ModelParams):
    """``P'(x) = alpha * (V(x/d) - v_circ)``; negative below ``x_inf``, positive above."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError(f"potential_derivative requires x > 0, got {x!r}")
    value = p.alpha * (np.tanh(x_arr / p.d - 2.0) + _TANH2 - p.v_circ)
    return value if isinstance(x, np.ndarray) else float(value)


def hamiltonian(z, p: ModelParams):
    """Energy ``H(x, y) = y^2 / 2 + P(x)``, nonincreasing along noiseless trajectories."""
    x, y = _split_state(z)
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return 0.5 * np.asarray(y, dtype=float) ** 2 + potential(np.asarray(x, dtype=float), p)
    return 0.5 * y * y + potential(x, p)


def hamiltonian_gradient(z, p: ModelParams):
    """Gradient ``(P'(x), y)`` of the energy."""
    x, y = _split_state(z)
    return potential_derivative(x, p), y


def drift(z, p: ModelParams):
    """Deterministic vector field ``(y, -alpha (V(x/d) - v_circ + y) - beta y / x^2)``.

    Defined on the open half plane ``x > 0``; the ``beta`` term blows up toward
    the collision boundary and is what ultimately prevents collisions.

    Raises:
        ValueError: if any ``x <= 0``.
    """
    x, y = _split_state(z)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError(f"drift requires x > 0, got x={x!r}")
    y_arr = np.asarray(y, dtype=float)
    vx = np.tanh(x_arr / p.d - 2.0) + _TANH2
    dy = -p.alpha * (vx - p.v_circ + y_arr) - p.beta * y_arr / (x_arr * x_arr)
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return y_arr + np.zeros_like(dy), dy
    return float(y_arr), float(dy)


def cutoff(y, delta: float):
    """Velocity truncation ``c_delta``: clamp to ``[-1/delta, 1/delta]``."""
    if delta <= 0.0:
        raise ValueError(f"cutoff requires delta > 0, got {delta!r}")
    bound = 1.0 / delta
    clipped = np.clip(np.asarray(y, dtype=float), -bound, bound)
    return clipped if isinstance(y, np.ndarray) else float(clipped)


def drift_regularized(z, delta: float, p: ModelParams):
    """Globally Lipschitz relaxation of the drift, defined on the whole plane.

    The singular braking term is bounded by clamping the velocity and flooring
    the squared gap at ``delta^2``; the result coincides with :func:`drift` on
    ``[delta, inf) x [-1/delta, 1/delta]``.
    """
    if delta <= 0.0:
        raise ValueError(f"drift_regularized requires delta > 0, got {delta!r}")
    x, y = _split_state(z)
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    vx = np.tanh(x_arr / p.d - 2.0) + _TANH2
    denom = np.maximum(x_arr * x_arr, delta * delta)
    dy = -p.alpha * (vx - p.v_circ + y_arr) - p.beta * np.clip(y_arr, -1.0 / delta, 1.0 / delta) / denom
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return y_arr + np.zeros_like(dy), dy
    return float(y_arr), float(dy)


def _split_state(z):
    if isinstance(z, State):
        return z.x, z.y
    x, y = z
    return x, y


def _compute_derived(p: ModelParams) -> DerivedConstants:
    x_inf = p.d * optimal_velocity_inverse(p.v_circ)

    # Potential evaluated before DerivedConstants exists; inline the closed form.
    lref = _log_sech2(2.0 - x_inf / p.d)

    def pot(x: float) -> float:
        log_term = -(p.alpha * p.d / 2.0) * (_log_sech2(2.0 - x / p.d) - lref)
        return float(log_term + p.alpha * (_TANH2 - p.v_circ) * (x - x_inf))

    h_circ = 0.5 * p.y_circ**2 + pot(p.x_circ)
    y_bar = math.sqrt(2.0 * (h_circ + 1.0))

    # x_bar solves P(x) = h_circ + 1 on (x_inf, inf): expand a bracket
    # geometrically, then bisect.  P is increasing there and unbounded.
    level = h_circ + 1.0
    hi = x_inf + max(p.d, 1.0)
    while pot(hi) < level:
        hi = x_inf + 2.0 * (hi - x_inf)
    lo = x_inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-10 * max(1.0, hi):
            break
        if pot(mid) < level:
            lo = mid
        else:
            hi = mid
    x_bar = 0.5 * (lo + hi)

    x_minus = min(p.x_circ, x_inf)
    x_dagger = min(p.x_circ, p.d * optimal_velocity_inverse(p.v_circ / 2.0))
    phi_lower = 1.0 / (1.0 / x_dagger + 2.0 * y_bar / p.beta)
    varpi_dagger = (p.alpha * p.v_circ / 2.0) / (p.alpha + 4.0 * p.beta / phi_lower**2)

    return DerivedConstants(
        x_inf=x_inf,
        h_circ=h_circ,
        x_bar=x_bar,
        y_bar=y_bar,
        x_minus=x_minus,
        x_dagger=x_dagger,
        phi_lower=phi_lower,
        varpi_dagger=varpi_dagger,
    )
