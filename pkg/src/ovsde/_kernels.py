"""Euler-Maruyama path kernels, compiled (numba) and vectorized (numpy).

One step of the regularized dynamics with noise amplitude ``eps`` and
regularization scale ``delta``:

    x_{k+1} = x_k + y_k dt
    y_{k+1} = y_k + [ -alpha (V(x_k/d) - v_circ + y_k)
                      - beta c_delta(y_k) / max(x_k^2, delta^2) ] dt
              + eps sqrt(dt) xi_k

with ``xi_k`` the counter-based normal of the trial's stream.  Per step the
kernel records first crossings of four events (all located at the first
violating step, as step indices; -1 when never crossed):

* ``tau_h``   - energy exceeds the budget ``h_circ + 1``,
* ``tau_d``   - gap below ``phi_lower / 2`` (the danger threshold),
* ``collision`` - gap below the ``2 delta`` edge (collision surrogate),
* ``tau_a``   - exit of ``[2 delta, inf) x [-1/(2 delta), 1/(2 delta)]``.

In ``absorb`` mode the path stops at ``tau_a`` (beyond it the regularized
path no longer tracks the singular dynamics); otherwise it runs to the
horizon recording crossings.  Stop causes: 0 horizon, 1 velocity-edge exit,
2 gap-edge exit, 3 nonfinite state (fault).

Both backends perform the identical arithmetic per trial; results within a
backend are bit-reproducible and independent of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import NUMBA_AVAILABLE, njit, prange, resolve_backend
from ._rng import normal_nb, normals_np

__all__ = ["BatchResult", "run_batch", "CAUSE_HORIZON", "CAUSE_Y_EDGE", "CAUSE_X_EDGE", "CAUSE_FAULT"]

CAUSE_HORIZON = 0
CAUSE_Y_EDGE = 1
CAUSE_X_EDGE = 2
CAUSE_FAULT = 3

_TANH2 = math.tanh(2.0)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BatchResult:
    """Per-trial outcomes of a kernel run; step indices are -1 when not crossed."""

    tau_h_step: np.ndarray
    tau_d_step: np.ndarray
    tau_a_step: np.ndarray
    collision_step: np.ndarray
    end_step: np.ndarray
    cause: np.ndarray
    final_x: np.ndarray
    final_y: np.ndarray
    # Storage grids (empty when store_stride == 0).  Row r holds step r*stride;
    # rows past a stopped path's end are frozen at its final state.
    store_steps: np.ndarray
    store_x: np.ndarray
    store_y: np.ndarray
    store_h: np.ndarray


def run_batch(
    keys: np.ndarray,
    x0: float,
    y0: float,
    n_steps: int,
    dt: float,
    eps: float,
    delta: float,
    alpha: float,
    beta: float,
    d: float,
    v_circ: float,
    x_inf: float,
    h_budget: float,
    phi_half: float,
    absorb: bool,
    store_stride: int = 0,
    backend: str | None = None,
) -> BatchResult:
    """Simulate one path per stream key; see module docstring for semantics."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    lref = _log_sech2_scalar(2.0 - x_inf / d)
    if store_stride > 0:
        n_rows = n_steps // store_stride + 1
        store_steps = np.arange(n_rows, dtype=np.int64) * store_stride
        sx = np.empty((n, n_rows))
        sy = np.empty((n, n_rows))
        sh = np.empty((n, n_rows))
    else:
        store_steps = np.empty(0, dtype=np.int64)
        sx = np.empty((n, 0))
        sy = np.empty((n, 0))
        sh = np.empty((n, 0))
    out_i = np.empty((n, 6), dtype=np.int64)
    out_f = np.empty((n, 2))

    which = resolve_backend(backend)
    if which == "numba":
        _batch_nb(
            keys, x0, y0, n_steps, dt, eps, delta, alpha, beta, d, v_circ,
            x_inf, lref, h_budget, phi_half, absorb, store_stride,
            sx, sy, sh, out_i, out_f,
        )
    else:
        _batch_np(
            keys, x0, y0, n_steps, dt, eps, delta, alpha, beta, d, v_circ,
            x_inf, lref, h_budget, phi_half, absorb, store_stride,
            sx, sy, sh, out_i, out_f,
        )
    return BatchResult(
        tau_h_step=out_i[:, 0],
        tau_d_step=out_i[:, 1],
        tau_a_step=out_i[:, 2],
        collision_step=out_i[:, 3],
        end_step=out_i[:, 4],
        cause=out_i[:, 5],
        final_x=out_f[:, 0],
        final_y=out_f[:, 1],
        store_steps=store_steps,
        store_x=sx,
        store_y=sy,
        store_h=sh,
    )


def _log_sech2_scalar(w: float) -> float:
    aw = abs(w)
    return 2.0 * (_LOG2 - aw - math.log1p(math.exp(-2.0 * aw)))


def _batch_np(
    keys, x0, y0, n_steps, dt, eps, delta, alpha, beta, d, v_circ,
    x_inf, lref, h_budget, phi_half, absorb, stride, sx, sy, sh, out_i, out_f,
):
    n = keys.shape[0]
    x = np.full(n, float(x0))
    y = np.full(n, float(y0))
    active = np.ones(n, dtype=bool)
    tau_h = np.full(n, -1, dtype=np.int64)
    tau_d = np.full(n, -1, dtype=np.int64)
    tau_a = np.full(n, -1, dtype=np.int64)
    col = np.full(n, -1, dtype=np.int64)
    end = np.full(n, n_steps, dtype=np.int64)
    cause = np.zeros(n, dtype=np.int64)

    sqdt = math.sqrt(dt)
    inv_cut = 1.0 / delta
    x_edge = 2.0 * delta
    y_edge = 0.5 / delta
    dd2 = delta * delta
    t2mv = _TANH2 - v_circ
    adh = alpha * d * 0.5

    def h_of(xv, yv):
        w = np.abs(2.0 - xv / d)
        px = -adh * (2.0 * (_LOG2 - w - np.log1p(np.exp(-2.0 * w))) - lref) + alpha * t2mv * (xv - x_inf)
        return 0.5 * yv * yv + px

    if stride > 0:
        sx[:, 0] = x
        sy[:, 0] = y
        sh[:, 0] = h_of(x, y)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n_steps):
            if not active.any():
                break
            vx = np.tanh(x / d - 2.0) + _TANH2
            cy = np.clip(y, -inv_cut, inv_cut)
            den = np.maximum(x * x, dd2)
            dy = -alpha * (vx - v_circ + y) - beta * cy / den
            xn = x + y * dt
            yn = y + dy * dt
            if eps > 0.0:
                yn = yn + eps * sqdt * normals_np(keys, k)
            x = np.where(active, xn, x)
            y = np.where(active, yn, y)
            step = k + 1

            bad = active & ~(np.isfinite(x) & np.isfinite(y))
            if bad.any():
                cause[bad] = CAUSE_FAULT
                end[bad] = step
                active &= ~bad

            pending_h = active & (tau_h < 0)
            if pending_h.any():
                crossed = pending_h & (h_of(x, y) > h_budget)
                tau_h[crossed] = step

            crossed_d = active & (tau_d < 0) & (x < phi_half)
            tau_d[crossed_d] = step

            exit_x = x < x_edge
            exit_y = np.abs(y) > y_edge
            crossed_c = active & (col < 0) & exit_x
            col[crossed_c] = step
            crossed_a = active & (tau_a < 0) & (exit_x | exit_y)
            tau_a[crossed_a] = step

            if absorb and crossed_a.any():
                stop = crossed_a
                cause[stop] = np.where(exit_x[stop], CAUSE_X_EDGE, CAUSE_Y_EDGE)
                end[stop] = step
                active &= ~stop

            if stride > 0 and step % stride == 0:
                row = step // stride
                sx[:, row] = x
                sy[:, row] = y
                sh[:, row] = h_of(x, y)

    if stride > 0:
        # freeze rows past each path's end at its final state
        rows = np.arange(sx.shape[1], dtype=np.int64) * stride
        frozen = rows[None, :] > end[:, None]
        if frozen.any():
            hf = h_of(x, y)
            sx[:] = np.where(frozen, x[:, None], sx)
            sy[:] = np.where(frozen, y[:, None], sy)
            sh[:] = np.where(frozen, hf[:, None], sh)

    out_i[:, 0] = tau_h
    out_i[:, 1] = tau_d
    out_i[:, 2] = tau_a
    out_i[:, 3] = col
    out_i[:, 4] = end
    out_i[:, 5] = cause
    out_f[:, 0] = x
    out_f[:, 1] = y


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _h_nb(xv, yv, alpha, d, t2mv, adh, lref, x_inf):
        w = abs(2.0 - xv / d)
        px = -adh * (2.0 * (_LOG2 - w - math.log1p(math.exp(-2.0 * w))) - lref) + alpha * t2mv * (xv - x_inf)
        return 0.5 * yv * yv + px

    @njit(cache=True)
    def _trial_nb(
        key, x, y, n_steps, dt, eps, delta, alpha, beta, d, v_circ,
        x_inf, lref, h_budget, phi_half, absorb, stride, row_x, row_y, row_h,
    ):
        sqdt = math.sqrt(dt)
        inv_cut = 1.0 / delta
        x_edge = 2.0 * delta
        y_edge = 0.5 / delta
        dd2 = delta * delta
        t2mv = _TANH2 - v_circ
        adh = alpha * d * 0.5

        tau_h = np.int64(-1)
        tau_d = np.int64(-1)
        tau_a = np.int64(-1)
        col = np.int64(-1)
        end = np.int64(n_steps)
        cause = np.int64(CAUSE_HORIZON)

        if stride > 0:
            row_x[0] = x
            row_y[0] = y
            row_h[0] = _h_nb(x, y, alpha, d, t2mv, adh, lref, x_inf)

        for k in range(n_steps):
            vx = math.tanh(x / d - 2.0) + _TANH2
            cy = y
            if cy > inv_cut:
                cy = inv_cut
            elif cy < -inv_cut:
                cy = -inv_cut
            den = x * x
            if den < dd2:
                den = dd2
            dy = -alpha * (vx - v_circ + y) - beta * cy / den
            x = x + y * dt
            y = y + dy * dt
            if eps > 0.0:
                y = y + eps * sqdt * normal_nb(key, np.uint64(k))
            step = np.int64(k + 1)

            if not (math.isfinite(x) and math.isfinite(y)):
                cause = np.int64(CAUSE_FAULT)
                end = step
                break

            if tau_h < 0:
                if _h_nb(x, y, alpha, d, t2mv, adh, lref, x_inf) > h_budget:
                    tau_h = step
            if tau_d < 0 and x < phi_half:
                tau_d = step

            exit_x = x < x_edge
            exit_y = (y > y_edge) or (y < -y_edge)
            if col < 0 and exit_x:
                col = step
            if tau_a < 0 and (exit_x or exit_y):
                tau_a = step
                if absorb:
                    cause = np.int64(CAUSE_X_EDGE) if exit_x else np.int64(CAUSE_Y_EDGE)
                    end = step
                    if stride > 0 and step % stride == 0:
                        row = step // stride
                        row_x[row] = x
                        row_y[row] = y
                        row_h[row] = _h_nb(x, y, alpha, d, t2mv, adh, lref, x_inf)
                    break

            if stride > 0 and step % stride == 0:
                row = step // stride
                row_x[row] = x
                row_y[row] = y
                row_h[row] = _h_nb(x, y, alpha, d, t2mv, adh, lref, x_inf)

        if stride > 0:
            hf = _h_nb(x, y, alpha, d, t2mv, adh, lref, x_inf)
            n_rows = row_x.shape[0]
            first_frozen = end // stride + 1
            for r in range(first_frozen, n_rows):
                row_x[r] = x
                row_y[r] = y
                row_h[r] = hf

        return tau_h, tau_d, tau_a, col, end, cause, x, y

    @njit(cache=True, parallel=True)
    def _batch_nb(
        keys, x0, y0, n_steps, dt, eps, delta, alpha, beta, d, v_circ,
        x_inf, lref, h_budget, phi_half, absorb, stride, sx, sy, sh, out_i, out_f,
    ):
        n = keys.shape[0]
        for i in prange(n):
            res = _trial_nb(
                keys[i], x0, y0, n_steps, dt, eps, delta, alpha, beta, d,
                v_circ, x_inf, lref, h_budget, phi_half, absorb, stride,
                sx[i], sy[i], sh[i],
            )
            out_i[i, 0] = res[0]
            out_i[i, 1] = res[1]
            out_i[i, 2] = res[2]
            out_i[i, 3] = res[3]
            out_i[i, 4] = res[4]
            out_i[i, 5] = res[5]
            out_f[i, 0] = res[6]
            out_f[i, 1] = res[7]

else:  # pragma: no cover - numpy-only environment

    def _batch_nb(*args, **kwargs):
        raise RuntimeError("numba backend requested but numba is not installed")
