"""The eight figure renderers.

Every renderer is a pure function of its input files: fixed style, fixed
dpi, no timestamps or environment-dependent metadata, so output bytes are
stable for a given matplotlib version.  Figure ids and their inputs:

    v-curve                v_curve.csv
    cutoff                 cutoff.csv
    potential-hamiltonian  potential.csv, h_grid.csv [, trajectory.csv]
    solutions              one or more trajectory CSVs (t,x,y,H)
    noisy                  one or more SDE path CSVs [, deterministic reference]
    regions                constants.json
    agreement              constants.json
    danger                 barrier_table.csv

``potential-hamiltonian`` with a trajectory input also verifies containment:
every trajectory sample must stay inside the drawn energy contour (initial
energy plus one), and the render fails if not.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import InputError, grid_from_long, model_label, read_json, read_table

__all__ = ["FIGURES", "render", "ContainmentError"]

_STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
}


class ContainmentError(Exception):
    """The trajectory escapes the energy contour it must stay inside."""


def _save(fig, out_path):
    fig.savefig(out_path, format="png", metadata={"Software": None})
    plt.close(fig)


def _caption(ax_or_fig, config):
    label = model_label(config)
    if label:
        ax_or_fig.suptitle(label, fontsize=8)


def fig_v_curve(inputs, out_path):
    cols, config = read_table(inputs[0], ["x", "v"])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        ax.plot(cols["x"], cols["v"], color="tab:blue")
        ax.set_xlabel("scaled gap x")
        ax.set_ylabel("target velocity V(x)")
        ax.axhline(cols["v"].max(), color="gray", ls="--", lw=0.8)
        _caption(fig, config)
        _save(fig, out_path)


def fig_cutoff(inputs, out_path):
    cols, config = read_table(inputs[0], ["y", "c"])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        ax.plot(cols["y"], cols["y"], color="gray", ls=":", lw=0.9, label="identity")
        ax.plot(cols["y"], cols["c"], color="tab:red", label="clamped velocity")
        ax.set_xlabel("relative velocity y")
        ax.set_ylabel("truncated value")
        ax.legend(loc="upper left")
        _caption(fig, config)
        _save(fig, out_path)


def fig_potential_hamiltonian(inputs, out_path):
    if len(inputs) < 2:
        raise InputError("potential-hamiltonian needs potential.csv and h_grid.csv")
    pot, config = read_table(inputs[0], ["x", "p"])
    grid, _ = read_table(inputs[1], ["x", "y", "h"])
    xs, ys, h = grid_from_long(grid)

    level = None
    traj = None
    if len(inputs) >= 3:
        traj, _ = read_table(inputs[2], ["t", "x", "y", "H"])
        level = traj["H"][0] + 1.0
        worst = float(traj["H"].max())
        if worst > level + 1e-12:
            raise ContainmentError(
                f"trajectory energy {worst} exceeds the contour level {level}"
            )

    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
        ax1.plot(pot["x"], pot["p"], color="tab:blue")
        ax1.set_xlabel("gap x")
        ax1.set_ylabel("potential P(x)")
        levels = np.quantile(h[np.isfinite(h)], np.linspace(0.02, 0.9, 12))
        cs = ax2.contour(xs, ys, h, levels=np.unique(levels), cmap="viridis", linewidths=0.9)
        ax2.clabel(cs, inline=True, fontsize=6, fmt="%.2g")
        if level is not None:
            ax2.contour(xs, ys, h, levels=[level], colors="tab:red", linewidths=1.6)
            ax2.plot(traj["x"], traj["y"], color="black", lw=1.0, label="trajectory")
            ax2.legend(loc="upper right")
        ax2.set_xlabel("gap x")
        ax2.set_ylabel("relative velocity y")
        _caption(fig, config)
        _save(fig, out_path)


def fig_solutions(inputs, out_path):
    runs = [read_table(path, ["t", "x", "y", "H"]) for path in inputs]
    config = runs[0][1]
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.4))
        for cols, _ in runs:
            ax1.plot(cols["t"], cols["x"], lw=1.1)
            ax2.plot(cols["x"], cols["y"], lw=1.1)
        ax1.set_xlabel("time")
        ax1.set_ylabel("gap x")
        ax2.set_xlabel("gap x")
        ax2.set_ylabel("relative velocity y")
        ax2.axvline(0.0, color="tab:red", lw=1.0, ls="--")
        _caption(fig, config)
        _save(fig, out_path)


def fig_noisy(inputs, out_path):
    runs = [read_table(path, ["t", "x", "y", "H"]) for path in inputs]
    config = runs[0][1]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        for cols, cfg in runs:
            eps = None
            if cfg and isinstance(cfg.get("sde"), dict):
                eps = cfg["sde"].get("epsilon")
            label = f"eps={eps:g}" if eps is not None else None
            ax.plot(cols["t"], cols["x"], lw=1.0, label=label)
        ax.set_xlabel("time")
        ax.set_ylabel("gap x")
        ax.axhline(0.0, color="tab:red", lw=1.0, ls="--")
        if any(ln.get_label() and not ln.get_label().startswith("_") for ln in ax.lines):
            ax.legend(loc="best", fontsize=7)
        _caption(fig, config)
        _save(fig, out_path)


def fig_regions(inputs, out_path):
    blob = read_json(inputs[0])
    try:
        x_minus = blob["derived"]["x_minus"]
        y_bar = blob["derived"]["y_bar"]
        x_inf = blob["derived"]["x_inf"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"constants file lacks derived constants: {exc}") from exc
    half = 0.5 * x_minus
    span = 1.3 * y_bar
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.6, 3.8))
        ax.fill_betweenx([-span, 0.0], 0.0, half, color="tab:orange", alpha=0.35)
        ax.fill_betweenx([0.0, span], 0.0, half, color="tab:green", alpha=0.35)
        ax.text(half / 2, -span / 2, "lower strip", ha="center")
        ax.text(half / 2, span / 2, "upper strip", ha="center")
        ax.axvline(half, color="black", lw=1.0)
        ax.axvline(0.0, color="tab:red", lw=1.4)
        ax.plot([x_inf], [0.0], marker="o", color="black")
        ax.annotate("equilibrium", (x_inf, 0.0), textcoords="offset points", xytext=(6, 6))
        ax.set_xlim(-0.05, max(1.1 * x_inf, 2.0 * half))
        ax.set_ylim(-span, span)
        ax.set_xlabel("gap x")
        ax.set_ylabel("relative velocity y")
        _caption(fig, blob.get("config"))
        _save(fig, out_path)


def fig_agreement(inputs, out_path):
    blob = read_json(inputs[0])
    try:
        delta = float(blob["delta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"constants file lacks a delta entry: {exc}") from exc
    big = 1.0 / delta
    x_max = 4.0 * delta + 2.0
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.6, 3.8))
        ax.fill_betweenx([-big, big], delta, x_max, color="tab:blue", alpha=0.25,
                         label="relaxed = raw drift")
        ax.fill_betweenx([-0.5 * big, 0.5 * big], 2.0 * delta, x_max,
                         color="tab:blue", alpha=0.45, label="stopping box")
        ax.axvline(0.0, color="tab:red", lw=1.4)
        ax.set_xlim(-0.1, x_max)
        ax.set_ylim(-1.15 * big, 1.15 * big)
        ax.set_xlabel("gap x")
        ax.set_ylabel("relative velocity y")
        ax.legend(loc="upper right", fontsize=7)
        _caption(fig, blob.get("config"))
        _save(fig, out_path)


def fig_danger(inputs, out_path):
    cols, config = read_table(inputs[0], ["y", "phi", "dphi", "d2phi"])
    y = cols["y"]
    phi = cols["phi"]
    if np.any(np.diff(phi) > 1e-12):
        raise InputError("barrier table is not nonincreasing")
    x_max = 1.15 * phi.max()
    xs = np.linspace(0.0, x_max, 300)
    danger = phi[:, None] - xs[None, :]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.8))
        mesh = ax.pcolormesh(xs, y, danger, cmap="RdBu_r", shading="auto",
                             vmin=-x_max, vmax=x_max)
        fig.colorbar(mesh, ax=ax, label="danger = phi(y) - x")
        ax.plot(phi, y, color="black", lw=1.6, label="barrier")
        ax.contour(xs, y, danger, levels=[0.0], colors="black", linewidths=0.8)
        ax.set_xlabel("gap x")
        ax.set_ylabel("relative velocity y")
        ax.legend(loc="upper right", fontsize=7)
        _caption(fig, config)
        _save(fig, out_path)


FIGURES = {
    "v-curve": (fig_v_curve, 1),
    "cutoff": (fig_cutoff, 1),
    "potential-hamiltonian": (fig_potential_hamiltonian, 2),
    "solutions": (fig_solutions, 1),
    "noisy": (fig_noisy, 1),
    "regions": (fig_regions, 1),
    "agreement": (fig_agreement, 1),
    "danger": (fig_danger, 1),
}


def render(figure_id: str, inputs, out_path) -> None:
    """Render ``figure_id`` from its input files; see module docstring."""
    if figure_id not in FIGURES:
        raise InputError(f"unknown figure id {figure_id!r}; known: {sorted(FIGURES)}")
    func, min_inputs = FIGURES[figure_id]
    if len(inputs) < min_inputs:
        raise InputError(f"{figure_id} needs at least {min_inputs} input file(s)")
    func(list(inputs), out_path)
