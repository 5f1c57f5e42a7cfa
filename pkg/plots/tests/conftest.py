import json
import math

import numpy as np
import pytest


def _csv(path, header, rows, config=None):
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(config))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")
    return str(path)


MODEL = {"alpha": 1.0, "beta": 1.0, "d": 1.0, "v_circ": 0.9, "x_circ": 1.0, "y_circ": 0.0}
CONFIG = {"command": "curves", "model": MODEL}


@pytest.fixture()
def v_curve_csv(tmp_path):
    xs = np.linspace(0.0, 8.0, 101)
    vs = np.tanh(xs - 2.0) + math.tanh(2.0)
    return _csv(tmp_path / "v_curve.csv", ["x", "v"], zip(xs, vs), CONFIG)


@pytest.fixture()
def cutoff_csv(tmp_path):
    ys = np.linspace(-8.0, 8.0, 161)
    cs = np.clip(ys, -4.0, 4.0)
    return _csv(tmp_path / "cutoff.csv", ["y", "c"], zip(ys, cs), CONFIG)


@pytest.fixture()
def potential_csv(tmp_path):
    xs = np.linspace(0.1, 4.0, 80)
    ps = (xs - 1.9) ** 2
    return _csv(tmp_path / "potential.csv", ["x", "p"], zip(xs, ps), CONFIG)


@pytest.fixture()
def h_grid_csv(tmp_path):
    xs = np.linspace(0.1, 4.0, 30)
    ys = np.linspace(-2.0, 2.0, 31)
    mx, my = np.meshgrid(xs, ys)
    h = 0.5 * my**2 + (mx - 1.9) ** 2
    rows = zip(mx.ravel(), my.ravel(), h.ravel())
    return _csv(tmp_path / "h_grid.csv", ["x", "y", "h"], rows, CONFIG)


def make_trajectory(tmp_path, name="trajectory.csv", h0=0.4, contained=True):
    ts = np.linspace(0.0, 10.0, 200)
    xs = 1.9 + 0.9 * np.exp(-0.5 * ts) * np.cos(ts)
    ys = -0.9 * np.exp(-0.5 * ts) * np.sin(ts)
    hs = h0 * np.exp(-ts) if contained else h0 + ts  # growing energy escapes the contour
    return _csv(tmp_path / name, ["t", "x", "y", "H"], zip(ts, xs, ys, hs),
                {"command": "deterministic", "model": MODEL})


@pytest.fixture()
def trajectory_csv(tmp_path):
    return make_trajectory(tmp_path)


@pytest.fixture()
def sde_csv(tmp_path):
    rng = np.random.default_rng(0)
    ts = np.linspace(0.0, 5.0, 400)
    xs = 1.5 + 0.2 * np.cumsum(rng.normal(0, 0.02, ts.size))
    ys = 0.1 * rng.normal(0, 1, ts.size)
    hs = 0.5 * ys**2 + (xs - 1.9) ** 2
    return _csv(tmp_path / "sde_path.csv", ["t", "x", "y", "H"], zip(ts, xs, ys, hs),
                {"command": "sde", "model": MODEL, "sde": {"epsilon": 0.05}})


@pytest.fixture()
def constants_json(tmp_path):
    blob = {
        "config": CONFIG,
        "model": MODEL,
        "derived": {
            "x_inf": 1.935884709730483,
            "h_circ": 0.3718044187269033,
            "x_bar": 3.91872942205958,
            "y_bar": 1.656384266241927,
            "x_minus": 1.0,
            "x_dagger": 1.0,
            "phi_lower": 0.2318696198203036,
            "varpi_dagger": 0.005968178495145849,
        },
        "delta": 0.25,
        "bar_delta": 0.0579674049550759,
        "working_delta": 0.001,
        "h_budget": 1.3718044187269033,
    }
    path = tmp_path / "constants.json"
    path.write_text(json.dumps(blob))
    return str(path)


@pytest.fixture()
def barrier_csv(tmp_path):
    ys = np.linspace(-1.66, 1.66, 400)
    phi = 1.0 / (1.0 + np.maximum(ys + 1.66, 0.0))  # decreasing, positive
    dphi = np.gradient(phi, ys)
    d2phi = np.gradient(dphi, ys)
    return _csv(tmp_path / "barrier_table.csv", ["y", "phi", "dphi", "d2phi"],
                zip(ys, phi, dphi, d2phi), {"command": "barrier", "model": MODEL})
