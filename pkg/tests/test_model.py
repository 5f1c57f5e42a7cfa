import math

import numpy as np
import pytest
from scipy.integrate import quad

from ovsde import model
from ovsde.model import ModelParams, State

TANH2 = math.tanh(2.0)


def bisect_velocity_inverse(v, lo=0.0, hi=12.0, tol=1e-12):
    """Independent oracle: invert the velocity law by bisection."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        if model.optimal_velocity(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestOptimalVelocity:
    def test_value_at_two_exact(self):
        assert model.optimal_velocity(2.0) == TANH2

    def test_value_at_two_numeric(self):
        # high-precision tanh(2), frozen
        assert model.optimal_velocity(2.0) == pytest.approx(0.96402758007581688, abs=1e-15)

    def test_supremum(self):
        assert model.VELOCITY_SUP == pytest.approx(1.9640275800758169, abs=1e-15)
        assert model.optimal_velocity(50.0) == pytest.approx(model.VELOCITY_SUP, abs=1e-14)
        assert model.optimal_velocity(15.0) < model.VELOCITY_SUP  # not yet saturated in float64
        # the admissible lead-velocity interval is (0, 1.96...)
        assert 1.96 < model.VELOCITY_SUP < 1.97

    def test_strictly_increasing(self):
        grid = np.linspace(-4.0, 10.0, 4001)
        assert np.all(np.diff(model.optimal_velocity(grid)) > 0.0)

    def test_positive_on_positive_gaps(self):
        grid = np.linspace(1e-9, 50.0, 1000)
        vals = model.optimal_velocity(grid)
        assert np.all(vals > 0.0)
        assert np.all(vals <= model.VELOCITY_SUP)  # == only past float64 tanh saturation


class TestOptimalVelocityInverse:
    def test_inverse_of_two(self):
        assert model.optimal_velocity_inverse(TANH2) == pytest.approx(2.0, abs=1e-14)

    def test_against_bisection_oracle(self):
        val = model.optimal_velocity_inverse(0.9)
        assert val == pytest.approx(bisect_velocity_inverse(0.9), abs=1e-11)
        assert val == pytest.approx(1.935884709730483, abs=1e-12)  # frozen from the oracle

    def test_composition_grid(self):
        for v in np.linspace(0.05, 1.9, 25):
            w = model.optimal_velocity_inverse(float(v))
            assert model.optimal_velocity(w) == pytest.approx(v, abs=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -0.5, 1.9640275800758169, 2.5])
    def test_domain_error(self, bad):
        with pytest.raises(ValueError):
            model.optimal_velocity_inverse(bad)


class TestPotential:
    def test_zero_at_equilibrium(self, canonical):
        assert model.potential(canonical.derived.x_inf, canonical) == pytest.approx(0.0, abs=1e-15)

    def test_quadrature_oracle(self, canonical):
        p = canonical
        for x in (0.05, 0.5, 1.0, 2.0, 3.0, 10.0):
            expected, _ = quad(
                lambda u: p.alpha * (model.optimal_velocity(u / p.d) - p.v_circ),
                p.derived.x_inf, x, limit=200,
            )
            assert model.potential(x, p) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("x", [1.0, 3.0])
    def test_finite_difference_derivative(self, canonical, x):
        h = 1e-5
        fd = (model.potential(x + h, canonical) - model.potential(x - h, canonical)) / (2 * h)
        expected = canonical.alpha * (model.optimal_velocity(x / canonical.d) - canonical.v_circ)
        assert fd == pytest.approx(expected, abs=1e-6)

    def test_positive_right_of_equilibrium(self, canonical):
        assert model.potential(2.0 * canonical.derived.x_inf, canonical) > 0.0

    def test_unique_minimum(self, canonical):
        grid = np.linspace(0.02, 3.0 * canonical.derived.x_inf, 3001)
        vals = model.potential(grid, canonical)
        assert np.all(vals >= -1e-15)
        argmin = grid[np.argmin(vals)]
        assert abs(argmin - canonical.derived.x_inf) <= grid[1] - grid[0]
        # decreasing then increasing
        left = grid < canonical.derived.x_inf - 1e-3
        right = grid > canonical.derived.x_inf + 1e-3
        assert np.all(np.diff(vals[left]) < 0.0)
        assert np.all(np.diff(vals[right]) > 0.0)

    def test_domain_error(self, canonical):
        with pytest.raises(ValueError):
            model.potential(0.0, canonical)
        with pytest.raises(ValueError):
            model.potential(-1.0, canonical)


class TestHamiltonian:
    def test_zero_at_equilibrium(self, canonical):
        assert model.hamiltonian(State(canonical.derived.x_inf, 0.0), canonical) == pytest.approx(0.0, abs=1e-15)

    def test_kinetic_only(self, canonical):
        assert model.hamiltonian(State(canonical.derived.x_inf, 2.0), canonical) == pytest.approx(2.0, abs=1e-14)

    def test_potential_only(self, canonical):
        for x in (0.3, 1.0, 2.5):
            assert model.hamiltonian(State(x, 0.0), canonical) == model.potential(x, canonical)

    def test_lower_bounds(self, canonical):
        rng = np.random.default_rng(3)
        xs = rng.uniform(0.05, 4.0, 300)
        ys = rng.uniform(-3.0, 3.0, 300)
        h = model.hamiltonian((xs, ys), canonical)
        assert np.all(h >= model.potential(xs, canonical) - 1e-14)
        assert np.all(h >= 0.5 * ys**2 - 1e-14)


class TestDrift:
    def test_equilibrium_exact(self, canonical):
        bx, by = model.drift(State(canonical.derived.x_inf, 0.0), canonical)
        assert math.hypot(bx, by) <= 1e-12

    def test_velocity_term_cancels_at_equilibrium_gap(self, canonical):
        x_inf = canonical.derived.x_inf
        bx, by = model.drift(State(x_inf, 1.0), canonical)
        assert bx == 1.0
        assert by == pytest.approx(-canonical.alpha - canonical.beta / x_inf**2, abs=1e-12)

    def test_domain_error(self, canonical):
        with pytest.raises(ValueError):
            model.drift(State(-0.1, 0.0), canonical)

    def test_agreement_with_regularized_on_box(self, canonical):
        delta = 0.2
        rng = np.random.default_rng(11)
        xs = rng.uniform(delta, 5.0, 500)
        ys = rng.uniform(-1.0 / delta, 1.0 / delta, 500)
        raw_x, raw_y = model.drift((xs, ys), canonical)
        reg_x, reg_y = model.drift_regularized((xs, ys), delta, canonical)
        assert np.array_equal(raw_x, reg_x)
        rel = np.abs(raw_y - reg_y) / np.maximum(np.abs(raw_y), 1.0)
        assert rel.max() <= 1e-15

    def test_energy_identity(self, canonical):
        rng = np.random.default_rng(7)
        xs = rng.uniform(0.05, 3.0, 2000)
        ys = rng.uniform(-2.0, 2.0, 2000)
        gx, gy = model.hamiltonian_gradient((xs, ys), canonical)
        bx, by = model.drift((xs, ys), canonical)
        lhs = gx * bx + gy * by
        rhs = -(canonical.alpha + canonical.beta / xs**2) * ys**2
        assert np.abs(lhs - rhs).max() <= 1e-10

    def test_gradient_matches_finite_differences(self, canonical):
        h = 1e-6
        for x, y in [(0.5, -1.0), (1.5, 0.3), (3.0, 2.0)]:
            gx, gy = model.hamiltonian_gradient(State(x, y), canonical)
            fx = (model.hamiltonian(State(x + h, y), canonical)
                  - model.hamiltonian(State(x - h, y), canonical)) / (2 * h)
            fy = (model.hamiltonian(State(x, y + h), canonical)
                  - model.hamiltonian(State(x, y - h), canonical)) / (2 * h)
            assert gx == pytest.approx(fx, abs=5e-6)
            assert gy == pytest.approx(fy, abs=5e-6)


class TestCutoff:
    def test_inside_band(self):
        assert model.cutoff(0.7, 0.5) == 0.7

    def test_clamped_above(self):
        assert model.cutoff(3.0, 0.5) == 2.0

    def test_clamped_below(self):
        assert model.cutoff(-5.0, 0.5) == -2.0

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            model.cutoff(1.0, 0.0)


class TestDriftRegularized:
    def test_floor_active_at_zero_gap(self, canonical):
        delta = 0.1
        for y in (-3.0, 0.5, 20.0):
            _, by = model.drift_regularized(State(0.0, y), delta, canonical)
            cy = min(max(y, -1.0 / delta), 1.0 / delta)
            expected = (
                -canonical.alpha * (model.optimal_velocity(0.0) - canonical.v_circ + y)
                - canonical.beta * cy / delta**2
            )
            assert by == pytest.approx(expected, rel=1e-14)

    def test_total_on_plane(self, canonical):
        for z in [State(-2.0, 100.0), State(0.0, 0.0), State(5.0, -50.0)]:
            bx, by = model.drift_regularized(z, 0.05, canonical)
            assert math.isfinite(bx) and math.isfinite(by)

    def test_numeric_lipschitz_bound(self, canonical):
        # directional finite differences stay below the composition bound
        delta = 0.2
        alpha, beta, d = canonical.alpha, canonical.beta, canonical.d
        # |dB/dz| <= alpha/d (V term) + alpha + beta*(1/delta)*(2/delta^3) + beta/delta^2 + 1
        bound = alpha / d + alpha + 2.0 * beta / delta**4 + beta / delta**2 + 1.0
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1.0, 6.0, (400, 2))
        pts[:, 1] = rng.uniform(-6.0, 6.0, 400)
        h = 1e-6
        for x, y in pts:
            b0 = model.drift_regularized((x, y), delta, canonical)
            b1 = model.drift_regularized((x + h, y), delta, canonical)
            b2 = model.drift_regularized((x, y + h), delta, canonical)
            gx = math.hypot(b1[0] - b0[0], b1[1] - b0[1]) / h
            gy = math.hypot(b2[0] - b0[0], b2[1] - b0[1]) / h
            assert max(gx, gy) <= bound


class TestDerivedConstants:
    def test_equilibrium_definition(self, canonical):
        c = canonical.derived
        assert model.optimal_velocity(c.x_inf / canonical.d) == pytest.approx(canonical.v_circ, abs=1e-12)

    def test_level_set_constants(self, canonical):
        c = canonical.derived
        assert c.y_bar == pytest.approx(math.sqrt(2.0 * (c.h_circ + 1.0)), abs=1e-14)
        assert c.x_bar > c.x_inf
        assert model.potential(c.x_bar, canonical) == pytest.approx(c.h_circ + 1.0, abs=1e-8)

    def test_barrier_constants(self, canonical):
        c = canonical.derived
        x_dag = min(canonical.x_circ,
                    canonical.d * model.optimal_velocity_inverse(canonical.v_circ / 2.0))
        assert c.x_dagger == pytest.approx(x_dag, abs=1e-14)
        assert c.phi_lower == pytest.approx(
            1.0 / (1.0 / c.x_dagger + 2.0 * c.y_bar / canonical.beta), abs=1e-14)
        assert c.varpi_dagger == pytest.approx(
            (canonical.alpha * canonical.v_circ / 2.0)
            / (canonical.alpha + 4.0 * canonical.beta / c.phi_lower**2), abs=1e-14)
        assert c.x_minus == min(canonical.x_circ, c.x_inf)

    def test_level_set_box(self, canonical):
        c = canonical.derived
        gx = np.linspace(1e-3, 3.0 * c.x_bar, 300)
        gy = np.linspace(-3.0 * c.y_bar, 3.0 * c.y_bar, 301)
        mx, my = np.meshgrid(gx, gy)
        h = model.hamiltonian((mx.ravel(), my.ravel()), canonical)
        inside = h <= c.h_circ + 1.0
        assert np.all(mx.ravel()[inside] <= c.x_bar + 1e-12)
        assert np.all(np.abs(my.ravel()[inside]) <= c.y_bar + 1e-12)


class TestParamsValidation:
    def test_velocity_range_enforced(self):
        with pytest.raises(ValueError, match="v_circ"):
            ModelParams(1.0, 1.0, 1.0, 1.97, 1.0, 0.0)
        with pytest.raises(ValueError, match="v_circ"):
            ModelParams(1.0, 1.0, 1.0, 0.0, 1.0, 0.0)

    @pytest.mark.parametrize("field,value", [
        ("alpha", -1.0), ("beta", 0.0), ("d", -0.1), ("x_circ", 0.0),
    ])
    def test_positivity_enforced(self, field, value):
        kwargs = dict(alpha=1.0, beta=1.0, d=1.0, v_circ=0.9, x_circ=1.0, y_circ=0.0)
        kwargs[field] = value
        with pytest.raises(ValueError, match=field):
            ModelParams(**kwargs)

    def test_roundtrip(self, canonical):
        again = ModelParams.from_dict(canonical.to_dict())
        assert again == canonical
