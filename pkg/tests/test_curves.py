"""Tests for polynomial fitting, exact derivatives, and sampled quadrature."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from stakit.curves import (
    BoundaryConstraint,
    PolynomialCurve,
    SampledScalar,
    TimeGrid,
    cumulative_integral,
    evaluate,
    fit_polynomial,
    integrate_sampled,
    quadrature_weights,
    sampled_derivative,
)
from stakit.ho_design import design_expansion

PI = np.pi


def cubic_through(v0, d0, v1, d1, t_f=1.0):
    return fit_polynomial(
        [
            BoundaryConstraint(0.0, 0, v0),
            BoundaryConstraint(0.0, 1, d0),
            BoundaryConstraint(t_f, 0, v1),
            BoundaryConstraint(t_f, 1, d1),
        ],
        degree=3,
    )


class TestFitPolynomial:
    def test_transfer_angle_cubic(self):
        # gamma: pi -> 0 with flat ends; unique cubic is pi(1 - 3t^2 + 2t^3)
        curve = cubic_through(PI, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(curve.coefficients, [PI, 0.0, -3 * PI, 2 * PI], atol=1e-12)
        for t, order, want in [(0.0, 0, PI), (0.0, 1, 0.0), (1.0, 0, 0.0), (1.0, 1, 0.0)]:
            assert abs(curve(t, order) - want) <= 1e-10 * max(1.0, abs(want))

    def test_single_point_constant(self):
        curve = fit_polynomial([BoundaryConstraint(0.0, 0, 2.5)], degree=0)
        assert curve.coefficients.tolist() == [2.5]
        assert curve(17.0) == 2.5

    def test_phase_angle_cubic(self):
        curve = cubic_through(-PI / 2, 3 * PI / 2, -PI / 2, -3 * PI / 2)
        np.testing.assert_allclose(
            curve.coefficients, [-PI / 2, 3 * PI / 2, -3 * PI / 2, 0.0], atol=1e-12
        )

    def test_count_mismatch(self):
        with pytest.raises(ValueError, match="degree/constraint mismatch"):
            fit_polynomial([BoundaryConstraint(0.0, 0, 1.0)], degree=1)

    def test_duplicate_pair_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            fit_polynomial(
                [BoundaryConstraint(0.0, 0, 1.0), BoundaryConstraint(0.0, 0, 2.0)],
                degree=1,
            )

    def test_singular_birkhoff_system(self):
        # two pure-slope conditions cannot pin a line's offset
        with pytest.raises(ValueError, match="degenerate constraint set"):
            fit_polynomial(
                [BoundaryConstraint(0.0, 1, 1.0), BoundaryConstraint(1.0, 1, 2.0)],
                degree=1,
            )

    def test_time_rescaling_conditioning(self):
        # short and long spans of the physical domain; fit stays accurate
        for t_f in (0.05, 20.0):
            curve = cubic_through(PI, 0.0, 0.0, 0.0, t_f=t_f)
            assert abs(curve(t_f / 2) - PI / 2) < 1e-10

    @given(
        values=st.lists(
            st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=2, max_size=3
        ),
        t_f=st.floats(min_value=0.25, max_value=4),
    )
    @settings(max_examples=50, deadline=None)
    def test_hermite_round_trip(self, values, t_f):
        # Hermite data (all orders 0..k at both ends) is always poised;
        # degrees 3 and 5 are the ansatz family the toolkit actually fits
        k = len(values)
        constraints = [BoundaryConstraint(0.0, j, values[j]) for j in range(k)]
        constraints += [BoundaryConstraint(t_f, j, values[::-1][j]) for j in range(k)]
        curve = fit_polynomial(constraints, degree=2 * k - 1)
        for c in constraints:
            got = curve(c.time, c.derivative_order)
            assert abs(got - c.value) <= 1e-10 * max(1.0, abs(c.value))


class TestEvaluate:
    def test_midpoint_value(self):
        curve = PolynomialCurve([PI, 0.0, -3 * PI, 2 * PI])
        assert abs(evaluate(curve, 0.5) - PI / 2) < 1e-14

    def test_derivative_annihilation(self):
        curve = PolynomialCurve([1.0, 2.0, 3.0])
        assert evaluate(curve, 0.7, order=3) == 0.0
        assert evaluate(curve, 0.7, order=7) == 0.0

    def test_first_derivative_midpoint(self):
        curve = PolynomialCurve([-PI / 2, 3 * PI / 2, -3 * PI / 2, 0.0])
        assert abs(evaluate(curve, 0.5, order=1)) < 1e-14

    def test_matches_finite_differences_second_order(self):
        curve = PolynomialCurve([0.3, -1.2, 0.8, 2.0, -0.5])
        t = 0.37
        exact = curve(t, order=1)
        errors = []
        for h in (1e-2, 5e-3, 2.5e-3):
            fd = (curve(t + h) - curve(t - h)) / (2 * h)
            errors.append(abs(fd - exact))
        # halving h divides the central-difference error by ~4
        assert errors[1] / errors[0] == pytest.approx(0.25, rel=0.15)
        assert errors[2] / errors[1] == pytest.approx(0.25, rel=0.15)

    def test_array_evaluation(self):
        curve = PolynomialCurve([1.0, 1.0])
        np.testing.assert_allclose(curve(np.array([0.0, 1.0, 2.0])), [1.0, 2.0, 3.0])


class TestQuadrature:
    def test_constant(self):
        grid = TimeGrid.uniform(2.0, 41)
        f = SampledScalar(grid, np.ones(41))
        assert integrate_sampled(f, 40) == pytest.approx(2.0, abs=1e-14)

    def test_linear(self):
        grid = TimeGrid.uniform(1.0, 33)
        f = SampledScalar.from_function(grid, lambda t: t)
        assert abs(integrate_sampled(f, 32) - 0.5) < 1e-12

    def test_cubic_exact_every_prefix(self):
        grid = TimeGrid.uniform(1.0, 17)
        f = SampledScalar.from_function(grid, lambda t: t**3 - 2 * t**2 + 0.5)
        exact = lambda t: t**4 / 4 - 2 * t**3 / 3 + 0.5 * t
        for k in range(17):
            assert abs(integrate_sampled(f, k) - exact(grid.nodes[k])) < 1e-13

    def test_inverse_square_scaling_factor_vs_adaptive_oracle(self):
        design = design_expansion(1.0, 0.1, 2.0)
        grid = TimeGrid.uniform(2.0, 2049)
        f = SampledScalar.from_function(grid, lambda t: 1.0 / design.b(t) ** 2)
        oracle, err = quad(lambda t: 1.0 / design.b(t) ** 2, 0.0, 2.0, epsabs=1e-13, epsrel=1e-13)
        assert err < 1e-10
        assert abs(integrate_sampled(f, 2048) - oracle) < 1e-9

    def test_odd_and_even_sample_counts(self):
        # parity of the sample count must not degrade the composite order
        errs = {}
        for n in (17, 18, 33, 34):
            grid = TimeGrid.uniform(1.0, n)
            f = SampledScalar.from_function(grid, np.cos)
            errs[n] = abs(integrate_sampled(f, n - 1) - np.sin(1.0))
        assert max(errs.values()) < 1e-5
        assert errs[33] < errs[17] / 8  # 4th-order: ~16x per halving
        assert errs[34] < errs[18] / 8

    def test_linearity(self):
        grid = TimeGrid.uniform(1.0, 21)
        f = SampledScalar.from_function(grid, np.exp)
        g = SampledScalar.from_function(grid, np.sin)
        combo = SampledScalar(grid, 2.0 * f.values - 0.5 * g.values)
        lhs = integrate_sampled(combo, 20)
        rhs = 2.0 * integrate_sampled(f, 20) - 0.5 * integrate_sampled(g, 20)
        assert abs(lhs - rhs) < 1e-12

    def test_prefix_additivity(self):
        grid = TimeGrid.uniform(3.0, 31)
        f = SampledScalar.from_function(grid, lambda t: np.exp(-t) * np.sin(3 * t))
        prefix = cumulative_integral(f)
        for k in (5, 13, 22):
            assert abs(prefix[k] + (prefix[30] - prefix[k]) - prefix[30]) < 1e-12
            assert abs(integrate_sampled(f, k) - prefix[k]) < 1e-13

    def test_full_span_weights(self):
        grid = TimeGrid.uniform(1.0, 25)
        w = quadrature_weights(grid.nodes)
        assert abs(w @ grid.nodes**3 - 0.25) < 1e-13

    def test_index_bounds(self):
        grid = TimeGrid.uniform(1.0, 5)
        f = SampledScalar(grid, np.zeros(5))
        with pytest.raises(IndexError):
            integrate_sampled(f, 5)


class TestSampledDerivative:
    def test_quartic_exact(self):
        grid = TimeGrid.uniform(1.0, 41)
        values = grid.nodes**4 - grid.nodes**2
        expected = 4 * grid.nodes**3 - 2 * grid.nodes
        got = sampled_derivative(values, grid.spacing)
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_fourth_order_convergence(self):
        errs = []
        for n in (33, 65):
            grid = TimeGrid.uniform(1.0, n)
            got = sampled_derivative(np.sin(5 * grid.nodes), grid.spacing)
            errs.append(np.max(np.abs(got - 5 * np.cos(5 * grid.nodes))))
        assert errs[1] < errs[0] / 12  # ~16x for a 4th-order stencil


class TestTimeGrid:
    def test_invariants(self):
        with pytest.raises(ValueError):
            TimeGrid.uniform(-1.0, 10)
        with pytest.raises(ValueError):
            TimeGrid.uniform(1.0, 1)
        with pytest.raises(ValueError):
            TimeGrid(t_f=1.0, nodes=np.array([0.0, 0.5, 0.4, 1.0]))

    def test_uniform_spans(self):
        grid = TimeGrid.uniform(2.5, 11)
        assert grid.nodes[0] == 0.0
        assert grid.nodes[-1] == 2.5
        assert grid.n_samples == 11
