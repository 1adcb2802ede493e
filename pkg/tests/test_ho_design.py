"""Tests for the oscillator design module: Ermakov machinery and snapshots."""

import numpy as np
import pytest
from scipy.integrate import quad

from stakit.fock import build_operator
from stakit.curves import PolynomialCurve, TimeGrid
from stakit.ho_design import (
    ErmakovDesign,
    OmegaRamp,
    berry_ho_hamiltonian,
    berry_ho_invariant,
    design_expansion,
    design_ramp,
    h0_h1_split,
    hamiltonian_form,
    invariant_form,
    lr_phase_ho,
    lr_phases_on_grid,
    omega_squared,
    standard_boundary_constraints,
)


@pytest.fixture(scope="module")
def expansion():
    # the acceptance expansion: 1 -> 0.1 over t_f = 2 with the quintic ansatz
    return design_expansion(1.0, 0.1, 2.0)


@pytest.fixture(scope="module")
def static_design():
    return ErmakovDesign(omega0=1.0, omega_f=1.0, t_f=1.0, b=PolynomialCurve.constant(1.0))


class TestBoundaryConstraints:
    def test_identity_ramp_endpoints(self):
        constraints = standard_boundary_constraints(1.0, 1.0, 1.0)
        values = {(c.time, c.derivative_order): c.value for c in constraints}
        assert values[(0.0, 0)] == 1.0
        assert values[(1.0, 0)] == 1.0

    def test_expansion_final_value(self):
        constraints = standard_boundary_constraints(1.0, 0.1, 2.0)
        final = next(c for c in constraints if c.time == 2.0 and c.derivative_order == 0)
        assert final.value == pytest.approx(np.sqrt(10.0), abs=1e-12)

    def test_derivative_conditions_vanish(self):
        for c in standard_boundary_constraints(2.0, 0.5, 3.0):
            if c.derivative_order > 0:
                assert c.value == 0.0

    def test_design_identity_is_flat(self):
        design = design_expansion(1.0, 1.0, 1.0)
        ts = np.linspace(0, 1, 50)
        np.testing.assert_allclose(design.b(ts), 1.0, atol=1e-12)


class TestOmegaSquared:
    def test_static(self, static_design):
        for t in (0.0, 0.3, 1.0):
            assert omega_squared(static_design, t) == pytest.approx(1.0, abs=1e-14)

    def test_endpoints(self, expansion):
        assert omega_squared(expansion, 0.0) == pytest.approx(1.0, abs=1e-10)
        assert omega_squared(expansion, 2.0) == pytest.approx(0.01, abs=1e-10)

    def test_short_ramp_inverts_trap(self):
        design = design_expansion(1.0, 0.1, 0.1)
        w2 = [omega_squared(design, t) for t in np.linspace(0, 0.1, 101)]
        assert min(w2) < 0.0

    def test_nonpositive_scaling_factor(self):
        design = design_expansion(1.0, 0.5, 1.0)
        bad = ErmakovDesign.__new__(ErmakovDesign)  # bypass validation on purpose
        object.__setattr__(bad, "omega0", 1.0)
        object.__setattr__(bad, "omega_f", 0.5)
        object.__setattr__(bad, "t_f", 1.0)
        object.__setattr__(bad, "b", PolynomialCurve([1.0, -2.0]))
        with pytest.raises(ValueError, match="non-positive"):
            omega_squared(bad, 0.9)

    def test_ermakov_residual_on_grid(self, expansion):
        ts = TimeGrid.uniform(2.0, 201).nodes
        b = expansion.b(ts)
        bdd = expansion.b(ts, order=2)
        w2 = np.array([omega_squared(expansion, t) for t in ts])
        residual = np.abs(bdd + w2 * b - expansion.omega0**2 / b**3)
        assert np.max(residual) <= 1e-10 * expansion.omega0**2


class TestInvariantForm:
    def test_initial_equals_hamiltonian(self, expansion):
        inv = invariant_form(expansion, 0.0)
        ham = hamiltonian_form(expansion, 0.0)
        np.testing.assert_allclose(inv.as_tuple(), ham.as_tuple(), atol=1e-12)

    def test_final_proportionality(self, expansion):
        # (omega_f/omega0) I(t_f) = H(t_f)
        inv = invariant_form(expansion, 2.0).scaled(0.1 / 1.0)
        ham = hamiltonian_form(expansion, 2.0)
        np.testing.assert_allclose(inv.as_tuple(), ham.as_tuple(), atol=1e-10)

    def test_cross_term_midramp(self, expansion):
        assert abs(invariant_form(expansion, 1.0).c_pq) > 1e-3

    def test_endpoint_commutation_in_fock(self, expansion):
        for t in (0.0, 2.0):
            h = build_operator(hamiltonian_form(expansion, t), 64, expansion.omega0).matrix
            i_mat = build_operator(invariant_form(expansion, t), 64, expansion.omega0).matrix
            comm = np.linalg.norm(h @ i_mat - i_mat @ h)
            assert comm <= 1e-10 * np.linalg.norm(h) * np.linalg.norm(i_mat)


class TestSplit:
    def test_h1_vanishes_at_endpoints(self, expansion):
        for t in (0.0, 2.0):
            _, h1 = h0_h1_split(expansion, t)
            assert np.max(np.abs(h1.as_tuple())) < 1e-10

    def test_static_case(self, static_design):
        h0, h1 = h0_h1_split(static_design, 0.5)
        np.testing.assert_allclose(h0.as_tuple(), hamiltonian_form(static_design, 0.5).as_tuple())
        assert h1.as_tuple() == (0.0, 0.0, 0.0)

    def test_parts_sum_reconstruct(self, expansion):
        # h1 is defined as the difference, so the sum closes to rounding of
        # the larger intermediate (h0 and h1 may cancel to a smaller total)
        for t in np.linspace(0, 2, 9):
            h0, h1 = h0_h1_split(expansion, t)
            total = np.array((h0 + h1).as_tuple())
            ham = np.array(hamiltonian_form(expansion, t).as_tuple())
            scale = np.max(np.abs([h0.as_tuple(), h1.as_tuple(), ham.tolist()]))
            assert np.max(np.abs(total - ham)) <= 4e-16 * scale


class TestTransportPhase:
    def test_static_dynamical_phase(self, static_design):
        for n in (0, 1, 3):
            assert lr_phase_ho(static_design, n, 0.8) == pytest.approx(
                -(n + 0.5) * 0.8, abs=1e-10
            )

    def test_quadrature_against_adaptive_oracle(self, expansion):
        oracle, err = quad(lambda t: 1.0 / expansion.b(t) ** 2, 0.0, 2.0, epsabs=1e-13)
        assert err < 1e-10
        got = lr_phase_ho(expansion, 0, 2.0)
        assert abs(got - (-0.5 * oracle)) < 1e-9

    def test_level_ratio(self, expansion):
        grid = TimeGrid.uniform(2.0, 65)
        alpha0 = lr_phases_on_grid(expansion, 0, grid)
        alpha1 = lr_phases_on_grid(expansion, 1, grid)
        np.testing.assert_allclose(alpha1[1:] / alpha0[1:], 3.0, atol=1e-12)

    def test_monotone_non_increasing(self, expansion):
        grid = TimeGrid.uniform(2.0, 65)
        alpha = lr_phases_on_grid(expansion, 2, grid)
        assert np.all(np.diff(alpha) < 0)


class TestBerryRoute:
    def test_constant_ramp_plain_oscillator(self):
        ramp = OmegaRamp(omega=PolynomialCurve.constant(2.0), t_f=1.0)
        form = berry_ho_hamiltonian(ramp, 0.4)
        assert form.c_pq == 0.0
        assert form.c_qq == pytest.approx(2.0, abs=1e-14)

    def test_cross_term_vanishes_at_endpoints(self):
        ramp = design_ramp(1.0, 0.1, 1.0)
        assert abs(berry_ho_hamiltonian(ramp, 0.0).c_pq) < 1e-12
        assert abs(berry_ho_hamiltonian(ramp, 1.0).c_pq) < 1e-12

    def test_cross_term_against_finite_differences(self):
        ramp = design_ramp(1.0, 0.1, 1.0)
        t, h = 0.5, 1e-5
        wd_fd = (ramp.omega(t + h) - ramp.omega(t - h)) / (2 * h)
        expected = -wd_fd / (4 * ramp.omega(t))
        assert abs(berry_ho_hamiltonian(ramp, t).c_pq - expected) < 1e-8

    def test_invariant_initial_condition(self):
        ramp = design_ramp(1.0, 0.1, 1.0)
        inv = berry_ho_invariant(ramp, 0.0)
        h0 = berry_ho_hamiltonian(ramp, 0.0)
        np.testing.assert_allclose(inv.as_tuple(), h0.as_tuple(), atol=1e-12)

    def test_invariant_product_identity(self):
        # c_pp * c_qq = omega0^2 / 4 at every time
        ramp = design_ramp(1.0, 0.1, 1.0)
        for t in np.linspace(0, 1, 11):
            inv = berry_ho_invariant(ramp, t)
            assert inv.c_pp * inv.c_qq == pytest.approx(0.25, abs=1e-12)
            assert inv.c_pq == 0.0

    def test_constant_ramp_invariant_equals_h0(self):
        ramp = OmegaRamp(omega=PolynomialCurve.constant(1.5), t_f=1.0)
        for t in (0.0, 0.7):
            np.testing.assert_allclose(
                berry_ho_invariant(ramp, t).as_tuple(),
                berry_ho_hamiltonian(ramp, t).as_tuple(),
                atol=1e-14,
            )

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ValueError, match="non-positive"):
            OmegaRamp(omega=PolynomialCurve([1.0, -2.0]), t_f=1.0)


class TestSerialization:
    def test_round_trip(self, expansion):
        doc = expansion.to_dict()
        assert set(doc) == {"omega0", "omega_f", "t_f", "b_coefficients"}
        clone = ErmakovDesign.from_dict(doc)
        ts = np.linspace(0, 2, 17)
        np.testing.assert_allclose(clone.b(ts), expansion.b(ts), atol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            design_expansion(-1.0, 0.1, 1.0)
        with pytest.raises(ValueError):
            design_expansion(1.0, 0.1, 1.0, degree=4)
