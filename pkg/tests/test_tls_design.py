"""Tests for the two-level protocol design module."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stakit.curves import PolynomialCurve, SampledScalar, TimeGrid
from stakit.tls_design import (
    AngleDesign,
    TLSControls,
    adiabaticity_metric,
    berry_cd_term,
    commutator_endpoint_report,
    controls_from_angles,
    controls_from_curves,
    hamiltonian,
    instantaneous_eigensystem,
    invariant_eigenvectors,
    invariant_matrix,
    lr_phase_tls,
    lr_phases_on_grid,
    preset_fig1,
    preset_fig2,
    reconstruct_hamiltonian,
    tracking_h0_from_angles,
    tracking_h1_from_angles,
)

PI = np.pi


@pytest.fixture(scope="module")
def fig1():
    return preset_fig1(1.0)


@pytest.fixture(scope="module")
def fig2():
    return preset_fig2(1.0)


@pytest.fixture(scope="module")
def grid():
    return TimeGrid.uniform(1.0, 201)


@pytest.fixture(scope="module")
def fig1_controls(fig1, grid):
    return controls_from_angles(fig1, grid)


class TestPresets:
    def test_fig1_gamma_coefficients(self, fig1):
        np.testing.assert_allclose(
            fig1.gamma.coefficients, [PI, 0.0, -3 * PI, 2 * PI], atol=1e-12
        )

    def test_fig1_beta_coefficients(self, fig1):
        np.testing.assert_allclose(
            fig1.beta.coefficients, [-PI / 2, 3 * PI / 2, -3 * PI / 2, 0.0], atol=1e-12
        )

    def test_fig2_beta_midpoint_pinned(self, fig2):
        assert fig2.beta(0.5) == pytest.approx(-PI / 2, abs=1e-12)
        assert fig2.beta(0.0) == pytest.approx(-PI / 2, abs=1e-12)
        assert fig2.beta(1.0) == pytest.approx(-PI / 2, abs=1e-12)
        assert fig2.beta(0.0, 1) == pytest.approx(PI / 2, abs=1e-12)
        assert fig2.beta(1.0, 1) == pytest.approx(-PI / 2, abs=1e-12)

    def test_fig2_beta_solved_by_hand(self, fig2):
        # exact solution of the five-condition quartic system at t_f = 1
        np.testing.assert_allclose(
            fig2.beta.coefficients,
            [-PI / 2, PI / 2, -5 * PI / 2, 4 * PI, -2 * PI],
            atol=1e-12,
        )

    def test_scaled_duration(self):
        design = preset_fig1(2.0)
        assert design.gamma(2.0) == pytest.approx(0.0, abs=1e-12)
        assert design.beta(0.0, 1) == pytest.approx(3 * PI / 4, abs=1e-12)


class TestControlsFromAngles:
    def test_linear_gamma_constant_rabi(self, grid):
        # beta = -pi/2, phi = 0: the detuning vanishes and Omega_R = |gamma'|
        design = AngleDesign(
            gamma=PolynomialCurve([PI, -PI]),
            beta=PolynomialCurve.constant(-PI / 2),
            t_f=1.0,
        )
        controls = controls_from_angles(design, grid)
        np.testing.assert_allclose(controls.delta.values, 0.0, atol=1e-12)
        np.testing.assert_allclose(controls.omega_r.values, PI, atol=1e-12)

    def test_fig1_midpoint(self, fig1_controls):
        mid = 100
        assert fig1_controls.omega_r.values[mid] == pytest.approx(12.31, abs=0.01)
        assert fig1_controls.delta.values[mid] == pytest.approx(0.0, abs=1e-12)

    def test_fig1_endpoint_detunings(self, fig1_controls):
        assert fig1_controls.delta.values[0] == pytest.approx(-9 * PI / 2, abs=1e-12)
        assert fig1_controls.delta.values[-1] == pytest.approx(9 * PI / 2, abs=1e-12)

    def test_endpoint_limit_continuous(self, fig1):
        # approaching t = 0 from inside reproduces the series limit
        tiny_grid = TimeGrid(t_f=1.0, nodes=np.array([0.0, 1e-4, 0.5, 1.0]))
        controls = controls_from_angles(fig1, tiny_grid)
        assert controls.delta.values[1] == pytest.approx(-9 * PI / 2, abs=1e-2)

    def test_rabi_frequency_nonnegative(self, fig1_controls):
        assert np.all(fig1_controls.omega_r.values >= 0.0)

    def test_sign_folded_into_phase(self, grid):
        # beta = +pi/2 makes the raw ratio negative; the fold flips phi
        design = AngleDesign(
            gamma=PolynomialCurve([PI, -PI]),
            beta=PolynomialCurve.constant(PI / 2),
            t_f=1.0,
        )
        controls = controls_from_angles(design, grid)
        assert np.all(controls.omega_r.values >= 0.0)
        np.testing.assert_allclose(np.abs(np.cos(controls.phi.values)), 1.0, atol=1e-12)
        off = controls.omega_r.values * np.exp(1j * controls.phi.values)
        np.testing.assert_allclose(off.real, -PI, atol=1e-12)

    def test_infinite_rabi_detected(self, grid):
        design = AngleDesign(
            gamma=PolynomialCurve([PI, -PI]),
            beta=PolynomialCurve.constant(0.0),
            t_f=1.0,
        )
        with pytest.raises(ValueError, match="infinite Rabi"):
            controls_from_angles(design, grid)

    def test_divergent_endpoint_detuning_detected(self):
        # gamma pinned at n*pi with cos(beta - phi) != 0 there has no finite limit
        design = AngleDesign(
            gamma=PolynomialCurve([PI, 0.0, -3 * PI, 2 * PI]),
            beta=PolynomialCurve.constant(-PI / 4),
            t_f=1.0,
        )
        with pytest.raises(ValueError, match="divergent"):
            controls_from_angles(design, TimeGrid.uniform(1.0, 11))


class TestMatrices:
    def test_hamiltonian_zero(self, grid):
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.zeros(201)),
            omega_r=SampledScalar(grid, np.zeros(201)),
            phi=SampledScalar(grid, np.zeros(201)),
        )
        assert hamiltonian(controls, 7).frobenius() == 0.0

    def test_hamiltonian_diagonal(self, grid):
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.ones(201)),
            omega_r=SampledScalar(grid, np.zeros(201)),
            phi=SampledScalar(grid, np.zeros(201)),
        )
        np.testing.assert_allclose(
            hamiltonian(controls, 0).matrix, np.diag([0.5, -0.5]), atol=1e-15
        )

    def test_hamiltonian_phase(self, grid):
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.zeros(201)),
            omega_r=SampledScalar(grid, np.full(201, 2.0)),
            phi=SampledScalar(grid, np.full(201, PI / 2)),
        )
        h = hamiltonian(controls, 3).matrix
        np.testing.assert_allclose(h, [[0.0, 1j], [-1j, 0.0]], atol=1e-15)

    def test_invariant_poles(self, fig1):
        i0 = invariant_matrix(fig1, 0.0).matrix    # gamma = pi
        np.testing.assert_allclose(i0, np.diag([-0.5, 0.5]), atol=1e-15)
        i1 = invariant_matrix(fig1, 1.0).matrix    # gamma = 0
        np.testing.assert_allclose(i1, np.diag([0.5, -0.5]), atol=1e-15)

    @given(
        g=st.floats(min_value=-7, max_value=7, allow_nan=False),
        b=st.floats(min_value=-7, max_value=7, allow_nan=False),
    )
    @settings(max_examples=50, deadline=None)
    def test_invariant_trace_and_determinant(self, g, b):
        design = AngleDesign(
            gamma=PolynomialCurve.constant(g),
            beta=PolynomialCurve.constant(b),
            omega0=2.0,
            t_f=1.0,
        )
        mat = invariant_matrix(design, 0.5).matrix
        assert abs(np.trace(mat)) < 1e-14
        assert np.linalg.det(mat).real == pytest.approx(-1.0, abs=1e-12)
        values = np.sort(np.linalg.eigvalsh(mat))
        np.testing.assert_allclose(values, [-1.0, 1.0], atol=1e-12)


class TestInstantaneousEigensystem:
    def _controls(self, grid, delta, omega_r, phi=0.0):
        n = grid.n_samples
        return TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.full(n, delta)),
            omega_r=SampledScalar(grid, np.full(n, omega_r)),
            phi=SampledScalar(grid, np.full(n, phi)),
        )

    def test_positive_detuning(self, grid):
        sys = instantaneous_eigensystem(self._controls(grid, 1.0, 0.0, 0.3), 0)
        assert sys.theta == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(sys.vec_plus, [np.exp(0.3j), 0.0], atol=1e-12)

    def test_negative_detuning(self, grid):
        sys = instantaneous_eigensystem(self._controls(grid, -1.0, 0.0), 0)
        assert sys.theta == pytest.approx(PI, abs=1e-12)
        np.testing.assert_allclose(sys.vec_plus, [0.0, 1.0], atol=1e-12)

    def test_resonant_mixing(self, grid):
        sys = instantaneous_eigensystem(self._controls(grid, 0.0, 1.0), 0)
        assert sys.theta == pytest.approx(PI / 2, abs=1e-12)
        np.testing.assert_allclose(np.abs(sys.vec_plus), [np.sqrt(0.5)] * 2, atol=1e-12)
        assert sys.e_plus == pytest.approx(0.5)

    def test_eigen_equation(self, grid):
        controls = self._controls(grid, 0.7, 1.3, 0.4)
        sys = instantaneous_eigensystem(controls, 0)
        h = hamiltonian(controls, 0).matrix
        np.testing.assert_allclose(h @ sys.vec_plus, sys.e_plus * sys.vec_plus, atol=1e-12)
        np.testing.assert_allclose(h @ sys.vec_minus, sys.e_minus * sys.vec_minus, atol=1e-12)

    def test_degenerate_point(self, grid):
        with pytest.raises(ValueError, match="degenerate point"):
            instantaneous_eigensystem(self._controls(grid, 0.0, 0.0), 0)


class TestTransportPhase:
    def test_flat_gamma_at_pi(self, grid):
        # gamma = pi kills both terms of the twisted frequency
        design = AngleDesign(
            gamma=PolynomialCurve.constant(PI),
            beta=PolynomialCurve([0.0, 0.5]),
            t_f=1.0,
        )
        n = grid.n_samples
        delta = np.linspace(1.0, 2.0, n)
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, delta),
            omega_r=SampledScalar(grid, np.zeros(n)),
            phi=SampledScalar(grid, np.zeros(n)),
        )
        alpha_plus, alpha_minus = lr_phase_tls(design, controls, n - 1)
        assert alpha_plus == pytest.approx(0.5 * 1.5, abs=1e-10)
        assert alpha_minus == -alpha_plus

    def test_antisymmetry(self, fig1, fig1_controls):
        for node in (10, 100, 200):
            plus, minus = lr_phase_tls(fig1, fig1_controls, node)
            assert plus + minus == 0.0

    def test_profile_starts_at_zero(self, fig1, fig1_controls):
        alpha = lr_phases_on_grid(fig1, fig1_controls)
        assert alpha[0] == 0.0


class TestEndpointCommutators:
    def test_fig1_clean(self, fig1, fig1_controls):
        report = commutator_endpoint_report(fig1, fig1_controls)
        assert report.clean(1e-10)
        assert report.omega_r_zero_start and report.omega_r_zero_end
        assert report.gamma_multiple_start and report.gamma_multiple_end

    def test_fig2_clean(self, fig2, grid):
        report = commutator_endpoint_report(fig2, controls_from_angles(fig2, grid))
        assert report.clean(1e-10)

    def test_breaking_case_formula(self, grid):
        # gamma(0) = pi/2, beta = phi: the norm reduces to a closed form
        design = AngleDesign(
            gamma=PolynomialCurve([PI / 2, 0.4]),
            beta=PolynomialCurve.constant(0.0),
            omega0=1.0,
            t_f=1.0,
        )
        n = grid.n_samples
        delta0 = 2.0
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.full(n, delta0)),
            omega_r=SampledScalar(grid, np.full(n, 0.7)),
            phi=SampledScalar(grid, np.zeros(n)),
        )
        report = commutator_endpoint_report(design, controls)
        g = PI / 2
        expected = 0.5 * abs(delta0 * np.sin(g) - 0.7 * np.cos(g)) * np.sqrt(2)
        assert report.norm_start == pytest.approx(expected, rel=1e-12)
        assert not report.clean(1e-10)

    def test_diagonal_pair_commutes_everywhere(self, grid):
        design = AngleDesign(
            gamma=PolynomialCurve.constant(0.0),
            beta=PolynomialCurve.constant(-PI / 2),
            t_f=1.0,
        )
        n = grid.n_samples
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.full(n, 1.3)),
            omega_r=SampledScalar(grid, np.zeros(n)),
            phi=SampledScalar(grid, np.zeros(n)),
        )
        report = commutator_endpoint_report(design, controls)
        assert report.norm_start == 0.0
        assert report.norm_end == 0.0


class TestReconstruction:
    def test_fig1_round_trip(self, fig1, fig1_controls, grid):
        scale = max(np.max(np.abs(fig1_controls.delta.values)), np.max(fig1_controls.omega_r.values))
        for node in range(1, grid.n_samples - 1):
            diff = (
                reconstruct_hamiltonian(fig1, fig1_controls, node).matrix
                - hamiltonian(fig1_controls, node).matrix
            )
            assert np.max(np.abs(diff)) <= 1e-12 * scale

    def test_static_consistency(self, grid):
        design = AngleDesign(
            gamma=PolynomialCurve.constant(PI / 2),
            beta=PolynomialCurve.constant(0.0),
            t_f=1.0,
        )
        n = grid.n_samples
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.zeros(n)),
            omega_r=SampledScalar(grid, np.zeros(n)),
            phi=SampledScalar(grid, np.zeros(n)),
        )
        diff = reconstruct_hamiltonian(design, controls, 5).matrix - hamiltonian(controls, 5).matrix
        assert np.max(np.abs(diff)) < 1e-14

    def test_perturbed_slope_detected(self, fig1, grid):
        # negative control: inflating beta' breaks the consistency equations
        bad_beta = fig1.beta.coefficients.copy()
        bad_beta[1] *= 1.1
        bad = AngleDesign(gamma=fig1.gamma, beta=PolynomialCurve(bad_beta), t_f=1.0)
        controls = controls_from_angles(fig1, grid)
        node = 100
        diff = reconstruct_hamiltonian(bad, controls, node).matrix - hamiltonian(controls, node).matrix
        assert np.max(np.abs(diff)) > 1e-3


class TestBerryCorrection:
    def test_static_controls_vanish(self, grid):
        delta = PolynomialCurve.constant(1.0)
        omega_r = PolynomialCurve.constant(0.5)
        controls = controls_from_curves(delta, omega_r, PolynomialCurve.constant(0.0), grid)
        assert berry_cd_term(controls, 50).frobenius() == pytest.approx(0.0, abs=1e-15)

    def test_rotating_controls_match_mixing_angle_rate(self):
        # Delta = W cos(s), Omega_R = W sin(s): theta(t) tracks s(t) exactly
        grid = TimeGrid.uniform(1.0, 401)
        s = 0.3 + 2.1 * grid.nodes - 0.7 * grid.nodes**2
        big_omega = 1.7
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, big_omega * np.cos(s)),
            omega_r=SampledScalar(grid, big_omega * np.sin(s)),
            phi=SampledScalar(grid, np.zeros(grid.n_samples)),
        )
        theta = np.array(
            [instantaneous_eigensystem(controls, j).theta for j in range(grid.n_samples)]
        )
        dt = grid.spacing
        for node in (50, 200, 350):
            theta_dot_fd = (theta[node + 1] - theta[node - 1]) / (2 * dt)
            mat = berry_cd_term(controls, node).matrix
            theta_dot_impl = -2.0 * np.imag(mat[0, 1])
            assert theta_dot_impl == pytest.approx(theta_dot_fd, abs=1e-8)
            # Omega_a of the phi = 0 reduction is minus the mixing-angle rate
            omega_a = (
                controls.omega_r.values[node] * controls.derivatives()[0][node]
                - controls.derivatives()[1][node] * controls.delta.values[node]
            ) / big_omega**2
            assert omega_a == pytest.approx(-theta_dot_impl, abs=1e-8)

    def test_phase_rate_diagonal(self, grid):
        delta = PolynomialCurve.constant(0.0)
        omega_r = PolynomialCurve.constant(1.0)     # theta = pi/2
        phi = PolynomialCurve([0.0, 0.8])
        controls = controls_from_curves(delta, omega_r, phi, grid)
        mat = berry_cd_term(controls, 30).matrix
        assert mat[0, 0] == pytest.approx(-0.5 * 0.8, abs=1e-12)
        assert mat[1, 1] == pytest.approx(+0.5 * 0.8, abs=1e-12)

    def test_traceless_hermitian(self, fig1_controls):
        for node in (1, 77, 199):
            mat = berry_cd_term(fig1_controls, node).matrix
            assert abs(np.trace(mat)) < 1e-14
            np.testing.assert_allclose(mat, mat.conj().T, atol=1e-14)


class TestAdiabaticityMetric:
    def test_static_zero(self, grid):
        controls = controls_from_curves(
            PolynomialCurve.constant(1.0), PolynomialCurve.constant(2.0),
            PolynomialCurve.constant(0.0), grid,
        )
        assert adiabaticity_metric(controls) == 0.0

    def test_fig1_effectively_adiabatic(self, fig1_controls):
        metric = adiabaticity_metric(fig1_controls)
        assert metric < 1.0  # actual value ~0.42, recorded by the check report

    def test_fig2_clearly_non_adiabatic(self, fig1_controls, fig2, grid):
        metric2 = adiabaticity_metric(controls_from_angles(fig2, grid))
        assert metric2 > 2.0 * adiabaticity_metric(fig1_controls)


class TestTrackingSplit:
    def test_h1_vanishes_at_protocol_ends(self, fig1, fig1_controls, grid):
        scale = max(np.max(np.abs(fig1_controls.delta.values)), np.max(fig1_controls.omega_r.values))
        for node in (0, grid.n_samples - 1):
            h = hamiltonian(fig1_controls, node).matrix
            h0 = tracking_h0_from_angles(fig1, fig1_controls, node).matrix
            assert np.max(np.abs(h - h0)) <= 1e-10 * scale

    def test_remainder_matches_closed_form(self, fig1, fig1_controls, grid):
        for node in (20, 100, 180):
            t = grid.nodes[node]
            h = hamiltonian(fig1_controls, node).matrix
            h0 = tracking_h0_from_angles(fig1, fig1_controls, node).matrix
            h1 = tracking_h1_from_angles(fig1, t).matrix
            assert np.max(np.abs(h - h0 - h1)) <= 1e-12 * np.max(np.abs(h))

    def test_diagonal_family(self, grid):
        design = AngleDesign(
            gamma=PolynomialCurve.constant(0.0),
            beta=PolynomialCurve.constant(-PI / 2),
            omega0=2.0,
            t_f=1.0,
        )
        n = grid.n_samples
        controls = TLSControls(
            grid=grid,
            delta=SampledScalar(grid, np.full(n, 1.2)),
            omega_r=SampledScalar(grid, np.zeros(n)),
            phi=SampledScalar(grid, np.zeros(n)),
        )
        h0 = tracking_h0_from_angles(design, controls, 9).matrix
        expected = (1.2 / 2.0) * invariant_matrix(design, grid.nodes[9]).matrix
        np.testing.assert_allclose(h0, expected, atol=1e-14)


class TestSerialization:
    def test_round_trip(self, fig2):
        doc = fig2.to_dict()
        assert set(doc) == {
            "t_f", "gamma_coefficients", "beta_coefficients", "phi_coefficients", "Omega0",
        }
        clone = AngleDesign.from_dict(doc)
        ts = np.linspace(0, 1, 13)
        np.testing.assert_allclose(clone.beta(ts), fig2.beta(ts), atol=1e-15)

    def test_eigenvector_parameterization(self, fig1):
        for t in (0.2, 0.8):
            plus, minus = invariant_eigenvectors(fig1, t)
            inv = invariant_matrix(fig1, t).matrix
            np.testing.assert_allclose(inv @ plus, 0.5 * plus, atol=1e-12)
            np.testing.assert_allclose(inv @ minus, -0.5 * minus, atol=1e-12)
            assert abs(np.vdot(plus, minus)) < 1e-14
