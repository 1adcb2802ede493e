"""Two-level-atom protocol design.

The invariant of the qubit Hamiltonian is parameterized by a polar pair of
auxiliary angles (gamma, beta); prescribing those angles and inverting the
consistency equations

    gamma' = Omega_R sin(beta - phi)
    (Delta + beta') sin(gamma) = Omega_R cos(gamma) cos(beta - phi)

yields the physical controls Delta(t) and Omega_R(t) that realize an exact
population-transfer protocol in arbitrary time.  The module also provides the
transport phases, endpoint commutation checks, the counterdiabatic correction
for a reference control schedule, and the two cubic/quartic presets used in
the verification suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import (
    BoundaryConstraint,
    PolynomialCurve,
    SampledScalar,
    TimeGrid,
    cumulative_integral,
    fit_polynomial,
    sampled_derivative,
)
from .units import HBAR

__all__ = [
    "AngleDesign",
    "TLSControls",
    "TwoLevelMatrix",
    "InstantaneousEigensystem",
    "EndpointCommutatorReport",
    "controls_from_angles",
    "controls_from_curves",
    "hamiltonian",
    "invariant_matrix",
    "invariant_eigenvectors",
    "instantaneous_eigensystem",
    "lr_phase_tls",
    "lr_phases_on_grid",
    "commutator_endpoint_report",
    "reconstruct_hamiltonian",
    "berry_cd_term",
    "adiabaticity_metric",
    "preset_fig1",
    "preset_fig2",
    "tracking_h0_from_angles",
    "tracking_h1_from_angles",
]

# Basis convention: |2> = (1, 0), |1> = (0, 1); index 0 is the excited state.

# A node counts as an endpoint of the gamma = n*pi family when both hold.
ENDPOINT_GAMMA_TOL = 1e-6
ENDPOINT_RATE_TOL = 1e-6
# Below this, trigonometric factors are treated as exact zeros (they are
# zeros of the design rounded through double precision, e.g. cos(pi/2)).
TRIG_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class TwoLevelMatrix:
    """2x2 Hermitian matrix snapshot."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        if matrix.shape != (2, 2):
            raise ValueError("need a 2x2 matrix")
        scale = np.linalg.norm(matrix)
        if scale > 0 and np.linalg.norm(matrix - matrix.conj().T) > 1e-14 * scale:
            raise ValueError("matrix is not Hermitian")

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def __sub__(self, other: "TwoLevelMatrix") -> "TwoLevelMatrix":
        return TwoLevelMatrix(self.matrix - other.matrix)

    def __add__(self, other: "TwoLevelMatrix") -> "TwoLevelMatrix":
        return TwoLevelMatrix(self.matrix + other.matrix)


@dataclass(frozen=True)
class AngleDesign:
    """Invariant parameterization: auxiliary angles and the eigenvalue scale.

    For a clean endpoint-commuting protocol, gamma should hit integer
    multiples of pi at t = 0 and t = t_f with cos(beta - phi) = 0 there;
    designs violating this are constructible on purpose (the endpoint report
    flags them) but their controls blow up.
    """

    gamma: PolynomialCurve
    beta: PolynomialCurve
    phi: PolynomialCurve = field(default_factory=lambda: PolynomialCurve.constant(0.0))
    omega0: float = 1.0
    t_f: float = 1.0

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")

    def to_dict(self) -> dict:
        return {
            "t_f": self.t_f,
            "gamma_coefficients": self.gamma.coefficients.tolist(),
            "beta_coefficients": self.beta.coefficients.tolist(),
            "phi_coefficients": self.phi.coefficients.tolist(),
            "Omega0": self.omega0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AngleDesign":
        return cls(
            gamma=PolynomialCurve(np.asarray(data["gamma_coefficients"], dtype=float)),
            beta=PolynomialCurve(np.asarray(data["beta_coefficients"], dtype=float)),
            phi=PolynomialCurve(np.asarray(data.get("phi_coefficients", [0.0]), dtype=float)),
            omega0=float(data.get("Omega0", 1.0)),
            t_f=float(data["t_f"]),
        )


@dataclass(frozen=True)
class TLSControls:
    """Detuning, Rabi frequency and drive phase sampled on a common grid.

    When the controls come from explicit polynomial curves, those curves ride
    along so that derivative-sensitive quantities use exact derivatives; for
    sampled-only controls, 4th-order finite differences are used instead.
    """

    grid: TimeGrid
    delta: SampledScalar
    omega_r: SampledScalar
    phi: SampledScalar
    curves: tuple[PolynomialCurve, PolynomialCurve, PolynomialCurve] | None = None

    def __post_init__(self):
        for s in (self.delta, self.omega_r, self.phi):
            if s.grid is not self.grid and not np.array_equal(s.grid.nodes, self.grid.nodes):
                raise ValueError("all controls must share the grid")

    def derivatives(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Time derivatives of (Delta, Omega_R, phi) at the nodes."""
        if self.curves is not None:
            d, o, p = self.curves
            ts = self.grid.nodes
            return d(ts, order=1), o(ts, order=1), p(ts, order=1)
        dt = self.grid.spacing
        return (
            sampled_derivative(self.delta.values, dt),
            sampled_derivative(self.omega_r.values, dt),
            sampled_derivative(self.phi.values, dt),
        )


def _controls_at(design: AngleDesign, t: float) -> tuple[float, float, float]:
    """(Delta, Omega_R, phi) at one time, inverting the consistency equations.

    At endpoints of the gamma = n*pi family the detuning formula is a 0 * inf
    product; it is replaced by the continuous limit -3 beta' + 2 phi', valid
    when cos(beta - phi) vanishes there (enforced below).
    """
    g = design.gamma(t)
    gd = design.gamma(t, order=1)
    b = design.beta(t)
    bd = design.beta(t, order=1)
    p = design.phi(t)
    pd = design.phi(t, order=1)

    rel = b - p
    sin_rel = np.sin(rel)
    cos_rel = np.cos(rel)
    gamma_res = g - np.pi * np.round(g / np.pi)

    if abs(gamma_res) < ENDPOINT_GAMMA_TOL and abs(gd) < ENDPOINT_RATE_TOL:
        if abs(cos_rel) > 1e-9:
            raise ValueError(
                "detuning divergent at gamma = n*pi endpoint: cos(beta - phi) != 0"
            )
        omega_r = gd / sin_rel if abs(sin_rel) > TRIG_ZERO_TOL else 0.0
        delta = -3.0 * bd + 2.0 * pd
    else:
        if abs(sin_rel) <= TRIG_ZERO_TOL:
            raise ValueError("ansatz singularity: infinite Rabi frequency")
        omega_r = gd / sin_rel
        coupling = omega_r * cos_rel
        if abs(cos_rel) <= TRIG_ZERO_TOL:
            cot_term = 0.0
        else:
            sin_g = np.sin(g)
            if abs(sin_g) <= TRIG_ZERO_TOL:
                raise ValueError("detuning divergent: gamma = n*pi at interior node")
            cot_term = coupling * np.cos(g) / sin_g
        delta = cot_term - bd

    if omega_r < 0:
        omega_r = -omega_r
        p = p + np.pi
    return float(delta), float(omega_r), float(p)


def controls_from_angles(design: AngleDesign, grid: TimeGrid) -> TLSControls:
    """Physical controls realizing the angle design, sampled at the grid nodes.

    The Rabi frequency is kept non-negative; a sign flip is folded into the
    drive phase.
    """
    deltas = np.empty(grid.n_samples)
    omegas = np.empty(grid.n_samples)
    phis = np.empty(grid.n_samples)
    for i, t in enumerate(grid.nodes):
        deltas[i], omegas[i], phis[i] = _controls_at(design, t)
    return TLSControls(
        grid=grid,
        delta=SampledScalar(grid, deltas),
        omega_r=SampledScalar(grid, omegas),
        phi=SampledScalar(grid, phis),
    )


def controls_from_curves(
    delta: PolynomialCurve,
    omega_r: PolynomialCurve,
    phi: PolynomialCurve,
    grid: TimeGrid,
) -> TLSControls:
    """Controls given directly as polynomial schedules."""
    ts = grid.nodes
    return TLSControls(
        grid=grid,
        delta=SampledScalar(grid, delta(ts)),
        omega_r=SampledScalar(grid, omega_r(ts)),
        phi=SampledScalar(grid, phi(ts)),
        curves=(delta, omega_r, phi),
    )


def hamiltonian(controls: TLSControls, node: int) -> TwoLevelMatrix:
    """Qubit Hamiltonian at a grid node (interaction picture, RWA)."""
    d = controls.delta.values[node]
    o = controls.omega_r.values[node]
    p = controls.phi.values[node]
    off = o * np.exp(1j * p)
    return TwoLevelMatrix(0.5 * HBAR * np.array([[d, off], [np.conj(off), -d]]))


def invariant_matrix(design: AngleDesign, t: float) -> TwoLevelMatrix:
    """Invariant snapshot; eigenvalues are +-hbar Omega0 / 2 at every time."""
    g = design.gamma(t)
    b = design.beta(t)
    off = np.sin(g) * np.exp(1j * b)
    return TwoLevelMatrix(
        0.5 * HBAR * design.omega0 * np.array([[np.cos(g), off], [np.conj(off), -np.cos(g)]])
    )


def invariant_eigenvectors(design: AngleDesign, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic eigenvectors (phi_plus, phi_minus) of the invariant at time t."""
    g = design.gamma(t)
    b = design.beta(t)
    plus = np.array([np.cos(g / 2) * np.exp(1j * b), np.sin(g / 2)], dtype=complex)
    minus = np.array([np.sin(g / 2), -np.cos(g / 2) * np.exp(-1j * b)], dtype=complex)
    return plus, minus


@dataclass(frozen=True)
class InstantaneousEigensystem:
    theta: float
    e_plus: float
    e_minus: float
    vec_plus: np.ndarray
    vec_minus: np.ndarray


def instantaneous_eigensystem(controls: TLSControls, node: int) -> InstantaneousEigensystem:
    """Mixing angle, energies and eigenvectors of H at a grid node."""
    d = controls.delta.values[node]
    o = controls.omega_r.values[node]
    p = controls.phi.values[node]
    omega = np.hypot(d, o)
    if omega == 0:
        raise ValueError("degenerate point: mixing angle undefined")
    theta = float(np.arccos(np.clip(d / omega, -1.0, 1.0)))
    half = theta / 2
    vec_plus = np.array([np.cos(half) * np.exp(1j * p), np.sin(half)], dtype=complex)
    vec_minus = np.array([np.sin(half), -np.cos(half) * np.exp(-1j * p)], dtype=complex)
    return InstantaneousEigensystem(
        theta=theta,
        e_plus=0.5 * HBAR * omega,
        e_minus=-0.5 * HBAR * omega,
        vec_plus=vec_plus,
        vec_minus=vec_minus,
    )


def _phase_integrand(design: AngleDesign, controls: TLSControls) -> np.ndarray:
    """(Delta - 2 Omega_tilde)/2 at the nodes, the rate of the + transport phase."""
    ts = controls.grid.nodes
    g = design.gamma(ts)
    b = design.beta(ts)
    bd = design.beta(ts, order=1)
    p = design.phi(ts)
    d = controls.delta.values
    o = controls.omega_r.values
    omega_tilde = (d + bd) * np.cos(g / 2) ** 2 + 0.5 * o * np.sin(g) * np.cos(b - p)
    return 0.5 * (d - 2.0 * omega_tilde)


def lr_phases_on_grid(design: AngleDesign, controls: TLSControls) -> np.ndarray:
    """Transport phase alpha_plus at every node (alpha_minus is its negative)."""
    integrand = SampledScalar(controls.grid, _phase_integrand(design, controls))
    return cumulative_integral(integrand)


def lr_phase_tls(design: AngleDesign, controls: TLSControls, up_to: int) -> tuple[float, float]:
    """(alpha_plus, alpha_minus) accumulated up to a grid node."""
    alpha_plus = float(lr_phases_on_grid(design, controls)[up_to])
    return alpha_plus, -alpha_plus


@dataclass(frozen=True)
class EndpointCommutatorReport:
    norm_start: float
    norm_end: float
    relative_start: float
    relative_end: float
    omega_r_zero_start: bool
    omega_r_zero_end: bool
    gamma_multiple_start: bool
    gamma_multiple_end: bool

    def clean(self, tol: float = 1e-10) -> bool:
        return max(self.relative_start, self.relative_end) <= tol


def commutator_endpoint_report(design: AngleDesign, controls: TLSControls) -> EndpointCommutatorReport:
    """Frobenius norms of [H, I] at both endpoints plus boundary-condition flags.

    Relative norms divide by hbar^2 Omega0 max(|Delta|, Omega_R) over the grid.
    """
    norms = []
    for node, t in ((0, 0.0), (controls.grid.n_samples - 1, design.t_f)):
        h = hamiltonian(controls, node).matrix
        inv = invariant_matrix(design, t).matrix
        norms.append(float(np.linalg.norm(h @ inv - inv @ h)))
    scale = HBAR**2 * design.omega0 * max(
        np.max(np.abs(controls.delta.values)), np.max(controls.omega_r.values), 1e-300
    )

    def is_multiple(t):
        g = design.gamma(t)
        return bool(abs(g - np.pi * np.round(g / np.pi)) < ENDPOINT_GAMMA_TOL)

    return EndpointCommutatorReport(
        norm_start=norms[0],
        norm_end=norms[1],
        relative_start=float(norms[0] / scale),
        relative_end=float(norms[1] / scale),
        omega_r_zero_start=bool(controls.omega_r.values[0] < ENDPOINT_RATE_TOL),
        omega_r_zero_end=bool(controls.omega_r.values[-1] < ENDPOINT_RATE_TOL),
        gamma_multiple_start=is_multiple(0.0),
        gamma_multiple_end=is_multiple(design.t_f),
    )


def reconstruct_hamiltonian(design: AngleDesign, controls: TLSControls, node: int) -> TwoLevelMatrix:
    """Hamiltonian rebuilt from the angle parameterization (consistency check).

    With controls produced by `controls_from_angles`, this must reproduce
    `hamiltonian(controls, node)` elementwise; any mismatch measures a broken
    design/controls pairing.
    """
    t = controls.grid.nodes[node]
    g = design.gamma(t)
    gd = design.gamma(t, order=1)
    b = design.beta(t)
    bd = design.beta(t, order=1)
    p = design.phi(t)
    d = controls.delta.values[node]
    o = controls.omega_r.values[node]
    cos_rel = np.cos(b - p)
    m = d * np.cos(g) ** 2 + o * np.sin(g) * np.cos(g) * cos_rel - bd * np.sin(g) ** 2
    n_val = (d * np.cos(g) + o * np.sin(g) * cos_rel + bd * np.cos(g)) * np.sin(g) - 1j * gd
    off = n_val * np.exp(1j * b)
    return TwoLevelMatrix(0.5 * HBAR * np.array([[m, off], [np.conj(off), -m]]))


def berry_cd_term(controls: TLSControls, node: int) -> TwoLevelMatrix:
    """Counterdiabatic correction for the control schedule at a grid node.

    Built from the mixing-angle rates: theta' = (Delta Omega_R' -
    Delta' Omega_R) / Omega^2 and the drive-phase rate phi'.  For phi = 0 it
    reduces to (hbar/2) [[0, i Omega_a], [-i Omega_a, 0]] with
    Omega_a = (Omega_R Delta' - Omega_R' Delta) / Omega^2 = -theta'.
    """
    d = controls.delta.values[node]
    o = controls.omega_r.values[node]
    p = controls.phi.values[node]
    dd, od, pd = (arr[node] for arr in controls.derivatives())
    omega_sq = d * d + o * o
    if omega_sq == 0:
        raise ValueError("degenerate point")
    theta_dot = (d * od - dd * o) / omega_sq
    sin_theta = o / np.sqrt(omega_sq)
    cos_theta = d / np.sqrt(omega_sq)
    sin_2theta = 2 * sin_theta * cos_theta
    diag = -pd * sin_theta**2
    off = (-1j * theta_dot + 0.5 * pd * sin_2theta) * np.exp(1j * p)
    return TwoLevelMatrix(0.5 * HBAR * np.array([[diag, off], [np.conj(off), -diag]]))


def adiabaticity_metric(controls: TLSControls) -> float:
    """max over nodes of |Omega_R Delta' - Omega_R' Delta| / Omega^3."""
    d = controls.delta.values
    o = controls.omega_r.values
    dd, od, _ = controls.derivatives()
    omega = np.hypot(d, o)
    if np.any(omega == 0):
        raise ValueError("degenerate point")
    return float(np.max(np.abs(o * dd - od * d) / omega**3))


def preset_fig1(t_f: float, omega0: float = 1.0) -> AngleDesign:
    """Cubic-angle transfer protocol with the larger endpoint detunings."""
    gamma = fit_polynomial(
        [
            BoundaryConstraint(0.0, 0, np.pi),
            BoundaryConstraint(0.0, 1, 0.0),
            BoundaryConstraint(t_f, 0, 0.0),
            BoundaryConstraint(t_f, 1, 0.0),
        ],
        degree=3,
    )
    beta = fit_polynomial(
        [
            BoundaryConstraint(0.0, 0, -np.pi / 2),
            BoundaryConstraint(0.0, 1, 3 * np.pi / (2 * t_f)),
            BoundaryConstraint(t_f, 0, -np.pi / 2),
            BoundaryConstraint(t_f, 1, -3 * np.pi / (2 * t_f)),
        ],
        degree=3,
    )
    return AngleDesign(gamma=gamma, beta=beta, omega0=omega0, t_f=t_f)


def preset_fig2(t_f: float, omega0: float = 1.0) -> AngleDesign:
    """Same gamma as preset_fig1; quartic beta pinned to -pi/2 at mid-protocol.

    The smaller endpoint slopes diminish the detunings, trading adiabaticity
    of the path for lower drive energies.
    """
    gamma = preset_fig1(t_f).gamma
    beta = fit_polynomial(
        [
            BoundaryConstraint(0.0, 0, -np.pi / 2),
            BoundaryConstraint(t_f, 0, -np.pi / 2),
            BoundaryConstraint(t_f / 2, 0, -np.pi / 2),
            BoundaryConstraint(0.0, 1, np.pi / (2 * t_f)),
            BoundaryConstraint(t_f, 1, -np.pi / (2 * t_f)),
        ],
        degree=4,
    )
    return AngleDesign(gamma=gamma, beta=beta, omega0=omega0, t_f=t_f)


def tracking_h0_from_angles(design: AngleDesign, controls: TLSControls, node: int) -> TwoLevelMatrix:
    """Reference Hamiltonian implicit in the angle design (tracking language).

    H0 = [(Delta cos(gamma) + Omega_R sin(gamma) cos(beta - phi)) / Omega0] I(t);
    the remainder H - H0 is the purely off-diagonal-in-the-invariant-basis
    part given by `tracking_h1_from_angles`.
    """
    t = controls.grid.nodes[node]
    g = design.gamma(t)
    b = design.beta(t)
    p = design.phi(t)
    d = controls.delta.values[node]
    o = controls.omega_r.values[node]
    factor = (d * np.cos(g) + o * np.sin(g) * np.cos(b - p)) / design.omega0
    return TwoLevelMatrix(factor * invariant_matrix(design, t).matrix)


def tracking_h1_from_angles(design: AngleDesign, t: float) -> TwoLevelMatrix:
    """Explicit form of the correction the tracking split assigns to H1."""
    g = design.gamma(t)
    gd = design.gamma(t, order=1)
    b = design.beta(t)
    bd = design.beta(t, order=1)
    diag = -bd * np.sin(g) ** 2
    off = (-1j * gd + 0.5 * bd * np.sin(2 * g)) * np.exp(1j * b)
    return TwoLevelMatrix(0.5 * HBAR * np.array([[diag, off], [np.conj(off), -diag]]))
