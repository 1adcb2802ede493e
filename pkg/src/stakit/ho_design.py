"""Shortcut design for the time-dependent harmonic oscillator.

Two construction routes for the driving Hamiltonian live here.  The
scaling-factor route fixes a positive function b(t) satisfying boundary
conditions that make the quadratic dynamical invariant commute with the
Hamiltonian at both ends, then reads the trap frequency off the Ermakov
relation  b'' + w^2(t) b = w0^2 / b^3.  The tracking route starts from a
reference frequency ramp w(t) and adds the counterdiabatic (p q + q p)
cross term.  Operators are carried as coefficient snapshots of
c_pp p^2 + c_qq q^2 + c_pq (p q + q p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import (
    BoundaryConstraint,
    PolynomialCurve,
    SampledScalar,
    TimeGrid,
    cumulative_integral,
    fit_polynomial,
)
from .units import MASS

__all__ = [
    "QuadraticForm",
    "ErmakovDesign",
    "OmegaRamp",
    "standard_boundary_constraints",
    "design_expansion",
    "design_ramp",
    "omega_squared",
    "invariant_form",
    "hamiltonian_form",
    "h0_h1_split",
    "lr_phase_ho",
    "lr_phases_on_grid",
    "berry_ho_hamiltonian",
    "berry_ho_invariant",
]


@dataclass(frozen=True)
class QuadraticForm:
    """Snapshot of a generalized harmonic oscillator operator.

    Coefficients of p^2, q^2 and the symmetrized cross term (p q + q p);
    all real, which is exactly Hermiticity of the operator.
    """

    c_pp: float
    c_qq: float
    c_pq: float

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.c_pp + other.c_pp, self.c_qq + other.c_qq, self.c_pq + other.c_pq)

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.c_pp - other.c_pp, self.c_qq - other.c_qq, self.c_pq - other.c_pq)

    def scaled(self, factor: float) -> "QuadraticForm":
        return QuadraticForm(factor * self.c_pp, factor * self.c_qq, factor * self.c_pq)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c_pp, self.c_qq, self.c_pq)


@dataclass(frozen=True)
class ErmakovDesign:
    """Expansion/compression protocol defined by its scaling factor b(t)."""

    omega0: float
    omega_f: float
    t_f: float
    b: PolynomialCurve

    def __post_init__(self):
        if min(self.omega0, self.omega_f, self.t_f) <= 0:
            raise ValueError("omega0, omega_f and t_f must be positive")
        ts = np.linspace(0.0, self.t_f, 1001)
        if np.any(self.b(ts) <= 0):
            raise ValueError("scaling factor non-positive on [0, t_f]")

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "omega_f": self.omega_f,
            "t_f": self.t_f,
            "b_coefficients": self.b.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ErmakovDesign":
        return cls(
            omega0=float(data["omega0"]),
            omega_f=float(data["omega_f"]),
            t_f=float(data["t_f"]),
            b=PolynomialCurve(np.asarray(data["b_coefficients"], dtype=float)),
        )


@dataclass(frozen=True)
class OmegaRamp:
    """Reference frequency schedule for the tracking route."""

    omega: PolynomialCurve
    t_f: float

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        ts = np.linspace(0.0, self.t_f, 1001)
        if np.any(self.omega(ts) <= 0):
            raise ValueError("reference frequency non-positive on [0, t_f]")

    @property
    def omega0(self) -> float:
        return self.omega(0.0)


def standard_boundary_constraints(omega0: float, omega_f: float, t_f: float) -> list[BoundaryConstraint]:
    """Boundary data for b(t): value and first two derivatives at both ends.

    The final value is sqrt(omega0/omega_f), the stationary point of the
    Ermakov relation at frequency omega_f (b'' = 0 forces b^4 = omega0^2 /
    omega_f^2), which makes H(t_f) the plain omega_f oscillator.
    """
    if min(omega0, omega_f, t_f) <= 0:
        raise ValueError("omega0, omega_f and t_f must be positive")
    b_final = np.sqrt(omega0 / omega_f)
    return [
        BoundaryConstraint(0.0, 0, 1.0),
        BoundaryConstraint(0.0, 1, 0.0),
        BoundaryConstraint(0.0, 2, 0.0),
        BoundaryConstraint(t_f, 0, b_final),
        BoundaryConstraint(t_f, 1, 0.0),
        BoundaryConstraint(t_f, 2, 0.0),
    ]


def design_expansion(omega0: float, omega_f: float, t_f: float, degree: int = 5) -> ErmakovDesign:
    """Fit a polynomial b(t) through the standard boundary data.

    Degree 5 is the minimal determined system.  Higher odd degrees pad the
    boundary data with additional vanishing endpoint derivatives, keeping the
    ramp ends flat to higher order.
    """
    if degree < 5 or degree % 2 == 0:
        raise ValueError("degree must be odd and >= 5")
    constraints = standard_boundary_constraints(omega0, omega_f, t_f)
    for order in range(3, (degree + 1) // 2):
        constraints.append(BoundaryConstraint(0.0, order, 0.0))
        constraints.append(BoundaryConstraint(t_f, order, 0.0))
    b = fit_polynomial(constraints, degree)
    return ErmakovDesign(omega0=omega0, omega_f=omega_f, t_f=t_f, b=b)


def design_ramp(omega0: float, omega_f: float, t_f: float) -> OmegaRamp:
    """Quintic frequency ramp with vanishing first and second endpoint derivatives."""
    constraints = [
        BoundaryConstraint(0.0, 0, omega0),
        BoundaryConstraint(0.0, 1, 0.0),
        BoundaryConstraint(0.0, 2, 0.0),
        BoundaryConstraint(t_f, 0, omega_f),
        BoundaryConstraint(t_f, 1, 0.0),
        BoundaryConstraint(t_f, 2, 0.0),
    ]
    return OmegaRamp(omega=fit_polynomial(constraints, 5), t_f=t_f)


def omega_squared(design: ErmakovDesign, t: float) -> float:
    """Engineered squared frequency w^2 = w0^2/b^4 - b''/b.

    May be negative for aggressive ramps (transient trap inversion); the
    signed value is returned and flagging is left to the caller.
    """
    b = design.b(t)
    if np.any(np.asarray(b) <= 0):
        raise ValueError("scaling factor non-positive")
    bdd = design.b(t, order=2)
    return design.omega0**2 / b**4 - bdd / b


def invariant_form(design: ErmakovDesign, t: float) -> QuadraticForm:
    """Dynamical invariant snapshot; its spectrum is (n + 1/2) hbar w0 at all t."""
    b = design.b(t)
    bd = design.b(t, order=1)
    return QuadraticForm(
        c_pp=b**2 / (2 * MASS),
        c_qq=MASS * (design.omega0**2 / b**2 + bd**2) / 2,
        c_pq=-b * bd / 2,
    )


def hamiltonian_form(design: ErmakovDesign, t: float) -> QuadraticForm:
    """Driving Hamiltonian snapshot: a plain oscillator at the engineered w^2(t)."""
    return QuadraticForm(c_pp=1 / (2 * MASS), c_qq=MASS * omega_squared(design, t) / 2, c_pq=0.0)


def h0_h1_split(design: ErmakovDesign, t: float) -> tuple[QuadraticForm, QuadraticForm]:
    """Split H = H0 + H1 with H0 the reference the dynamics tracks.

    H0(t) = lam(t) I(t) with lam = 1/b^2 + (b'^2 - b'' b) / (2 w0^2); H1 is
    the coefficient-wise remainder, so the parts sum back exactly.
    """
    b = design.b(t)
    bd = design.b(t, order=1)
    bdd = design.b(t, order=2)
    lam = 1 / b**2 + (bd**2 - bdd * b) / (2 * design.omega0**2)
    h0 = invariant_form(design, t).scaled(lam)
    h1 = hamiltonian_form(design, t) - h0
    return h0, h1


def lr_phase_ho(design: ErmakovDesign, n: int, t: float, samples: int = 2049) -> float:
    """Transport phase of mode n at time t: -(n + 1/2) w0 * integral of 1/b^2."""
    if n < 0:
        raise ValueError("level index must be non-negative")
    if t == 0.0:
        return 0.0
    grid = TimeGrid.uniform(t, samples)
    return float(lr_phases_on_grid(design, n, grid)[-1])


def lr_phases_on_grid(design: ErmakovDesign, n: int, grid: TimeGrid) -> np.ndarray:
    """Transport phase of mode n at every grid node."""
    if n < 0:
        raise ValueError("level index must be non-negative")
    integrand = SampledScalar.from_function(grid, lambda ts: 1.0 / design.b(ts) ** 2)
    return -(n + 0.5) * design.omega0 * cumulative_integral(integrand)


def berry_ho_hamiltonian(ramp: OmegaRamp, t: float) -> QuadraticForm:
    """Tracking Hamiltonian for the ramp: reference oscillator plus cross term."""
    w = ramp.omega(t)
    if np.any(np.asarray(w) <= 0):
        raise ValueError("reference frequency non-positive")
    wd = ramp.omega(t, order=1)
    return QuadraticForm(c_pp=1 / (2 * MASS), c_qq=MASS * w**2 / 2, c_pq=-wd / (4 * w))


def berry_ho_invariant(ramp: OmegaRamp, t: float) -> QuadraticForm:
    """Invariant of the tracking Hamiltonian: (w0/w) times the reference oscillator."""
    w = ramp.omega(t)
    if np.any(np.asarray(w) <= 0):
        raise ValueError("reference frequency non-positive")
    return QuadraticForm(c_pp=1 / (2 * MASS), c_qq=MASS * w**2 / 2, c_pq=0.0).scaled(ramp.omega0 / w)
