"""Time-dependent Hamiltonian schedules in kernel-ready form.

Every Hamiltonian in the toolkit is a real-linear combination of a few
constant Hermitian matrices, H(t) = sum_k c_k(t) B_k.  A schedule bundles the
basis matrices with a coefficient provider.  Providers are small parameter
records (mostly polynomial coefficient arrays) that the compiled kernel can
evaluate without touching Python; their `coefficients` method is the
reference implementation used by the pure-Python kernel and by diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import tls_design
from ..curves import PolynomialCurve
from ..fock import build_operator
from ..ho_design import ErmakovDesign, OmegaRamp, QuadraticForm
from ..tls_design import AngleDesign
from ..units import HBAR, MASS

__all__ = [
    "HamiltonianSchedule",
    "PolynomialCoefficients",
    "TLSAngleCoefficients",
    "TLSControlCoefficients",
    "TLSMixingCoefficients",
    "HOErmakovCoefficients",
    "HOBerryCoefficients",
    "CallbackCoefficients",
    "tls_basis",
    "ho_basis",
    "tls_invariant_schedule",
    "tls_control_schedule",
    "tls_mixing_schedule",
    "ho_invariant_schedule",
    "ho_berry_schedule",
    "tls_invariant_evaluator",
    "tls_mixing_invariant_evaluator",
    "ho_invariant_evaluator",
    "ho_berry_invariant_evaluator",
]


def _coeff_arrays(curve: PolynomialCurve, orders: int) -> list[np.ndarray]:
    """Ascending coefficient arrays of the curve and its first derivatives."""
    out = [np.ascontiguousarray(curve.coefficients, dtype=float)]
    for order in range(1, orders + 1):
        out.append(np.ascontiguousarray(curve.derivative(order).coefficients, dtype=float))
    return out


def _polyval(coeffs: np.ndarray, t: float) -> float:
    result = 0.0
    for c in coeffs[::-1]:
        result = result * t + c
    return result


@dataclass
class PolynomialCoefficients:
    """Each channel is directly a polynomial in t."""

    polys: tuple[np.ndarray, ...]

    def __post_init__(self):
        self.polys = tuple(np.ascontiguousarray(p, dtype=float) for p in self.polys)

    @property
    def n_channels(self) -> int:
        return len(self.polys)

    def coefficients(self, t: float) -> np.ndarray:
        return np.array([_polyval(p, t) for p in self.polys])


@dataclass
class TLSAngleCoefficients:
    """Channels (Delta, Omega_R cos(phi), -Omega_R sin(phi)) from an angle design."""

    design: AngleDesign
    gamma: np.ndarray = field(init=False)
    gamma_d: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)
    beta_d: np.ndarray = field(init=False)
    phi: np.ndarray = field(init=False)
    phi_d: np.ndarray = field(init=False)

    n_channels = 3

    def __post_init__(self):
        self.gamma, self.gamma_d = _coeff_arrays(self.design.gamma, 1)
        self.beta, self.beta_d = _coeff_arrays(self.design.beta, 1)
        self.phi, self.phi_d = _coeff_arrays(self.design.phi, 1)

    def coefficients(self, t: float) -> np.ndarray:
        delta, omega_r, phi = tls_design._controls_at(self.design, t)
        return np.array([delta, omega_r * np.cos(phi), -omega_r * np.sin(phi)])


@dataclass
class TLSControlCoefficients:
    """Channels from polynomial control schedules Delta(t), Omega_R(t), phi(t).

    With `include_h1`, the counterdiabatic correction built from the
    mixing-angle rate is added on top of (or instead of) the bare controls.
    """

    delta: np.ndarray
    delta_d: np.ndarray
    omega_r: np.ndarray
    omega_r_d: np.ndarray
    phi: np.ndarray
    phi_d: np.ndarray
    include_h0: bool = True
    include_h1: bool = False

    n_channels = 3

    @classmethod
    def from_curves(
        cls,
        delta: PolynomialCurve,
        omega_r: PolynomialCurve,
        phi: PolynomialCurve | None = None,
        include_h0: bool = True,
        include_h1: bool = False,
    ) -> "TLSControlCoefficients":
        phi = phi if phi is not None else PolynomialCurve.constant(0.0)
        d, dd = _coeff_arrays(delta, 1)
        o, od = _coeff_arrays(omega_r, 1)
        p, pd = _coeff_arrays(phi, 1)
        return cls(d, dd, o, od, p, pd, include_h0=include_h0, include_h1=include_h1)

    def coefficients(self, t: float) -> np.ndarray:
        d = _polyval(self.delta, t)
        o = _polyval(self.omega_r, t)
        p = _polyval(self.phi, t)
        c_z = c_x = c_y = 0.0
        if self.include_h0:
            c_z += d
            c_x += o * np.cos(p)
            c_y += -o * np.sin(p)
        if self.include_h1:
            dd = _polyval(self.delta_d, t)
            od = _polyval(self.omega_r_d, t)
            pd = _polyval(self.phi_d, t)
            omega_sq = d * d + o * o
            if omega_sq <= 0.0:
                raise ValueError("degenerate point: mixing angle undefined")
            theta_dot = (d * od - dd * o) / omega_sq
            omega = np.sqrt(omega_sq)
            sin_t, cos_t = o / omega, d / omega
            sin_2t = 2 * sin_t * cos_t
            c_z += -pd * sin_t * sin_t
            re12 = 0.5 * pd * sin_2t * np.cos(p) + theta_dot * np.sin(p)
            im12 = 0.5 * pd * sin_2t * np.sin(p) - theta_dot * np.cos(p)
            c_x += re12
            c_y += -im12
        return np.array([c_z, c_x, c_y])


@dataclass
class TLSMixingCoefficients:
    """Channels from a mixing-angle schedule (theta, Omega, phi).

    H0 is the reference with Delta = Omega cos(theta), Omega_R =
    Omega sin(theta); H1 is the exact-tracking correction.
    """

    theta: np.ndarray
    theta_d: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    phi_d: np.ndarray
    include_h0: bool = True
    include_h1: bool = True

    n_channels = 3

    @classmethod
    def from_curves(
        cls,
        theta: PolynomialCurve,
        omega: PolynomialCurve,
        phi: PolynomialCurve | None = None,
        include_h0: bool = True,
        include_h1: bool = True,
    ) -> "TLSMixingCoefficients":
        phi = phi if phi is not None else PolynomialCurve.constant(0.0)
        th, thd = _coeff_arrays(theta, 1)
        om = _coeff_arrays(omega, 0)[0]
        ph, phd = _coeff_arrays(phi, 1)
        return cls(th, thd, om, ph, phd, include_h0=include_h0, include_h1=include_h1)

    def coefficients(self, t: float) -> np.ndarray:
        th = _polyval(self.theta, t)
        om = _polyval(self.omega, t)
        p = _polyval(self.phi, t)
        c_z = c_x = c_y = 0.0
        if self.include_h0:
            c_z += om * np.cos(th)
            o_r = om * np.sin(th)
            c_x += o_r * np.cos(p)
            c_y += -o_r * np.sin(p)
        if self.include_h1:
            thd = _polyval(self.theta_d, t)
            pd = _polyval(self.phi_d, t)
            sin_t = np.sin(th)
            sin_2t = np.sin(2 * th)
            c_z += -pd * sin_t * sin_t
            re12 = 0.5 * pd * sin_2t * np.cos(p) + thd * np.sin(p)
            im12 = 0.5 * pd * sin_2t * np.sin(p) - thd * np.cos(p)
            c_x += re12
            c_y += -im12
        return np.array([c_z, c_x, c_y])


@dataclass
class HOErmakovCoefficients:
    """Channels (c_pp, c_qq, c_pq) of the engineered-frequency oscillator."""

    b: np.ndarray
    b_dd: np.ndarray
    omega0: float

    n_channels = 3

    @classmethod
    def from_design(cls, design: ErmakovDesign) -> "HOErmakovCoefficients":
        b, _, bdd = _coeff_arrays(design.b, 2)
        return cls(b=b, b_dd=bdd, omega0=design.omega0)

    def coefficients(self, t: float) -> np.ndarray:
        b = _polyval(self.b, t)
        if b <= 0.0:
            raise ValueError("scaling factor non-positive")
        bdd = _polyval(self.b_dd, t)
        omega_sq = self.omega0**2 / b**4 - bdd / b
        return np.array([0.5 / MASS, 0.5 * MASS * omega_sq, 0.0])


@dataclass
class HOBerryCoefficients:
    """Channels of the tracking-route oscillator: reference plus cross term."""

    omega: np.ndarray
    omega_d: np.ndarray
    include_h1: bool = True

    n_channels = 3

    @classmethod
    def from_ramp(cls, ramp: OmegaRamp, include_h1: bool = True) -> "HOBerryCoefficients":
        om, omd = _coeff_arrays(ramp.omega, 1)
        return cls(omega=om, omega_d=omd, include_h1=include_h1)

    def coefficients(self, t: float) -> np.ndarray:
        w = _polyval(self.omega, t)
        if w <= 0.0:
            raise ValueError("reference frequency non-positive")
        c_pq = -_polyval(self.omega_d, t) / (4 * w) if self.include_h1 else 0.0
        return np.array([0.5 / MASS, 0.5 * MASS * w * w, c_pq])


@dataclass
class CallbackCoefficients:
    """Arbitrary Python callable t -> coefficient vector (generic fallback)."""

    fn: Callable[[float], np.ndarray]
    n_channels: int

    def coefficients(self, t: float) -> np.ndarray:
        out = np.asarray(self.fn(t), dtype=float)
        if out.shape != (self.n_channels,):
            raise ValueError("coefficient callback returned the wrong shape")
        return out


@dataclass
class HamiltonianSchedule:
    """H(t) = sum_k c_k(t) B_k with constant Hermitian basis matrices B_k."""

    basis: np.ndarray
    provider: object
    smooth: bool = True

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError("basis must be a stack of square matrices")
        if basis.shape[0] != self.provider.n_channels:
            raise ValueError("one basis matrix per coefficient channel required")
        for mat in basis:
            if np.linalg.norm(mat - mat.conj().T) > 1e-14 * max(np.linalg.norm(mat), 1e-300):
                raise ValueError("basis matrices must be Hermitian")
        self.basis = basis
        self._flat = basis.reshape(basis.shape[0], -1)
        u = 0
        for mat in basis:
            nz = np.argwhere(np.abs(mat) > 0)
            if nz.size:
                u = max(u, int(np.max(np.abs(nz[:, 0] - nz[:, 1]))))
        self.bandwidth = u
        n = basis.shape[1]
        band = np.zeros((basis.shape[0], u + 1, n), dtype=complex)
        for k, mat in enumerate(basis):
            for d in range(u + 1):
                band[k, d, : n - d] = np.diagonal(mat, offset=d)
        self.band = band

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def evaluate(self, t: float) -> np.ndarray:
        """Dense Hamiltonian matrix at time t."""
        c = self.provider.coefficients(t)
        n = self.dim
        return (c @ self._flat).reshape(n, n)


def tls_basis() -> np.ndarray:
    """(hbar/2) (sigma_z, sigma_x, sigma_y); channels are then
    (Delta, Omega_R cos(phi), -Omega_R sin(phi))."""
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    return 0.5 * HBAR * np.stack([sz, sx, sy])


def ho_basis(n_dim: int, omega_ref: float) -> np.ndarray:
    """(p^2, q^2, pq + qp) Fock matrices; channels are (c_pp, c_qq, c_pq)."""
    mats = [
        build_operator(QuadraticForm(1.0, 0.0, 0.0), n_dim, omega_ref).matrix,
        build_operator(QuadraticForm(0.0, 1.0, 0.0), n_dim, omega_ref).matrix,
        build_operator(QuadraticForm(0.0, 0.0, 1.0), n_dim, omega_ref).matrix,
    ]
    return np.stack(mats)


def tls_invariant_schedule(design: AngleDesign) -> HamiltonianSchedule:
    """Driving Hamiltonian of the angle design (exact transfer protocol)."""
    return HamiltonianSchedule(basis=tls_basis(), provider=TLSAngleCoefficients(design))


def tls_control_schedule(
    delta: PolynomialCurve,
    omega_r: PolynomialCurve,
    phi: PolynomialCurve | None = None,
    counterdiabatic: bool = False,
    include_h0: bool = True,
) -> HamiltonianSchedule:
    """Hamiltonian from polynomial controls, optionally with the tracking term."""
    provider = TLSControlCoefficients.from_curves(
        delta, omega_r, phi, include_h0=include_h0, include_h1=counterdiabatic
    )
    return HamiltonianSchedule(basis=tls_basis(), provider=provider)


def tls_mixing_schedule(
    theta: PolynomialCurve,
    omega: PolynomialCurve,
    phi: PolynomialCurve | None = None,
    include_h0: bool = True,
    include_h1: bool = True,
) -> HamiltonianSchedule:
    """Reference Hamiltonian of a mixing-angle ramp, plus exact-tracking term."""
    provider = TLSMixingCoefficients.from_curves(
        theta, omega, phi, include_h0=include_h0, include_h1=include_h1
    )
    return HamiltonianSchedule(basis=tls_basis(), provider=provider)


def ho_invariant_schedule(design: ErmakovDesign, n_dim: int) -> HamiltonianSchedule:
    """Engineered-frequency oscillator in the omega0 number basis."""
    return HamiltonianSchedule(
        basis=ho_basis(n_dim, design.omega0),
        provider=HOErmakovCoefficients.from_design(design),
    )


def ho_berry_schedule(ramp: OmegaRamp, n_dim: int, counterdiabatic: bool = True) -> HamiltonianSchedule:
    """Tracking-route oscillator: reference ramp with/without the cross term."""
    return HamiltonianSchedule(
        basis=ho_basis(n_dim, ramp.omega0),
        provider=HOBerryCoefficients.from_ramp(ramp, include_h1=counterdiabatic),
    )


def tls_invariant_evaluator(design: AngleDesign) -> Callable[[float], np.ndarray]:
    """t -> dense invariant matrix, for residual and expectation diagnostics."""
    return lambda t: tls_design.invariant_matrix(design, t).matrix


def tls_mixing_invariant_evaluator(
    theta: PolynomialCurve,
    phi: PolynomialCurve | None = None,
    omega0: float = 1.0,
) -> Callable[[float], np.ndarray]:
    """Invariant of the tracking Hamiltonian for a mixing-angle ramp."""
    phi = phi if phi is not None else PolynomialCurve.constant(0.0)

    def evaluate(t: float) -> np.ndarray:
        th = theta(t)
        p = phi(t)
        off = np.sin(th) * np.exp(1j * p)
        return 0.5 * HBAR * omega0 * np.array([[np.cos(th), off], [np.conj(off), -np.cos(th)]])

    return evaluate


def ho_invariant_evaluator(design: ErmakovDesign, n_dim: int) -> Callable[[float], np.ndarray]:
    """t -> dense invariant Fock matrix for the scaling-factor design."""
    from ..ho_design import invariant_form

    basis = ho_basis(n_dim, design.omega0)
    flat = basis.reshape(3, -1)

    def evaluate(t: float) -> np.ndarray:
        c = np.array(invariant_form(design, t).as_tuple())
        return (c @ flat).reshape(n_dim, n_dim)

    return evaluate


def ho_berry_invariant_evaluator(ramp: OmegaRamp, n_dim: int) -> Callable[[float], np.ndarray]:
    """t -> dense invariant Fock matrix for the tracking route."""
    from ..ho_design import berry_ho_invariant

    basis = ho_basis(n_dim, ramp.omega0)
    flat = basis.reshape(3, -1)

    def evaluate(t: float) -> np.ndarray:
        c = np.array(berry_ho_invariant(ramp, t).as_tuple())
        return (c @ flat).reshape(n_dim, n_dim)

    return evaluate
