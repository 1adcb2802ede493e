"""Truncated Fock-basis representations and analytic oscillator wavefunctions.

Quadratic operators become Hermitian band matrices (diagonals 0 and +-2) via
the ladder expansion of q and p around a fixed reference frequency; the
reference is chosen as the initial trap frequency so that t = 0 states are
bare number states.  Also provides the analytic instantaneous eigenstates,
the scaled-and-chirped transported modes, and quadrature projection of
position-sampled wavefunctions onto the Fock basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import quadrature_weights
from .ho_design import ErmakovDesign, QuadraticForm
from .units import HBAR, MASS

__all__ = [
    "FockOperator",
    "StateVector",
    "PositionGrid",
    "build_operator",
    "eigenpairs",
    "hermite_wavefunction",
    "hermite_basis",
    "invariant_mode_wavefunction",
    "project_to_fock",
]

HERMITICITY_TOL = 1e-14


@dataclass(frozen=True)
class FockOperator:
    """Hermitian operator in a truncated number basis."""

    matrix: np.ndarray
    omega_ref: float

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("operator matrix must be square")
        scale = np.linalg.norm(matrix)
        if scale > 0 and np.linalg.norm(matrix - matrix.conj().T) > HERMITICITY_TOL * scale:
            raise ValueError("operator matrix is not Hermitian")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def bandwidth(self) -> int:
        """Largest |i - j| with a nonzero entry."""
        nonzero = np.argwhere(np.abs(self.matrix) > 0)
        if nonzero.size == 0:
            return 0
        return int(np.max(np.abs(nonzero[:, 0] - nonzero[:, 1])))

    def expectation(self, state: "StateVector | np.ndarray") -> float:
        amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
        return float(np.real(np.vdot(amps, self.matrix @ amps)))


@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector; unit norm enforced at construction."""

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1:
            raise ValueError("state amplitudes must be a vector")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise ValueError("state vector is not normalized")

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector | np.ndarray") -> complex:
        amps = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return complex(np.vdot(self.amplitudes, amps))

    @classmethod
    def basis_state(cls, dimension: int, index: int) -> "StateVector":
        amps = np.zeros(dimension, dtype=complex)
        amps[index] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class PositionGrid:
    """Uniform symmetric position grid with composite quadrature weights."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        if abs(self.x_max + self.x_min) > 1e-12 * abs(self.x_max):
            raise ValueError("grid must be symmetric about 0")
        if self.n_points < 8:
            raise ValueError("grid too coarse")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        return quadrature_weights(self.nodes)

    @classmethod
    def default_for(cls, omega0: float, half_width: float = 12.0, n_points: int = 1024) -> "PositionGrid":
        """Span +-half_width oscillator lengths of the reference frequency."""
        span = half_width * np.sqrt(HBAR / (MASS * omega0))
        return cls(x_min=-span, x_max=span, n_points=n_points)


def build_operator(form: QuadraticForm, n_dim: int, omega_ref: float) -> FockOperator:
    """Represent c_pp p^2 + c_qq q^2 + c_pq (pq + qp) in the number basis.

    Uses q = sqrt(hbar/2 m w)(a + a+), p = i sqrt(hbar m w / 2)(a+ - a), so
    pq + qp = i hbar (a+^2 - a^2) and everything lands on diagonals 0, +-2.
    """
    if n_dim < 4:
        raise ValueError("need at least four basis states")
    if omega_ref <= 0:
        raise ValueError("reference frequency must be positive")
    n = np.arange(n_dim)
    q2_scale = HBAR / (2 * MASS * omega_ref)
    p2_scale = HBAR * MASS * omega_ref / 2
    diag = (2 * n + 1).astype(float) * (form.c_pp * p2_scale + form.c_qq * q2_scale)
    # <n+2| a+^2 |n> = sqrt((n+1)(n+2)); a^2 is its conjugate block
    raise_amp = np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    upper2 = raise_amp * (form.c_qq * q2_scale - form.c_pp * p2_scale) - 1j * HBAR * form.c_pq * raise_amp
    matrix = np.zeros((n_dim, n_dim), dtype=complex)
    matrix[n, n] = diag
    matrix[n[:-2], n[:-2] + 2] = upper2
    matrix[n[:-2] + 2, n[:-2]] = np.conj(upper2)
    return FockOperator(matrix=matrix, omega_ref=omega_ref)


def eigenpairs(op: FockOperator, k: int) -> list[tuple[float, StateVector]]:
    """k lowest eigenvalues with orthonormal, phase-fixed eigenvectors.

    The phase convention makes the largest-magnitude component real positive.
    """
    if not 1 <= k <= op.dimension:
        raise ValueError("k must be between 1 and the operator dimension")
    values, vectors = np.linalg.eigh(op.matrix)
    out = []
    for i in range(k):
        vec = vectors[:, i]
        pivot = np.argmax(np.abs(vec))
        phase = vec[pivot] / abs(vec[pivot])
        out.append((float(values[i]), StateVector(vec * np.conj(phase))))
    return out


def hermite_basis(n_levels: int, omega: float, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions 0..n_levels-1 at positions x, shape (n_levels, len(x)).

    Uses the normalized three-term recurrence, which keeps every intermediate
    bounded (no overflow for any level, unlike raw Hermite polynomials).
    """
    if n_levels < 1:
        raise ValueError("need at least one level")
    if omega <= 0:
        raise ValueError("frequency must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.sqrt(MASS * omega / HBAR) * x
    out = np.zeros((n_levels, xi.size))
    scale = (MASS * omega / (np.pi * HBAR)) ** 0.25
    out[0] = scale * np.exp(-0.5 * xi**2)
    if n_levels > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, n_levels - 1):
        out[n + 1] = (np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1])
    return out


def hermite_wavefunction(n: int, omega: float, x):
    """Instantaneous oscillator eigenfunction value(s) at x (physicists' convention)."""
    if n < 0:
        raise ValueError("level index must be non-negative")
    values = hermite_basis(n + 1, omega, x)[n]
    return values if np.ndim(x) else float(values[0])


def invariant_mode_wavefunction(design: ErmakovDesign, n: int, t: float, x):
    """Transported mode n at time t: scaled, chirped oscillator eigenfunction.

    Equals the omega0 eigenfunction stretched by b(t) with the quadratic
    phase (m b'/2 hbar b) x^2; normalization carries the explicit
    (m w0 / pi hbar)^(1/4) / sqrt(b) prefactor so the mode is exactly unit
    norm at every time.
    """
    b = design.b(t)
    bd = design.b(t, order=1)
    if b <= 0:
        raise ValueError("scaling factor non-positive")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    envelope = hermite_basis(n + 1, design.omega0, x_arr / b)[n] / np.sqrt(b)
    chirp = np.exp(1j * MASS * bd * x_arr**2 / (2 * HBAR * b))
    values = envelope * chirp
    return values if np.ndim(x) else complex(values[0])


def project_to_fock(
    samples: np.ndarray,
    grid: PositionGrid,
    n_dim: int,
    omega_ref: float,
    edge_tol: float = 1e-12,
    max_discarded: float = 1e-6,
) -> tuple[StateVector, float]:
    """Expand a position-sampled wavefunction in the first n_dim number states.

    Returns the renormalized coefficient vector and the discarded norm
    (squared weight outside the truncation).  The grid must be wide enough
    that the samples decay below edge_tol (relative to the peak) at its ends.
    """
    if n_dim < 4:
        raise ValueError("need at least four basis states")
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (grid.n_points,):
        raise ValueError("need one sample per grid node")
    peak = np.max(np.abs(samples))
    if peak == 0:
        raise ValueError("degenerate input: all samples vanish")
    if max(abs(samples[0]), abs(samples[-1])) > edge_tol * peak:
        raise ValueError("grid too narrow: samples do not decay at the edges")
    weights = grid.weights
    basis = hermite_basis(n_dim, omega_ref, grid.nodes)
    coefficients = basis @ (weights * samples)
    total = float(np.real(np.sum(weights * np.abs(samples) ** 2)))
    kept = float(np.sum(np.abs(coefficients) ** 2))
    discarded = total - kept
    if discarded > max_discarded * total:
        raise ValueError("truncation insufficient: discarded norm too large")
    return StateVector(coefficients / np.sqrt(kept)), discarded
