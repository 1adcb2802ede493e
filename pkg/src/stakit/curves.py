"""Polynomial ansatz construction, exact-derivative evaluation, and quadrature.

This module carries the time-dependent scalar functions of the toolkit:
polynomial control ansaetze fitted from boundary data (values and derivatives
at prescribed times, i.e. Hermite-Birkhoff interpolation), and a composite
quadrature engine for scalar functions sampled on a time grid.  Everything
here is a pure function over immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "TimeGrid",
    "PolynomialCurve",
    "BoundaryConstraint",
    "SampledScalar",
    "fit_polynomial",
    "evaluate",
    "quadrature_weights",
    "integrate_sampled",
    "cumulative_integral",
    "sampled_derivative",
]

# Residual accepted when verifying a fitted polynomial against its constraints,
# relative to max(1, |constraint value|).
FIT_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes spanning [0, t_f]."""

    t_f: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if nodes[0] != 0.0 or abs(nodes[-1] - self.t_f) > 1e-12 * self.t_f:
            raise ValueError("grid must span [0, t_f]")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")

    @classmethod
    def uniform(cls, t_f: float, n_samples: int) -> "TimeGrid":
        if n_samples < 2:
            raise ValueError("need at least two samples")
        nodes = np.linspace(0.0, t_f, n_samples)
        nodes[-1] = t_f
        return cls(t_f=t_f, nodes=nodes)

    @property
    def n_samples(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        """Node spacing; raises on non-uniform grids (stencil consumers assume it)."""
        steps = np.diff(self.nodes)
        h = steps[0]
        if np.max(np.abs(steps - h)) > 1e-9 * h:
            raise ValueError("grid is not uniform")
        return float(h)


@dataclass(frozen=True)
class PolynomialCurve:
    """Real polynomial sum_j c_j t^j with exact term-by-term derivatives."""

    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def derivative(self, order: int = 1) -> "PolynomialCurve":
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order == 0:
            return self
        if order > self.degree:
            return PolynomialCurve(np.zeros(1))
        return PolynomialCurve(npoly.polyder(self.coefficients, order))

    def __call__(self, t, order: int = 0):
        """Evaluate the exact `order`-th derivative at t (scalar or array)."""
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order > self.degree:
            return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
        coeffs = self.coefficients if order == 0 else npoly.polyder(self.coefficients, order)
        out = npoly.polyval(np.asarray(t, dtype=float), coeffs)
        return out if np.ndim(t) else float(out)

    @classmethod
    def constant(cls, value: float) -> "PolynomialCurve":
        return cls(np.array([float(value)]))


def evaluate(curve: PolynomialCurve, t, order: int = 0):
    """Functional form of ``curve(t, order)``."""
    return curve(t, order)


@dataclass(frozen=True)
class BoundaryConstraint:
    """Prescribes the `derivative_order`-th derivative value at `time`."""

    time: float
    derivative_order: int
    value: float

    def __post_init__(self):
        if self.derivative_order < 0:
            raise ValueError("derivative order must be non-negative")


def fit_polynomial(constraints: Iterable[BoundaryConstraint], degree: int) -> PolynomialCurve:
    """Fit the unique degree-`degree` polynomial through Hermite-Birkhoff data.

    The number of constraints must equal degree + 1 and the induced linear
    system must be nonsingular.  Times are rescaled to s = t/T (T the largest
    constraint time) before solving so the monomial Vandermonde stays well
    conditioned for the small degrees used here.
    """
    constraints = list(constraints)
    if len(constraints) != degree + 1:
        raise ValueError(
            f"degree/constraint mismatch: degree {degree} needs {degree + 1} "
            f"constraints, got {len(constraints)}"
        )
    seen = {(c.time, c.derivative_order) for c in constraints}
    if len(seen) != len(constraints):
        raise ValueError("degenerate constraint set: duplicated (time, order) pair")

    scale = max(abs(c.time) for c in constraints)
    if scale == 0.0:
        scale = 1.0

    n = degree + 1
    system = np.zeros((n, n))
    rhs = np.zeros(n)
    for row, c in enumerate(constraints):
        s = c.time / scale
        k = c.derivative_order
        for j in range(k, n):
            # d^k/ds^k s^j = j!/(j-k)! s^(j-k)
            fac = 1.0
            for i in range(j, j - k, -1):
                fac *= i
            system[row, j] = fac * s ** (j - k)
        rhs[row] = c.value * scale**k

    try:
        solution = np.linalg.solve(system, rhs)
        # one step of iterative refinement; the factorization is cheap here
        solution += np.linalg.solve(system, rhs - system @ solution)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate constraint set") from exc

    # residuals checked in the rescaled basis, where evaluation is stable
    residuals = system @ solution - rhs
    for row, c in enumerate(constraints):
        tol = FIT_RESIDUAL_TOL * max(1.0, abs(c.value)) * scale ** c.derivative_order
        if abs(residuals[row]) > tol:
            raise ValueError("degenerate constraint set: residual check failed")
    return PolynomialCurve(solution / scale ** np.arange(n))


@dataclass(frozen=True)
class SampledScalar:
    """Real scalar function sampled on a TimeGrid, one value per node."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_samples,):
            raise ValueError("need exactly one value per grid node")

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledScalar":
        return cls(grid=grid, values=np.asarray(fn(grid.nodes), dtype=float))


def _interval_weights(nodes: np.ndarray) -> np.ndarray:
    """Per-interval quadrature weights, shape (n_intervals, nodes).

    Row i integrates a function over [nodes[i], nodes[i+1]] using the cubic
    through the four nearest nodes (fewer near short grids).  Exact for
    polynomials up to degree 3, hence composite order >= 4 on uniform grids.
    """
    m = nodes.size
    n_int = m - 1
    weights = np.zeros((n_int, m))
    stencil = min(4, m)
    for i in range(n_int):
        lo = min(max(i - 1, 0), m - stencil)
        pts = nodes[lo : lo + stencil]
        center = 0.5 * (nodes[i] + nodes[i + 1])
        shifted = pts - center
        vander = np.vander(shifted, stencil, increasing=True).T
        a, b = nodes[i] - center, nodes[i + 1] - center
        powers = np.arange(1, stencil + 1)
        moments = (b**powers - a**powers) / powers
        weights[i, lo : lo + stencil] = np.linalg.solve(vander, moments)
    return weights


def quadrature_weights(nodes: np.ndarray) -> np.ndarray:
    """Weights w with sum_i w_i f(nodes_i) ~ integral of f over the full span."""
    nodes = np.asarray(nodes, dtype=float)
    return _interval_weights(nodes).sum(axis=0)


def cumulative_integral(f: SampledScalar) -> np.ndarray:
    """Integral of f from nodes[0] to every node (prefix integrals).

    Built from per-interval pieces, so prefixes are exactly additive:
    result[k] + (result[m] - result[k]) == result[m] by construction.
    """
    pieces = _interval_weights(f.grid.nodes) @ f.values
    out = np.zeros(f.grid.n_samples)
    np.cumsum(pieces, out=out[1:])
    return out


def integrate_sampled(f: SampledScalar, up_to: int) -> float:
    """Composite quadrature of f from nodes[0] to nodes[up_to]."""
    if not 0 <= up_to < f.grid.n_samples:
        raise IndexError("node index outside grid")
    if up_to == 0:
        return 0.0
    pieces = _interval_weights(f.grid.nodes)[:up_to] @ f.values
    return float(pieces.sum())


def sampled_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """4th-order finite-difference derivative of uniformly sampled values.

    Central stencils inside, one-sided 4th-order stencils at the ends.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 5:
        raise ValueError("need at least five samples for the 4th-order stencil")
    out = np.empty(n)
    out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * dt)
    f0, f1, f2, f3, f4 = values[:5]
    out[0] = (-25 * f0 + 48 * f1 - 36 * f2 + 16 * f3 - 3 * f4) / (12 * dt)
    out[1] = (-3 * f0 - 10 * f1 + 18 * f2 - 6 * f3 + f4) / (12 * dt)
    g0, g1, g2, g3, g4 = values[-5:]
    out[-1] = (25 * g4 - 48 * g3 + 36 * g2 - 16 * g1 + 3 * g0) / (12 * dt)
    out[-2] = (3 * g4 + 10 * g3 - 18 * g2 + 6 * g1 - g0) / (12 * dt)
    return out
