"""Adaptive propagation of i hbar dpsi/dt = H(t) psi and its diagnostics.

The integrator is an embedded 5(4) Runge-Kutta pair with PI step control and
dense output at the requested grid nodes; the state norm is never touched, so
norm drift stays an honest error diagnostic.  Verification helpers cover the
quantities the toolkit certifies: populations against the adiabatic
reference, transported-mode overlaps and phases, invariance residuals, and
mode decompositions with their constancy property.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import tls_design
from ..curves import SampledScalar, TimeGrid, cumulative_integral
from ..fock import StateVector, eigenpairs
from ..units import HBAR
from . import kernels
from .schedules import HamiltonianSchedule

__all__ = [
    "PropagationRecord",
    "propagate",
    "rk4_reference",
    "populations",
    "two_level_populations",
    "adiabatic_reference",
    "mode_transport_check",
    "decompose_into_modes",
    "invariance_residual",
    "expectation_series",
    "fidelity",
    "TLSInvariantModes",
    "TLSMixingModes",
    "HOInvariantModes",
    "HOReferenceModes",
]

REL_TOL_RANGE = (1e-13, 1e-6)
NORM_DRIFT_LIMIT = 1e-6
HERMITICITY_SPOT_TOL = 1e-12
N_HERMITICITY_CHECKS = 16


@dataclass(frozen=True)
class PropagationRecord:
    """States at the grid nodes plus integrator statistics."""

    grid: TimeGrid
    states: np.ndarray
    norm_drift: float
    n_accepted: int
    n_rejected: int
    min_step: float
    max_step: float

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state(self, node: int) -> StateVector:
        return StateVector(self.states[node], normalized=False)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _as_matrix_fn(schedule) -> Callable[[float], np.ndarray]:
    if isinstance(schedule, HamiltonianSchedule):
        return schedule.evaluate
    if callable(schedule):
        return schedule
    raise TypeError("expected a HamiltonianSchedule or a callable t -> matrix")


def _spot_check_hermiticity(schedule: HamiltonianSchedule, t_end: float) -> None:
    rng = np.random.default_rng(1729)
    for t in rng.uniform(0.0, t_end, N_HERMITICITY_CHECKS):
        h = schedule.evaluate(float(t))
        scale = max(np.linalg.norm(h), 1e-300)
        if np.linalg.norm(h - h.conj().T) > HERMITICITY_SPOT_TOL * scale:
            raise ValueError(f"schedule is not Hermitian at t = {t:.6g}")


def _initial_step(schedule: HamiltonianSchedule, y0: np.ndarray, t_end: float, rtol: float, atol: float) -> float:
    """Cheap two-evaluation starter step, clipped to the integration span."""

    def rhs(t, y):
        return (-1j / HBAR) * (schedule.evaluate(t) @ y)

    scale = atol + rtol * np.abs(y0)
    f0 = rhs(0.0, y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 * t_end if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end)
    y1 = y0 + h0 * f0
    f1 = rhs(h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * t_end, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end)


def propagate(
    schedule: HamiltonianSchedule,
    psi0: StateVector | np.ndarray,
    grid: TimeGrid,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    kernel: str = "auto",
) -> PropagationRecord:
    """Propagate psi0 across the grid, reporting states at every node.

    The norm is reported, never repaired: drift beyond 1e-6 raises an
    accuracy failure, step-size collapse raises a stiffness failure.
    """
    if not REL_TOL_RANGE[0] <= rel_tol <= REL_TOL_RANGE[1]:
        raise ValueError(f"rel_tol must lie in [{REL_TOL_RANGE[0]}, {REL_TOL_RANGE[1]}]")
    y0 = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(y0) - 1.0) > 1e-12:
        raise ValueError("initial state is not normalized")
    if y0.size != schedule.dim:
        raise ValueError("state dimension does not match the schedule")

    _spot_check_hermiticity(schedule, grid.t_f)
    mod = kernels.get(kernel)
    plan = mod.build_plan(schedule)
    first_step = _initial_step(schedule, y0, grid.t_f, rel_tol, abs_tol)
    states, n_acc, n_rej, h_min, h_max, status = mod.integrate_adaptive(
        plan, grid.nodes, y0, rel_tol, abs_tol, first_step
    )
    if status != 0:
        raise RuntimeError("stiffness failure: step size underflow")
    norms = np.linalg.norm(states, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_DRIFT_LIMIT:
        raise RuntimeError(f"accuracy failure: norm drift {drift:.3e}")
    return PropagationRecord(
        grid=grid,
        states=states,
        norm_drift=drift,
        n_accepted=n_acc,
        n_rejected=n_rej,
        min_step=h_min,
        max_step=h_max,
    )


def rk4_reference(
    schedule: HamiltonianSchedule,
    psi0: StateVector | np.ndarray,
    t_end: float,
    n_steps: int,
    kernel: str = "auto",
) -> np.ndarray:
    """Fixed-step RK4 oracle from t = 0 to t_end; returns the final state."""
    y0 = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    mod = kernels.get(kernel)
    return mod.integrate_rk4(mod.build_plan(schedule), 0.0, t_end, n_steps, y0)


def populations(record: PropagationRecord, levels: Sequence[int] | None = None) -> np.ndarray:
    """Squared moduli per node, optionally restricted to selected basis indices."""
    probs = np.abs(record.states) ** 2
    return probs if levels is None else probs[:, list(levels)]


def two_level_populations(record: PropagationRecord) -> tuple[np.ndarray, np.ndarray]:
    """(P1, P2) per node in the |2> = (1,0), |1> = (0,1) basis convention."""
    if record.dim != 2:
        raise ValueError("record is not two-dimensional")
    probs = np.abs(record.states) ** 2
    return probs[:, 1], probs[:, 0]


def adiabatic_reference(controls: tls_design.TLSControls, branch: str = "+") -> np.ndarray:
    """Adiabatic (P1, P2) per node for the chosen instantaneous branch."""
    d = controls.delta.values
    o = controls.omega_r.values
    omega = np.hypot(d, o)
    if np.any(omega == 0):
        raise ValueError("degenerate point: mixing angle undefined")
    theta = np.arccos(np.clip(d / omega, -1.0, 1.0))
    p1 = np.sin(theta / 2) ** 2
    p2 = np.cos(theta / 2) ** 2
    if branch == "+":
        return np.column_stack([p1, p2])
    if branch == "-":
        return np.column_stack([p2, p1])
    raise ValueError("branch must be '+' or '-'")


class TLSInvariantModes:
    """Analytic invariant eigenvectors and transport phases of an angle design."""

    def __init__(self, design: tls_design.AngleDesign, controls: tls_design.TLSControls):
        self.design = design
        self.grid = controls.grid
        self._alpha_plus = tls_design.lr_phases_on_grid(design, controls)
        self.n_modes = 2

    def vectors(self, node: int) -> np.ndarray:
        t = self.grid.nodes[node]
        plus, minus = tls_design.invariant_eigenvectors(self.design, t)
        return np.stack([plus, minus])

    def phases(self, node: int) -> np.ndarray:
        a = self._alpha_plus[node]
        return np.array([a, -a])


class TLSMixingModes:
    """Instantaneous eigenvectors of a mixing-angle reference and their phases.

    Phases are the adiabatic ones; for the real eigenvector family used here
    (phi = 0) the geometric part vanishes and xi_pm = -+ (1/2) integral Omega.
    """

    def __init__(self, theta, omega, grid: TimeGrid, phi=None):
        from ..curves import PolynomialCurve

        self.theta = theta
        self.phi = phi if phi is not None else PolynomialCurve.constant(0.0)
        self.grid = grid
        half_action = 0.5 * cumulative_integral(SampledScalar.from_function(grid, omega))
        self._xi = np.column_stack([-half_action, half_action])
        self.n_modes = 2

    def vectors(self, node: int) -> np.ndarray:
        t = self.grid.nodes[node]
        half = self.theta(t) / 2
        p = self.phi(t)
        plus = np.array([np.cos(half) * np.exp(1j * p), np.sin(half)], dtype=complex)
        minus = np.array([np.sin(half), -np.cos(half) * np.exp(-1j * p)], dtype=complex)
        return np.stack([plus, minus])

    def phases(self, node: int) -> np.ndarray:
        return self._xi[node]


class HOInvariantModes:
    """Numeric invariant eigenvectors on a grid, gauge-fixed for continuity.

    Eigenvectors start from the largest-component-real-positive convention at
    the first node and are then phase-aligned with the previous node; phases
    are the oscillator transport phases -(n + 1/2) w0 integral 1/b^2.
    """

    def __init__(self, design, grid: TimeGrid, n_dim: int, n_modes: int):
        from ..ho_design import lr_phases_on_grid
        from .schedules import ho_invariant_evaluator

        self.n_modes = n_modes
        evaluate = ho_invariant_evaluator(design, n_dim)
        vectors = np.empty((grid.n_samples, n_modes, n_dim), dtype=complex)
        from ..fock import FockOperator

        previous = None
        for j, t in enumerate(grid.nodes):
            op = FockOperator(evaluate(float(t)), design.omega0)
            pairs = eigenpairs(op, n_modes)
            for m, (_, vec) in enumerate(pairs):
                v = vec.amplitudes
                if previous is not None:
                    overlap = np.vdot(previous[m], v)
                    if abs(overlap) > 0:
                        v = v * (np.conj(overlap) / abs(overlap))
                vectors[j, m] = v
            previous = vectors[j]
        self.grid = grid
        self._vectors = vectors
        self._phases = np.column_stack(
            [lr_phases_on_grid(design, m, grid) for m in range(n_modes)]
        )

    def vectors(self, node: int) -> np.ndarray:
        return self._vectors[node]

    def phases(self, node: int) -> np.ndarray:
        return self._phases[node]


class HOReferenceModes:
    """Instantaneous eigenstates of the reference oscillator ramp.

    Used by the tracking route: mode n at time t is the n-th eigenstate of
    the omega(t) oscillator, with adiabatic phases -(n + 1/2) integral omega.
    """

    def __init__(self, ramp, grid: TimeGrid, n_dim: int, n_modes: int):
        from ..fock import build_operator
        from ..ho_design import QuadraticForm
        from ..units import MASS

        self.n_modes = n_modes
        vectors = np.empty((grid.n_samples, n_modes, n_dim), dtype=complex)
        previous = None
        for j, t in enumerate(grid.nodes):
            w = ramp.omega(float(t))
            op = build_operator(QuadraticForm(1 / (2 * MASS), MASS * w**2 / 2, 0.0), n_dim, ramp.omega0)
            for m, (_, vec) in enumerate(eigenpairs(op, n_modes)):
                v = vec.amplitudes
                if previous is not None:
                    overlap = np.vdot(previous[m], v)
                    if abs(overlap) > 0:
                        v = v * (np.conj(overlap) / abs(overlap))
                vectors[j, m] = v
            previous = vectors[j]
        action = cumulative_integral(SampledScalar.from_function(grid, ramp.omega))
        self.grid = grid
        self._vectors = vectors
        self._phases = -np.outer(action, np.arange(n_modes) + 0.5)

    def vectors(self, node: int) -> np.ndarray:
        return self._vectors[node]

    def phases(self, node: int) -> np.ndarray:
        return self._phases[node]


def mode_transport_check(record: PropagationRecord, modes, index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Overlap modulus and continuity-unwrapped phase of <mode_index(t)|psi(t)>."""
    n = record.grid.n_samples
    moduli = np.empty(n)
    raw_phase = np.empty(n)
    for j in range(n):
        overlap = np.vdot(modes.vectors(j)[index], record.states[j])
        moduli[j] = abs(overlap)
        raw_phase[j] = np.angle(overlap)
    return moduli, np.unwrap(raw_phase)


def decompose_into_modes(record: PropagationRecord, modes, node: int) -> np.ndarray:
    """Amplitudes c_n = <phi_n(t)|psi(t)> e^{-i alpha_n(t)} at one node.

    For exact dynamics the moduli |c_n| are node-independent and the phases
    are node-independent too (the mode phases absorb all time dependence).
    """
    vectors = modes.vectors(node)
    phases = modes.phases(node)
    overlaps = vectors.conj() @ record.states[node]
    return overlaps * np.exp(-1j * phases)


def invariance_residual(
    schedule_h,
    schedule_i,
    grid: TimeGrid,
    smooth: bool = True,
    truncation_margin: int = 0,
) -> float:
    """max over interior nodes of ||i hbar dI/dt - [H, I]||_F / (||H|| ||I||).

    The time derivative is a finite-difference stencil at the grid spacing:
    4th order when the schedules are declared smooth, 2nd order otherwise.

    For truncated band representations the last `truncation_margin` rows and
    columns of the commutator are corrupted by the basis cut (the matrix
    product there misses couplings to the discarded levels); pass the
    representation bandwidth to restrict the norms to the exact block.
    """
    h_fn = _as_matrix_fn(schedule_h)
    i_fn = _as_matrix_fn(schedule_i)
    ts = grid.nodes
    dt = grid.spacing
    i_mats = [np.asarray(i_fn(float(t))) for t in ts]
    keep = i_mats[0].shape[0] - truncation_margin
    if keep < 2:
        raise ValueError("truncation margin leaves no matrix block to compare")
    worst = 0.0
    lo, hi = (2, grid.n_samples - 2) if smooth else (1, grid.n_samples - 1)
    for j in range(lo, hi):
        if smooth:
            di = (-i_mats[j + 2] + 8 * i_mats[j + 1] - 8 * i_mats[j - 1] + i_mats[j - 2]) / (12 * dt)
        else:
            di = (i_mats[j + 1] - i_mats[j - 1]) / (2 * dt)
        h_mat = np.asarray(h_fn(float(ts[j])))
        commutator = h_mat @ i_mats[j] - i_mats[j] @ h_mat
        residual = np.linalg.norm((1j * HBAR * di - commutator)[:keep, :keep])
        scale = np.linalg.norm(h_mat[:keep, :keep]) * np.linalg.norm(i_mats[j][:keep, :keep])
        worst = max(worst, residual / max(scale, 1e-300))
    return worst


def expectation_series(record: PropagationRecord, operator) -> np.ndarray:
    """<psi(t)| Op(t) |psi(t)> at every node for a matrix-valued schedule."""
    op_fn = _as_matrix_fn(operator)
    out = np.empty(record.grid.n_samples)
    for j, t in enumerate(record.grid.nodes):
        psi = record.states[j]
        out[j] = np.real(np.vdot(psi, np.asarray(op_fn(float(t))) @ psi))
    return out


def fidelity(a: np.ndarray | StateVector, b: np.ndarray | StateVector) -> float:
    """|<a|b>|^2 for pure states."""
    av = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    bv = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    return float(abs(np.vdot(av, bv)) ** 2)
