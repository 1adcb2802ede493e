"""Pure-Python integration kernel (fallback when the compiled core is absent).

Implements the same contract as the compiled kernel: a Dormand-Prince 5(4)
pair with PI step control and 4th-order dense output interpolated to the
requested nodes, plus a classic fixed-step RK4 used as an independent oracle.
The right-hand side is dpsi/dt = -i/hbar H(t) psi with H from the schedule's
coefficient provider and basis stack.
"""

from __future__ import annotations

import numpy as np

from ..units import HBAR

KERNEL_NAME = "pure"

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order minus embedded 4th-order weights (error estimator).
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Shampine dense-output coefficients: y(t0 + x h) = y0 + h K^T P (x, x^2, x^3, x^4).
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents (error^expo1 with a small memory term).
_PI_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _PI_BETA

STATUS_OK = 0
STATUS_UNDERFLOW = 1


class Plan:
    """Evaluation plan: provider plus flattened basis for fast combination."""

    def __init__(self, provider, basis: np.ndarray):
        self.provider = provider
        self.basis = basis
        self.flat = basis.reshape(basis.shape[0], -1)
        self.dim = basis.shape[1]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        c = self.provider.coefficients(t)
        h_matrix = (c @ self.flat).reshape(self.dim, self.dim)
        return (-1j / HBAR) * (h_matrix @ y)


def build_plan(schedule) -> Plan:
    return Plan(schedule.provider, schedule.basis)


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def integrate_adaptive(
    plan: Plan,
    node_times: np.ndarray,
    y0: np.ndarray,
    rtol: float,
    atol: float,
    first_step: float,
):
    """Integrate from node_times[0] to node_times[-1], filling states at nodes.

    Returns (states, n_accepted, n_rejected, min_step, max_step, status).
    """
    t_start = float(node_times[0])
    t_end = float(node_times[-1])
    n_nodes = node_times.size
    states = np.empty((n_nodes, y0.size), dtype=complex)

    t = t_start
    y = y0.astype(complex, copy=True)
    idx = 0
    while idx < n_nodes and node_times[idx] <= t_start:
        states[idx] = y
        idx += 1

    h = min(first_step, t_end - t_start)
    f_first = plan.rhs(t, y)
    k = np.empty((7, y0.size), dtype=complex)
    fac_old = 1e-4
    n_accepted = n_rejected = 0
    min_step = np.inf
    max_step = 0.0
    underflow = t_end * 1e-14

    while t < t_end:
        final = h >= t_end - t
        if final:
            h = t_end - t
        if h < underflow:
            return states, n_accepted, n_rejected, min_step, max_step, STATUS_UNDERFLOW

        k[0] = f_first
        for s in range(1, 7):
            y_stage = y + h * (_A[s] @ k[:s])
            k[s] = plan.rhs(t + _C[s] * h, y_stage)
        y_new = y + h * (_B[:6] @ k[:6])
        # FSAL: stage 7 was evaluated at (t + h, y_new)
        err_vec = h * (_E @ k)
        err = _error_norm(err_vec, y, y_new, rtol, atol)

        fac11 = err**_EXPO1 if err > 0 else 1e-10
        if err <= 1.0:
            # land exactly on t_end when the step was clamped to it
            t_new = t_end if final else t + h
            while idx < n_nodes and node_times[idx] <= t_new + 1e-15 * t_end:
                t_node = node_times[idx]
                if abs(t_node - t_new) <= 1e-15 * max(abs(t_new), 1.0):
                    states[idx] = y_new
                else:
                    x = (t_node - t) / h
                    powers = np.array([x, x**2, x**3, x**4])
                    states[idx] = y + h * ((_P @ powers) @ k)
                idx += 1
            factor = fac11 / fac_old**_PI_BETA
            h_next = h / min(1.0 / MIN_FACTOR, max(1.0 / MAX_FACTOR, factor / SAFETY))
            fac_old = max(err, 1e-4)
            n_accepted += 1
            min_step = min(min_step, h)
            max_step = max(max_step, h)
            t = t_new
            y = y_new
            f_first = k[6]
            h = h_next
        else:
            n_rejected += 1
            h = h / min(1.0 / MIN_FACTOR, fac11 / SAFETY)

    return states, n_accepted, n_rejected, min_step, max_step, STATUS_OK


def integrate_rk4(plan: Plan, t0: float, t1: float, n_steps: int, y0: np.ndarray) -> np.ndarray:
    """Classic fixed-step RK4 from t0 to t1; returns the final state."""
    h = (t1 - t0) / n_steps
    y = y0.astype(complex, copy=True)
    for i in range(n_steps):
        t = t0 + i * h
        k1 = plan.rhs(t, y)
        k2 = plan.rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = plan.rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = plan.rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
