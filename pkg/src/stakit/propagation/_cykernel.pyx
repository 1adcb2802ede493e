# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel.

Same contract as `_pykernel`: Dormand-Prince 5(4) with PI step control and
dense output, plus fixed-step RK4.  The Hamiltonian is combined from constant
Hermitian band matrices with scalar coefficient channels; the channel
evaluators for the toolkit's parametric schedules are reimplemented here in C
so the stepping loop never re-enters Python (a generic callback evaluator
covers everything else).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, fmax, fmin, pow, round as c_round, sin, sqrt

from . import schedules as _schedules

cnp.import_array()

KERNEL_NAME = "compiled"

STATUS_OK = 0
STATUS_UNDERFLOW = 1

cdef enum:
    MAX_CHANNELS = 8

cdef double PI = 3.141592653589793238462643383279502884
cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double PI_BETA = 0.04
cdef double EXPO1 = 0.2 - 0.75 * 0.04

cdef double ENDPOINT_GAMMA_TOL = 1e-6
cdef double ENDPOINT_RATE_TOL = 1e-6
cdef double TRIG_ZERO_TOL = 1e-12


cdef inline double polyval(double[::1] c, double t) noexcept:
    cdef double r = 0.0
    cdef Py_ssize_t j
    for j in range(c.shape[0] - 1, -1, -1):
        r = r * t + c[j]
    return r


cdef class CoeffEval:
    """C-level coefficient channel evaluator."""
    cdef int n_channels

    cdef int eval(self, double t, double* out) except -1:
        raise NotImplementedError


cdef class PolyEval(CoeffEval):
    cdef list polys

    def __init__(self, polys):
        self.polys = [np.ascontiguousarray(p, dtype=float) for p in polys]
        self.n_channels = len(polys)

    cdef int eval(self, double t, double* out) except -1:
        cdef Py_ssize_t k
        cdef double[::1] c
        for k in range(self.n_channels):
            c = self.polys[k]
            out[k] = polyval(c, t)
        return 0


cdef class TLSAngleEval(CoeffEval):
    cdef double[::1] g, gd, b, bd, p, pd

    def __init__(self, g, gd, b, bd, p, pd):
        self.g, self.gd = g, gd
        self.b, self.bd = b, bd
        self.p, self.pd = p, pd
        self.n_channels = 3

    cdef int eval(self, double t, double* out) except -1:
        cdef double g = polyval(self.g, t)
        cdef double gd = polyval(self.gd, t)
        cdef double b = polyval(self.b, t)
        cdef double bd = polyval(self.bd, t)
        cdef double p = polyval(self.p, t)
        cdef double pd = polyval(self.pd, t)
        cdef double rel = b - p
        cdef double sin_rel = sin(rel)
        cdef double cos_rel = cos(rel)
        cdef double gamma_res = g - PI * c_round(g / PI)
        cdef double omega_r, delta, coupling, sin_g

        if fabs(gamma_res) < ENDPOINT_GAMMA_TOL and fabs(gd) < ENDPOINT_RATE_TOL:
            if fabs(cos_rel) > 1e-9:
                raise ValueError(
                    "detuning divergent at gamma = n*pi endpoint: cos(beta - phi) != 0")
            omega_r = gd / sin_rel if fabs(sin_rel) > TRIG_ZERO_TOL else 0.0
            delta = -3.0 * bd + 2.0 * pd
        else:
            if fabs(sin_rel) <= TRIG_ZERO_TOL:
                raise ValueError("ansatz singularity: infinite Rabi frequency")
            omega_r = gd / sin_rel
            coupling = omega_r * cos_rel
            if fabs(cos_rel) <= TRIG_ZERO_TOL:
                delta = -bd
            else:
                sin_g = sin(g)
                if fabs(sin_g) <= TRIG_ZERO_TOL:
                    raise ValueError("detuning divergent: gamma = n*pi at interior node")
                delta = coupling * cos(g) / sin_g - bd
        out[0] = delta
        out[1] = omega_r * cos(p)
        out[2] = -omega_r * sin(p)
        return 0


cdef class TLSControlEval(CoeffEval):
    cdef double[::1] de, ded, om, omd, ph, phd
    cdef bint include_h0, include_h1

    def __init__(self, de, ded, om, omd, ph, phd, include_h0, include_h1):
        self.de, self.ded = de, ded
        self.om, self.omd = om, omd
        self.ph, self.phd = ph, phd
        self.include_h0 = include_h0
        self.include_h1 = include_h1
        self.n_channels = 3

    cdef int eval(self, double t, double* out) except -1:
        cdef double d = polyval(self.de, t)
        cdef double o = polyval(self.om, t)
        cdef double p = polyval(self.ph, t)
        cdef double c_z = 0.0, c_x = 0.0, c_y = 0.0
        cdef double dd, od, pd, omega_sq, omega, theta_dot, sin_t, cos_t, sin_2t, re12, im12
        if self.include_h0:
            c_z += d
            c_x += o * cos(p)
            c_y += -o * sin(p)
        if self.include_h1:
            dd = polyval(self.ded, t)
            od = polyval(self.omd, t)
            pd = polyval(self.phd, t)
            omega_sq = d * d + o * o
            if omega_sq <= 0.0:
                raise ValueError("degenerate point: mixing angle undefined")
            theta_dot = (d * od - dd * o) / omega_sq
            omega = sqrt(omega_sq)
            sin_t = o / omega
            cos_t = d / omega
            sin_2t = 2.0 * sin_t * cos_t
            c_z += -pd * sin_t * sin_t
            re12 = 0.5 * pd * sin_2t * cos(p) + theta_dot * sin(p)
            im12 = 0.5 * pd * sin_2t * sin(p) - theta_dot * cos(p)
            c_x += re12
            c_y += -im12
        out[0] = c_z
        out[1] = c_x
        out[2] = c_y
        return 0


cdef class TLSMixingEval(CoeffEval):
    cdef double[::1] th, thd, om, ph, phd
    cdef bint include_h0, include_h1

    def __init__(self, th, thd, om, ph, phd, include_h0, include_h1):
        self.th, self.thd = th, thd
        self.om = om
        self.ph, self.phd = ph, phd
        self.include_h0 = include_h0
        self.include_h1 = include_h1
        self.n_channels = 3

    cdef int eval(self, double t, double* out) except -1:
        cdef double th = polyval(self.th, t)
        cdef double om = polyval(self.om, t)
        cdef double p = polyval(self.ph, t)
        cdef double c_z = 0.0, c_x = 0.0, c_y = 0.0
        cdef double thd, pd, o_r, sin_t, sin_2t, re12, im12
        if self.include_h0:
            c_z += om * cos(th)
            o_r = om * sin(th)
            c_x += o_r * cos(p)
            c_y += -o_r * sin(p)
        if self.include_h1:
            thd = polyval(self.thd, t)
            pd = polyval(self.phd, t)
            sin_t = sin(th)
            sin_2t = sin(2.0 * th)
            c_z += -pd * sin_t * sin_t
            re12 = 0.5 * pd * sin_2t * cos(p) + thd * sin(p)
            im12 = 0.5 * pd * sin_2t * sin(p) - thd * cos(p)
            c_x += re12
            c_y += -im12
        out[0] = c_z
        out[1] = c_x
        out[2] = c_y
        return 0


cdef class HOErmakovEval(CoeffEval):
    cdef double[::1] b, bdd
    cdef double omega0_sq, half_inv_m, half_m

    def __init__(self, b, bdd, omega0, mass):
        self.b, self.bdd = b, bdd
        self.omega0_sq = omega0 * omega0
        self.half_inv_m = 0.5 / mass
        self.half_m = 0.5 * mass
        self.n_channels = 3

    cdef int eval(self, double t, double* out) except -1:
        cdef double b = polyval(self.b, t)
        if b <= 0.0:
            raise ValueError("scaling factor non-positive")
        cdef double bdd = polyval(self.bdd, t)
        cdef double omega_sq = self.omega0_sq / (b * b * b * b) - bdd / b
        out[0] = self.half_inv_m
        out[1] = self.half_m * omega_sq
        out[2] = 0.0
        return 0


cdef class HOBerryEval(CoeffEval):
    cdef double[::1] om, omd
    cdef bint include_h1
    cdef double half_inv_m, half_m

    def __init__(self, om, omd, include_h1, mass):
        self.om, self.omd = om, omd
        self.include_h1 = include_h1
        self.half_inv_m = 0.5 / mass
        self.half_m = 0.5 * mass
        self.n_channels = 3

    cdef int eval(self, double t, double* out) except -1:
        cdef double w = polyval(self.om, t)
        if w <= 0.0:
            raise ValueError("reference frequency non-positive")
        out[0] = self.half_inv_m
        out[1] = self.half_m * w * w
        out[2] = -polyval(self.omd, t) / (4.0 * w) if self.include_h1 else 0.0
        return 0


cdef class CallbackEval(CoeffEval):
    cdef object provider

    def __init__(self, provider):
        self.provider = provider
        self.n_channels = provider.n_channels

    cdef int eval(self, double t, double* out) except -1:
        cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.asarray(
            self.provider.coefficients(t), dtype=np.float64)
        cdef Py_ssize_t k
        for k in range(self.n_channels):
            out[k] = arr[k]
        return 0


cdef class Plan:
    """Band-combined Hamiltonian application plan."""
    cdef CoeffEval ce
    cdef double complex[:, :, ::1] band   # (K, u+1, n)
    cdef double complex[:, ::1] work      # (u+1, n) combined band
    cdef int n, u, k_channels

    def __init__(self, CoeffEval ce, band):
        self.ce = ce
        self.band = np.ascontiguousarray(band, dtype=complex)
        self.k_channels = self.band.shape[0]
        self.u = self.band.shape[1] - 1
        self.n = self.band.shape[2]
        self.work = np.zeros((self.u + 1, self.n), dtype=complex)
        if ce.n_channels != self.k_channels:
            raise ValueError("channel count mismatch")
        if ce.n_channels > MAX_CHANNELS:
            raise ValueError("too many coefficient channels")

    cdef int rhs(self, double t, double complex* y, double complex* out) except -1:
        """out = -i H(t) y via the Hermitian band representation (hbar = 1)."""
        cdef double coeffs[MAX_CHANNELS]
        self.ce.eval(t, coeffs)
        cdef Py_ssize_t k, d, j
        cdef int n = self.n, u = self.u
        cdef double c
        cdef double complex a, tmp
        for d in range(u + 1):
            for j in range(n):
                self.work[d, j] = 0.0
        for k in range(self.k_channels):
            c = coeffs[k]
            if c == 0.0:
                continue
            for d in range(u + 1):
                for j in range(n - d):
                    self.work[d, j] = self.work[d, j] + c * self.band[k, d, j]
        for j in range(n):
            out[j] = self.work[0, j] * y[j]
        for d in range(1, u + 1):
            for j in range(n - d):
                a = self.work[d, j]
                out[j] = out[j] + a * y[j + d]
                out[j + d] = out[j + d] + a.conjugate() * y[j]
        for j in range(n):
            tmp = out[j]
            out[j] = tmp.imag - 1j * tmp.real
        return 0


def probe_coefficients(Plan plan, double t):
    """Evaluate the compiled coefficient channels at t (test hook)."""
    cdef double out[MAX_CHANNELS]
    plan.ce.eval(t, out)
    return np.array([out[k] for k in range(plan.ce.n_channels)])


def build_plan(schedule):
    """Map a HamiltonianSchedule onto a compiled evaluation plan."""
    provider = schedule.provider
    cdef CoeffEval ce
    if isinstance(provider, _schedules.TLSAngleCoefficients):
        ce = TLSAngleEval(provider.gamma, provider.gamma_d, provider.beta,
                          provider.beta_d, provider.phi, provider.phi_d)
    elif isinstance(provider, _schedules.TLSControlCoefficients):
        ce = TLSControlEval(provider.delta, provider.delta_d, provider.omega_r,
                            provider.omega_r_d, provider.phi, provider.phi_d,
                            provider.include_h0, provider.include_h1)
    elif isinstance(provider, _schedules.TLSMixingCoefficients):
        ce = TLSMixingEval(provider.theta, provider.theta_d, provider.omega,
                           provider.phi, provider.phi_d,
                           provider.include_h0, provider.include_h1)
    elif isinstance(provider, _schedules.HOErmakovCoefficients):
        from ..units import MASS
        ce = HOErmakovEval(provider.b, provider.b_dd, provider.omega0, MASS)
    elif isinstance(provider, _schedules.HOBerryCoefficients):
        from ..units import MASS
        ce = HOBerryEval(provider.omega, provider.omega_d, provider.include_h1, MASS)
    elif isinstance(provider, _schedules.PolynomialCoefficients):
        ce = PolyEval(list(provider.polys))
    else:
        ce = CallbackEval(provider)
    return Plan(ce, schedule.band)


# Dormand-Prince coefficients.
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

# Shampine dense-output matrix (7 stages x powers x..x^4).
cdef double[:, ::1] P_DENSE = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])


def integrate_adaptive(Plan plan, node_times, y_start, double rtol, double atol,
                       double first_step):
    """Adaptive 5(4) propagation; states recorded at node_times by dense output.

    Returns (states, n_accepted, n_rejected, min_step, max_step, status).
    """
    cdef double[::1] nodes = np.ascontiguousarray(node_times, dtype=float)
    cdef Py_ssize_t n_nodes = nodes.shape[0]
    cdef int n = plan.n
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] states_arr = np.empty((n_nodes, n), dtype=complex)
    cdef double complex[:, ::1] states = states_arr
    cdef double complex[:, ::1] k = np.empty((7, n), dtype=complex)
    cdef double complex[::1] y = np.ascontiguousarray(y_start, dtype=complex).copy()
    cdef double complex[::1] y_new = np.empty(n, dtype=complex)
    cdef double complex[::1] y_stage = np.empty(n, dtype=complex)

    cdef double t_start = nodes[0]
    cdef double t_end = nodes[n_nodes - 1]
    cdef double t = t_start
    cdef double h = fmin(first_step, t_end - t_start)
    cdef double underflow = t_end * 1e-14
    cdef double fac_old = 1e-4
    cdef double err, err_term, scale, fac11, factor, h_next, t_new, t_node
    cdef double x, x2, x3, x4, coef_s
    cdef double complex acc, ev
    cdef Py_ssize_t idx = 0, j, s
    cdef long n_accepted = 0, n_rejected = 0
    cdef double min_step = float("inf"), max_step = 0.0
    cdef int status = STATUS_OK
    cdef bint final

    while idx < n_nodes and nodes[idx] <= t_start:
        for j in range(n):
            states[idx, j] = y[j]
        idx += 1

    plan.rhs(t, &y[0], &k[0, 0])

    while t < t_end:
        final = h >= t_end - t
        if final:
            h = t_end - t
        if h < underflow:
            status = STATUS_UNDERFLOW
            break

        for j in range(n):
            y_stage[j] = y[j] + h * A21 * k[0, j]
        plan.rhs(t + C2 * h, &y_stage[0], &k[1, 0])
        for j in range(n):
            y_stage[j] = y[j] + h * (A31 * k[0, j] + A32 * k[1, j])
        plan.rhs(t + C3 * h, &y_stage[0], &k[2, 0])
        for j in range(n):
            y_stage[j] = y[j] + h * (A41 * k[0, j] + A42 * k[1, j] + A43 * k[2, j])
        plan.rhs(t + C4 * h, &y_stage[0], &k[3, 0])
        for j in range(n):
            y_stage[j] = y[j] + h * (A51 * k[0, j] + A52 * k[1, j] + A53 * k[2, j]
                                     + A54 * k[3, j])
        plan.rhs(t + C5 * h, &y_stage[0], &k[4, 0])
        for j in range(n):
            y_stage[j] = y[j] + h * (A61 * k[0, j] + A62 * k[1, j] + A63 * k[2, j]
                                     + A64 * k[3, j] + A65 * k[4, j])
        plan.rhs(t + h, &y_stage[0], &k[5, 0])
        for j in range(n):
            y_new[j] = y[j] + h * (B1 * k[0, j] + B3 * k[2, j] + B4 * k[3, j]
                                   + B5 * k[4, j] + B6 * k[5, j])
        plan.rhs(t + h, &y_new[0], &k[6, 0])

        err = 0.0
        for j in range(n):
            ev = h * (E1 * k[0, j] + E3 * k[2, j] + E4 * k[3, j] + E5 * k[4, j]
                      + E6 * k[5, j] + E7 * k[6, j])
            scale = atol + rtol * fmax(abs(y[j]), abs(y_new[j]))
            err_term = abs(ev) / scale
            err += err_term * err_term
        err = sqrt(err / n)

        fac11 = pow(err, EXPO1) if err > 0.0 else 1e-10
        if err <= 1.0:
            # land exactly on t_end when the step was clamped to it
            t_new = t_end if final else t + h
            while idx < n_nodes and nodes[idx] <= t_new + 1e-15 * t_end:
                t_node = nodes[idx]
                if fabs(t_node - t_new) <= 1e-15 * fmax(fabs(t_new), 1.0):
                    for j in range(n):
                        states[idx, j] = y_new[j]
                else:
                    x = (t_node - t) / h
                    x2 = x * x
                    x3 = x2 * x
                    x4 = x2 * x2
                    for j in range(n):
                        acc = 0.0
                        for s in range(7):
                            coef_s = (P_DENSE[s, 0] * x + P_DENSE[s, 1] * x2
                                      + P_DENSE[s, 2] * x3 + P_DENSE[s, 3] * x4)
                            acc = acc + coef_s * k[s, j]
                        states[idx, j] = y[j] + h * acc
                idx += 1
            factor = fac11 / pow(fac_old, PI_BETA)
            h_next = h / fmin(1.0 / MIN_FACTOR, fmax(1.0 / MAX_FACTOR, factor / SAFETY))
            fac_old = fmax(err, 1e-4)
            n_accepted += 1
            min_step = fmin(min_step, h)
            max_step = fmax(max_step, h)
            t = t_new
            for j in range(n):
                y[j] = y_new[j]
                k[0, j] = k[6, j]
            h = h_next
        else:
            n_rejected += 1
            h = h / fmin(1.0 / MIN_FACTOR, fac11 / SAFETY)

    return states_arr, n_accepted, n_rejected, min_step, max_step, status


def integrate_rk4(Plan plan, double t0, double t1, long n_steps, y_start):
    """Classic fixed-step RK4 from t0 to t1; returns the final state."""
    cdef int n = plan.n
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] y_arr = np.ascontiguousarray(
        y_start, dtype=complex).copy()
    cdef double complex[::1] y = y_arr
    cdef double complex[::1] k1 = np.empty(n, dtype=complex)
    cdef double complex[::1] k2 = np.empty(n, dtype=complex)
    cdef double complex[::1] k3 = np.empty(n, dtype=complex)
    cdef double complex[::1] k4 = np.empty(n, dtype=complex)
    cdef double complex[::1] tmp = np.empty(n, dtype=complex)
    cdef double h = (t1 - t0) / n_steps
    cdef double t
    cdef long i
    cdef Py_ssize_t j

    for i in range(n_steps):
        t = t0 + i * h
        plan.rhs(t, &y[0], &k1[0])
        for j in range(n):
            tmp[j] = y[j] + 0.5 * h * k1[j]
        plan.rhs(t + 0.5 * h, &tmp[0], &k2[0])
        for j in range(n):
            tmp[j] = y[j] + 0.5 * h * k2[j]
        plan.rhs(t + 0.5 * h, &tmp[0], &k3[0])
        for j in range(n):
            tmp[j] = y[j] + h * k3[j]
        plan.rhs(t + h, &tmp[0], &k4[0])
        for j in range(n):
            y[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return y_arr
