"""Time-dependent Schroedinger propagation with a compiled core.

The hot stepping loop lives in a Cython extension when built, with a
pure-Python fallback selected automatically at import; see `kernels`.
"""

from . import kernels
from .core import (
    HOInvariantModes,
    HOReferenceModes,
    PropagationRecord,
    TLSInvariantModes,
    TLSMixingModes,
    adiabatic_reference,
    decompose_into_modes,
    expectation_series,
    fidelity,
    invariance_residual,
    mode_transport_check,
    populations,
    propagate,
    rk4_reference,
    two_level_populations,
)
from .schedules import (
    CallbackCoefficients,
    HamiltonianSchedule,
    HOBerryCoefficients,
    HOErmakovCoefficients,
    PolynomialCoefficients,
    TLSAngleCoefficients,
    TLSControlCoefficients,
    TLSMixingCoefficients,
    ho_basis,
    ho_berry_invariant_evaluator,
    ho_berry_schedule,
    ho_invariant_evaluator,
    ho_invariant_schedule,
    tls_basis,
    tls_control_schedule,
    tls_invariant_evaluator,
    tls_invariant_schedule,
    tls_mixing_invariant_evaluator,
    tls_mixing_schedule,
)

__all__ = [name for name in dir() if not name.startswith("_")]
