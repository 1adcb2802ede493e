"""stakit: design and verification of shortcut-to-adiabaticity protocols.

Builds driving Hamiltonians for the time-dependent harmonic oscillator and
the two-level atom by invariant-based inverse engineering and by
transitionless tracking, then certifies the exactness properties of both
routes by direct numerical propagation.
"""

from . import curves, fock, ho_design, propagation, tls_design, units

__version__ = "0.1.0"

__all__ = ["curves", "fock", "ho_design", "propagation", "tls_design", "units", "__version__"]
