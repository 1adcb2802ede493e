"""Integration kernel selection.

The compiled Cython kernel is preferred when its extension module built; the
pure-Python kernel is the always-available fallback with identical contract.
`get("auto")` returns the default chosen at import time.
"""

from __future__ import annotations

from . import _pykernel

try:
    from . import _cykernel

    HAVE_COMPILED = True
except ImportError:  # extension not built in this environment
    _cykernel = None
    HAVE_COMPILED = False

DEFAULT = "compiled" if HAVE_COMPILED else "pure"


def get(name: str = "auto"):
    """Kernel module by name: 'auto', 'compiled' or 'pure'."""
    if name == "auto":
        name = DEFAULT
    if name == "pure":
        return _pykernel
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel is not available; build the extension")
        return _cykernel
    raise ValueError(f"unknown kernel {name!r}")


def available() -> list[str]:
    return ["compiled", "pure"] if HAVE_COMPILED else ["pure"]
