"""Numerical core: compiled Cython kernels with a numpy fallback.

The compiled module is optional; if the extension failed to build (or
``ENSPULSE_PURE_PYTHON=1`` is set) the numpy reference implementation in
:mod:`enspulse.kernels.pyref` is used instead.  Both expose the same four
functions with identical semantics.
"""

import os

from . import pyref

if os.environ.get("ENSPULSE_PURE_PYTHON"):
    _impl = pyref
    HAVE_COMPILED = False
else:
    try:
        from . import _fastcore as _impl  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        _impl = pyref
        HAVE_COMPILED = False

IMPLEMENTATION = "compiled" if HAVE_COMPILED else "pure-python"

spinor_propagate = _impl.spinor_propagate
bloch_propagate = _impl.bloch_propagate
slr_forward = _impl.slr_forward
slr_inverse = _impl.slr_inverse

__all__ = [
    "spinor_propagate",
    "bloch_propagate",
    "slr_forward",
    "slr_inverse",
    "HAVE_COMPILED",
    "IMPLEMENTATION",
    "pyref",
]
