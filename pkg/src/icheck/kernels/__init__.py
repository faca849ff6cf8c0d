"""Bitset kernels behind the enumeration oracle.

The compiled extension is used when it was built; otherwise, or when
``ICHECK_PURE=1`` is set, the numpy implementation is loaded instead.
``BACKEND`` names the active one.
"""

import os

from . import _pykernels as python

try:
    if os.environ.get("ICHECK_PURE") == "1":
        raise ImportError("pure backend requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_active = compiled if compiled is not None else python

BACKEND = _active.BACKEND
violations = _active.violations
expand = _active.expand
permute = _active.permute


def backends():
    """Available kernel modules, compiled first."""
    return [m for m in (compiled, python) if m is not None]
