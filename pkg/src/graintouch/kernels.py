"""Backend selection for the integrator kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. Set ``GRAINTOUCH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("GRAINTOUCH_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get_backend(name=None):
    """Kernel module by name; ``None`` selects the active backend."""
    name = BACKEND if name is None else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
