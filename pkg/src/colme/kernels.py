"""Select the per-step kernel backend at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``COLME_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementation is used.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_force_python = os.environ.get("COLME_PURE_PYTHON", "") not in ("", "0")

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if (_compiled is not None and not _force_python) else "python"


def get(name=None):
    """Kernel module by name; ``None`` gives the default backend."""
    if name is None:
        name = BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
