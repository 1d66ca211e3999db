"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy twins in ``_pykernels`` are used.  Setting ``CGALP_PURE_PYTHON=1``
forces the fallback.  Callers go through :data:`kernels` at call time, so
:func:`use_backend` can swap implementations for benchmarks and tests.
"""

import contextlib
import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    _BACKENDS["cython"] = _compiled

if _compiled is not None and not os.environ.get("CGALP_PURE_PYTHON"):
    kernels = _compiled
    name = "cython"
else:
    kernels = _pykernels
    name = "python"


def available():
    """Names of the importable backends."""
    return sorted(_BACKENDS)


def get(backend):
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {backend!r}; "
                         f"have {available()}") from None


@contextlib.contextmanager
def use_backend(backend):
    """Temporarily route every kernel call through ``backend``."""
    global kernels, name
    saved = kernels, name
    kernels, name = get(backend), backend
    try:
        yield kernels
    finally:
        kernels, name = saved
