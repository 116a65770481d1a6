"""Kernel backend selection.

The hot numerical loops exist twice: a Cython extension
(``localcap._core``) and a NumPy fallback (``localcap._kernels_py``)
with identical interfaces.  The compiled lane is preferred when it
imported cleanly; set ``LOCALCAP_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_python = os.environ.get("LOCALCAP_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    impl = _kernels_py
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _kernels_py

BACKEND = impl.BACKEND_NAME

# evaluation / trace status codes are shared across lanes
EVAL_OK = _kernels_py.EVAL_OK
EVAL_AT_TRANSMITTER = _kernels_py.EVAL_AT_TRANSMITTER
EVAL_ON_INTERFERER = _kernels_py.EVAL_ON_INTERFERER
TRACE_CLOSED = _kernels_py.TRACE_CLOSED
TRACE_MAX_STEPS = _kernels_py.TRACE_MAX_STEPS
TRACE_DEGENERATE = _kernels_py.TRACE_DEGENERATE
TRACE_SINGULAR = _kernels_py.TRACE_SINGULAR


def available_backends():
    """Names of importable kernel backends."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_impl(name=None):
    """Kernel module by backend name ('cython' or 'python')."""
    if name is None:
        return impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown kernel backend: {name!r}")
