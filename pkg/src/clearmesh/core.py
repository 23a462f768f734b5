"""Kernel backend selection.

The hot kernels (triangulation build, refinement sweep) exist twice: a
compiled Cython extension (`clearmesh._core`) and a pure-Python twin.  The
compiled one is preferred when importable; `CLEARMESH_BACKEND=pure|compiled`
or `set_backend()` forces a choice.  Both produce identical output arrays.
"""

from __future__ import annotations

import os

from . import _pycore
from .errors import InputError

_active = None
_active_name = None


def _resolve(name):
    global _active, _active_name
    if name == "pure":
        _active, _active_name = _pycore, "pure"
        return
    try:
        from . import _core  # compiled extension, absent in pure installs

        _active, _active_name = _core, "compiled"
    except ImportError:
        if name == "compiled":
            raise InputError(
                "compiled kernel requested but clearmesh._core is not built"
            )
        _active, _active_name = _pycore, "pure"


def set_backend(name: str):
    """Force a kernel backend: 'auto', 'pure', or 'compiled'."""
    if name not in ("auto", "pure", "compiled"):
        raise InputError(f"unknown backend {name!r}")
    _resolve(name)


def kernel():
    """The active kernel module."""
    if _active is None:
        _resolve(os.environ.get("CLEARMESH_BACKEND", "auto"))
    return _active


def backend_name() -> str:
    kernel()
    return _active_name


def compiled_available() -> bool:
    try:
        from . import _core  # noqa: F401

        return True
    except ImportError:
        return False
