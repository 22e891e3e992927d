"""Kernel backend selection.

The compiled core is used when it was built; otherwise, or when the
``SYMKIO_PURE_PYTHON`` environment variable is set, the numpy kernels are.
"""

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("SYMKIO_PURE_PYTHON") or _ckernels is None:
    _active = _pykernels
else:
    _active = _ckernels


def available():
    return sorted(_BACKENDS)


def kernels():
    return _active


def name():
    return _active.BACKEND


def set_backend(backend: str) -> None:
    global _active
    try:
        _active = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} not available; have {available()}") from None


@contextmanager
def use_backend(backend: str):
    previous = _active.BACKEND
    set_backend(backend)
    try:
        yield
    finally:
        set_backend(previous)
