"""Kernel backend: the compiled module when it was built, else the reference one."""
from __future__ import annotations

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

kernels = _compiled if _compiled is not None else _pykernels


def available():
    return ["cython", "python"] if _compiled is not None else ["python"]


def use(name: str):
    """Switch backend ("cython" or "python"); returns the previous name."""
    global kernels
    prev = kernels.BACKEND
    if name == "python":
        kernels = _pykernels
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; reinstall to build them")
        kernels = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def current() -> str:
    return kernels.BACKEND
