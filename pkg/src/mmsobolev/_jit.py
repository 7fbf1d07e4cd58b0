"""Optional numba acceleration for the hot loops.

Every kernel is written once as a plain Python loop function.  When numba is
enabled the loop function is compiled lazily on first use; otherwise the
kernel's numpy fallback runs (for kernels with no vectorised form the loop
function itself is the fallback).  Set ``MMSOBOLEV_NO_NUMBA=1`` before import
to start with the numpy backend, or call :func:`set_backend` at runtime.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_state = {
    "numba": numba is not None
    and os.environ.get("MMSOBOLEV_NO_NUMBA", "0").lower() not in ("1", "true", "yes")
}


def backend():
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if _state["numba"] else "numpy"


def set_backend(name):
    """Switch backend; returns the previous name."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    old = backend()
    _state["numba"] = name == "numba"
    return old


class Kernel:
    """Dispatch between a compiled loop function and a numpy fallback."""

    def __init__(self, loops, fallback=None):
        self.loops = loops
        self.fallback = fallback if fallback is not None else loops
        self._compiled = None
        self.__doc__ = loops.__doc__
        self.__name__ = loops.__name__

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = numba.njit(cache=True)(self.loops)
        return self._compiled

    def __call__(self, *args):
        if _state["numba"]:
            return self.compiled(*args)
        return self.fallback(*args)


def kernel(fallback=None):
    """Decorator form of :class:`Kernel`."""
    def wrap(loops):
        return Kernel(loops, fallback)
    return wrap
