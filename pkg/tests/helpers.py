from contextlib import contextmanager

from mmsobolev import _jit


@contextmanager
def use_backend(name):
    old = _jit.set_backend(name)
    try:
        yield
    finally:
        _jit.set_backend(old)
