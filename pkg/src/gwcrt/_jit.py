"""JIT switch.

Hot loops are written once as plain numpy/python and compiled with numba
when it is importable.  Setting ``GWCRT_NO_JIT=1`` in the environment
leaves every kernel as an ordinary python function, which is handy for
debugging and for checking the compiled code against the interpreter.
"""
import os

_flag = os.environ.get("GWCRT_NO_JIT", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba as _numba
except ImportError:  # numba missing or switched off
    _numba = None

JIT_ENABLED = _numba is not None


def njit(*args, **kwargs):
    """numba.njit with on-disk caching, or the identity decorator."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    if len(args) == 1 and callable(args[0]):
        return _numba.njit(**kwargs)(args[0])
    return _numba.njit(*args, **kwargs)


def pure(f):
    """Interpreted version of a kernel (the function itself when JIT is off)."""
    return getattr(f, "py_func", f)
