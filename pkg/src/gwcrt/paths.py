"""Calculus on finite integer paths.

Paths are integer arrays ``w(0..z)``; ``z`` is the lifetime.  Everything
here is exact integer arithmetic.  The public functions accept any integer
sequence (or a :class:`LatticePath`) and return numpy arrays; the heavy
lifting is done by the ``_k*`` kernels so that other modules can call them
from inside compiled loops.
"""
import math

import numpy as np

from ._jit import njit

INF = math.inf
"""Value of a first passage that never happens."""


class LatticePath:
    """Integer path ``w(0), ..., w(z)``."""

    __slots__ = ("values",)

    def __init__(self, values):
        v = np.array(values, dtype=np.int64).reshape(-1)
        if v.shape[0] == 0:
            raise ValueError("a path needs at least one value")
        v.setflags(write=False)
        self.values = v

    @property
    def lifetime(self):
        return int(self.values.shape[0] - 1)

    @property
    def skip_free(self):
        return bool(np.all(np.diff(self.values) >= -1))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if isinstance(other, LatticePath):
            other = other.values
        try:
            return bool(np.array_equal(self.values, np.asarray(other)))
        except Exception:
            return NotImplemented

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"LatticePath({self.values.tolist()})"


def _w(w):
    return np.ascontiguousarray(np.asarray(w, dtype=np.int64).reshape(-1))


def _index(w, n, name="n"):
    if not 0 <= n <= w.shape[0] - 1:
        raise IndexError(f"{name}={n} outside [0, {w.shape[0] - 1}]")
    return int(n)


# kernels -----------------------------------------------------------------

@njit
def _kheight_into(w, lo, out, st):
    # H_n = #{j < n : w(j) = min w[j..n]} for the path w[lo:], written to
    # out[0..]; stack of surviving records
    top = 0
    for n in range(w.shape[0] - lo):
        while top > 0 and w[lo + st[top - 1]] > w[lo + n]:
            top -= 1
        out[n] = top
        st[top] = n
        top += 1


@njit
def _kheight(w):
    z = w.shape[0]
    h = np.empty(z, dtype=np.int64)
    st = np.empty(z, dtype=np.int64)
    _kheight_into(w, 0, h, st)
    return h


@njit
def _kladder_into(w, z, out):
    # L_n for n in 0..z: weak upper records in (0, n]
    out[0] = 0
    best = w[0]
    c = 0
    for j in range(1, z + 1):
        if w[j] >= best:
            best = w[j]
            c += 1
        out[j] = c


@njit
def _kladder(w):
    out = np.empty(w.shape[0], dtype=np.int64)
    _kladder_into(w, w.shape[0] - 1, out)
    return out


@njit
def _kreverse_into(w, n, out):
    for k in range(n + 1):
        out[k] = w[n] - w[n - k]


@njit
def _kreverse(w, n):
    r = np.empty(n + 1, dtype=np.int64)
    _kreverse_into(w, n, r)
    return r


@njit
def _kfirst_passage(w, a):
    # -1 encodes "never"
    for k in range(w.shape[0]):
        if w[k] >= a:
            return k
    return -1


@njit
def _kbeta_rev(w, n, m, rev):
    # rev holds the reversed path w_hat^n on 0..n
    lo = w[n]
    for k in range(n, n + m + 1):
        if w[k] < lo:
            lo = w[k]
    inf = lo - w[n]          # inf of the shifted path on [0, m]
    if inf >= 0:
        return 0
    for t in range(n + 1):
        if rev[t] >= -inf:
            return min(n, max(t - 1, 0))
    return n


@njit
def _kbeta(w, n, m):
    return _kbeta_rev(w, n, m, _kreverse(w, n))


@njit
def _kargmin(w):
    j = 0
    for k in range(1, w.shape[0]):
        if w[k] < w[j]:
            j = k
    return j


@njit
def _kvervaat(w):
    z = w.shape[0] - 1
    g = _kargmin(w)
    low = w[g]
    v = np.empty(z + 1, dtype=w.dtype)
    for k in range(z + 1):
        if k <= z - g:
            v[k] = w[k + g] - low
        else:
            v[k] = w[k + g - z] + w[z] - low - w[0]
    return v


@njit
def _km(w):
    p = w.shape[0] - 1
    rev = _kreverse(w, p)
    lad = _kladder(rev)
    # first passage of rev above each level a >= 0
    top = 0
    for k in range(p + 1):
        if rev[k] > top:
            top = rev[k]
    fp = np.full(top + 2, -1, dtype=np.int64)
    best = -1
    for k in range(p + 1):
        while best < rev[k] and best < top:
            best += 1
            fp[best] = k
    m = np.empty(p + 1, dtype=np.int64)
    low = w[0]
    for k in range(p + 1):
        if w[k] < low:
            low = w[k]
        a = -low
        if a <= top:
            g = min(p, max(fp[a] - 1, 0))
        else:
            g = p
        m[k] = lad[p] - lad[g]
    return m


# public API --------------------------------------------------------------

def ladder_count_L(w, n):
    """``L_n(w)``: number of j in (0, n] with ``w(j) = max w[0..j]``."""
    w = _w(w)
    return int(_kladder(w)[_index(w, n)])


def ladder_counts(w):
    """All ``L_0..L_z`` at once."""
    return _kladder(_w(w))


def height_from_walk(w):
    """``H_n = #{0 <= j < n : w(j) = min w[j..n]}`` for every n (O(z))."""
    return _kheight(_w(w))


def height_from_walk_literal(w):
    """Quadratic reference for :func:`height_from_walk`."""
    w = _w(w)
    out = np.zeros(w.shape[0], dtype=np.int64)
    for n in range(w.shape[0]):
        out[n] = sum(1 for j in range(n) if w[j] == w[j:n + 1].min())
    return out


def shift(w, n):
    """``w^(n)(k) = w(k + n) - w(n)`` on ``0..z-n``."""
    w = _w(w)
    n = _index(w, n)
    return LatticePath(w[n:] - w[n])


def reverse(w, n):
    """``w_hat^n(k) = w(n) - w(n - k)`` on ``0..n``."""
    w = _w(w)
    return LatticePath(_kreverse(w, _index(w, n)))


def first_passage(w, a):
    """First k with ``w(k) >= a``; :data:`INF` when there is none."""
    t = _kfirst_passage(_w(w), int(a))
    return INF if t < 0 else int(t)


def beta(w, n, m):
    """``beta(n, m) = n ^ (t(-inf w^(n)[0..m], w_hat^n) - 1)_+`` (three branches)."""
    w = _w(w)
    n = _index(w, n)
    if m < 0 or n + m > w.shape[0] - 1:
        raise IndexError(f"n+m={n + m} exceeds lifetime {w.shape[0] - 1}")
    return int(_kbeta(w, n, int(m)))


def first_argmin(w):
    """Smallest index where the minimum is attained."""
    return int(_kargmin(_w(w)))


def vervaat_discrete(w):
    """Cyclic rotation of the increments at the first minimum."""
    return LatticePath(_kvervaat(_w(w)))


def m_process(w):
    """``M_k = L_p(W_hat^p) - L_{gamma_p(k)}(W_hat^p)`` for k in ``0..p``."""
    w = _w(w)
    if w.shape[0] < 2 or w[0] != 0:
        raise ValueError("m_process needs w(0) = 0 and lifetime >= 1")
    return _km(w)
