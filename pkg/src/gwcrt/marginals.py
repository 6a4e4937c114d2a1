"""Marked trees, reduced subtrees and the finite-dimensional marginals.

A :class:`MarkedTree` is an ordered skeleton plus one lifetime per vertex
(preorder).  Two constructions produce them:

* :func:`reduce_from_path` - the recursive reduction of a path at sample
  times (root lifetime = minimum between the extreme times, split at every
  consecutive pair whose minimum ties with it);
* :func:`discrete_reduced_tree` - the subtree of a discrete tree spanned by
  a few vertices and their common ancestors, with edge lengths |u| - |v|.

The limit law of the k-th marginal has two parts with closed forms:
:func:`skeleton_probability` for the shape and :func:`mark_density` for
the lifetimes, the latter built on the density ``q(s, u)`` of the stable
subordinator of index ``1 - 1/alpha``.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from ._jit import njit
from .levy import GridPath
from .rng import as_rng
from .sampler import get_sampler
from .trees import OrderedTree, _height_from_children


@dataclass(frozen=True)
class MarkedTree:
    skeleton: OrderedTree
    lifetimes: tuple

    def __post_init__(self):
        lt = tuple(float(x) for x in self.lifetimes)
        if len(lt) != self.skeleton.size:
            raise ValueError("one lifetime per vertex is required")
        if any(not math.isfinite(x) or x < 0 for x in lt):
            raise ValueError("lifetimes must be finite and >= 0")
        object.__setattr__(self, "lifetimes", lt)

    @property
    def key(self):
        return str(self.skeleton)

    @property
    def n_leaves(self):
        return int(np.count_nonzero(self.skeleton.children_counts == 0))

    def scaled(self, c):
        return MarkedTree(self.skeleton, tuple(c * x for x in self.lifetimes))

    def isclose(self, other, tol=1e-12):
        return (self.skeleton == other.skeleton
                and np.allclose(self.lifetimes, other.lifetimes, rtol=0, atol=tol))

    def __str__(self):
        marks = ",".join(f"{x:g}" for x in self.lifetimes)
        return f"{self.skeleton} | {marks}"


def _marked(counts, lifetimes):
    return MarkedTree(OrderedTree(counts), tuple(lifetimes))


# reduction of a path -----------------------------------------------------------

def _path_and_indices(omega, times):
    if isinstance(omega, GridPath):
        w = np.asarray(omega.values, dtype=float)
        t = np.asarray(times, dtype=float)
        if np.any(t < 0) or np.any(t > omega.horizon):
            raise ValueError("sample time outside the path's domain")
        idx = omega.index(t)
    else:
        w = np.asarray(omega, dtype=float).reshape(-1)
        t = np.asarray(times)
        idx = t.astype(np.int64)
        if not np.array_equal(idx, t):
            raise ValueError("times on a sequence must be integer indices")
        if np.any(idx < 0) or np.any(idx >= w.shape[0]):
            raise ValueError("sample index outside the path")
    if t.size == 0:
        raise ValueError("need at least one sample time")
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be sorted")
    return w, [int(i) for i in idx]


def reduce_from_path(omega, times):
    """The marked tree of ``omega`` at the sorted sample times.

    ``omega`` is a :class:`GridPath` (times are real) or an integer-indexed
    sequence (times are indices, the path read as a step function).
    """
    w, idx = _path_and_indices(omega, times)
    counts, life = [], []

    def rec(base, ts):
        if len(ts) == 1:
            counts.append(0)
            life.append(w[ts[0]] - base)
            return
        m = w[ts[0]:ts[-1] + 1].min()
        groups, cur = [], [ts[0]]
        for a, b in zip(ts[:-1], ts[1:]):
            if w[a:b + 1].min() == m:
                groups.append(cur)
                cur = []
            cur.append(b)
        groups.append(cur)
        counts.append(len(groups))
        life.append(m - base)
        for g in groups:
            rec(m, g)

    rec(0.0, idx)
    return _marked(counts, life)


def concat_marked(thetas, h):
    """``[theta_1, ..., theta_k]_h``: graft under a new root of lifetime h."""
    thetas = list(thetas)
    if not thetas:
        raise ValueError("need at least one marked tree")
    if h < 0:
        raise ValueError("h must be >= 0")
    counts = [len(thetas)]
    life = [h]
    for th in thetas:
        counts.extend(int(x) for x in th.skeleton.children_counts)
        life.extend(th.lifetimes)
    return _marked(counts, life)


def collapse_unary(theta):
    """Merge every one-child vertex into its child, adding the lifetimes."""
    k = theta.skeleton.children_counts
    life = theta.lifetimes
    counts, out = [], []
    pos = 0

    def rec(carry):
        nonlocal pos
        v = pos
        pos += 1
        if k[v] == 1:
            rec(carry + life[v])
            return
        counts.append(int(k[v]))
        out.append(carry + life[v])
        for _ in range(k[v]):
            rec(0.0)

    rec(0.0)
    return _marked(counts, out)


# reduced subtree of a discrete tree --------------------------------------------

@njit
def _reduced_core(h, pts):
    # pts: sorted distinct preorder indices.  Returns the preorder indices of
    # the vertex set {v_i ^ v_j}, the parent of each inside that set (-1 for
    # the top one) and a flag marking the sampled vertices.
    k = pts.shape[0]
    cand = np.empty(2 * k, dtype=np.int64)
    nc = 0
    for i in range(k):
        cand[nc] = pts[i]
        nc += 1
    for i in range(k - 1):
        a = pts[i]
        b = pts[i + 1]
        d = h[a]
        for n in range(a + 1, b + 1):
            if h[n] - 1 < d:
                d = h[n] - 1
        j = a
        while h[j] > d:
            j -= 1
        cand[nc] = j
        nc += 1
    cand = np.unique(cand[:nc])
    m = cand.shape[0]
    par = np.full(m, -1, dtype=np.int64)
    sampled = np.zeros(m, dtype=np.bool_)
    q = 0
    for i in range(m):
        while q < k and pts[q] < cand[i]:
            q += 1
        if q < k and pts[q] == cand[i]:
            sampled[i] = True
    # stack of open ancestors with the minimum height seen since each
    st = np.empty(m, dtype=np.int64)
    low = np.empty(m, dtype=np.int64)
    top = 0
    for i in range(m):
        x = cand[i]
        if i > 0:
            mm = h[x]
            for n in range(cand[i - 1] + 1, x + 1):
                if h[n] < mm:
                    mm = h[n]
            for s in range(top):
                if mm < low[s]:
                    low[s] = mm
        while top > 0 and low[top - 1] <= h[cand[st[top - 1]]]:
            top -= 1
        if top > 0:
            par[i] = st[top - 1]
        st[top] = i
        low[top] = 1 << 62
        top += 1
    return cand, par, sampled


def _reduced_from_heights(h, pts, theta_form):
    pts = np.unique(np.asarray(pts, dtype=np.int64))
    cand, par, sampled = _reduced_core(h, pts)
    m = cand.shape[0]
    kids = [[] for _ in range(m)]
    for i in range(1, m):
        kids[par[i]].append(i)
    counts, life = [], []

    def rec(i):
        base = h[cand[par[i]]] if par[i] >= 0 else 0
        extra = theta_form and sampled[i] and kids[i]
        counts.append(len(kids[i]) + (1 if extra else 0))
        life.append(float(h[cand[i]] - base))
        if extra:
            counts.append(0)
            life.append(0.0)
        for c in kids[i]:
            rec(c)

    rec(0)
    return _marked(counts, life)


def discrete_reduced_tree(tree, vertices, theta_form=False):
    """Reduced subtree of ``tree`` at the given vertices.

    Vertices are preorder indices or Ulam-Harris words.  The returned root is
    the most recent common ancestor of all of them, with lifetime equal to its
    depth; every other vertex carries the length of the edge to its reduced
    parent.  With ``theta_form`` a sampled vertex that is an ancestor of
    another sampled vertex also gets a zero-lifetime first child, which is the
    shape the path reduction produces.
    """
    t = tree if isinstance(tree, OrderedTree) else OrderedTree(tree)
    idx = []
    words = None
    for v in vertices:
        if isinstance(v, (tuple, list)):
            if words is None:
                words = {w: i for i, w in enumerate(t.words())}
            idx.append(words[tuple(v)])
        else:
            idx.append(int(v))
    if not idx:
        raise ValueError("need at least one vertex")
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate vertices")
    if min(idx) < 0 or max(idx) >= t.size:
        raise ValueError("vertex outside the tree")
    return _reduced_from_heights(t.depths(), idx, theta_form)


# skeletons -----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _skeletons(k):
    if k == 1:
        return ((0,),)
    out = []
    for c in range(2, k + 1):
        for comp in _compositions(k, c):
            parts = [_skeletons(j) for j in comp]
            for combo in _product(parts):
                out.append((c,) + tuple(x for s in combo for x in s))
    return tuple(sorted(out))


def _compositions(n, c):
    if c == 1:
        yield (n,)
        return
    for first in range(1, n - c + 2):
        for rest in _compositions(n - first, c - 1):
            yield (first,) + rest


def _product(parts):
    if not parts:
        yield ()
        return
    for a in parts[0]:
        for rest in _product(parts[1:]):
            yield (a,) + rest


def admissible_skeletons(k):
    """Ordered trees with k leaves and no vertex with exactly one child."""
    if k < 1:
        raise ValueError("k >= 1")
    return [OrderedTree(s) for s in _skeletons(int(k))]


def _check_skeleton(skeleton, k):
    t = skeleton if isinstance(skeleton, OrderedTree) else OrderedTree(skeleton)
    c = t.children_counts
    if np.any(c == 1):
        raise ValueError(f"skeleton {t} has a vertex with one child")
    leaves = int(np.count_nonzero(c == 0))
    if k is None:
        k = leaves
    if leaves != k:
        raise ValueError(f"skeleton {t} has {leaves} leaves, expected {k}")
    return t, int(k)


def skeleton_probability(skeleton, alpha, k=None, exact=False):
    """Limit probability of a k-leaf skeleton.

    ``k! / prod k_v! * prod |(1-a)(2-a)...(k_v-1-a)| / |(a-1)(2a-1)...((k-1)a-1)|``
    over internal vertices.  With ``exact`` the value is a Fraction (alpha is
    read through its decimal representation).
    """
    t, k = _check_skeleton(skeleton, k)
    if exact:
        a = alpha if isinstance(alpha, Fraction) else Fraction(str(alpha))
        one = Fraction(1)
    else:
        a = float(alpha)
        one = 1.0
    if not 1 < a <= 2:
        raise ValueError("alpha must lie in (1, 2]")
    num = one * math.factorial(k)
    for kv in t.children_counts:
        if kv == 0:
            continue
        num /= math.factorial(int(kv))
        for j in range(1, int(kv)):
            num *= abs(j - a)
    den = one
    for j in range(1, k):
        den *= abs(j * a - 1)
    return num / den


def skeleton_law(alpha, k, exact=False):
    """``{skeleton string: probability}`` over all admissible skeletons."""
    return {str(s): skeleton_probability(s, alpha, k, exact) for s in admissible_skeletons(k)}


# subordinator density --------------------------------------------------------------

def _kanter(x, b):
    # density at x of the positive b-stable law with E exp(-l X) = exp(-l^b)
    if x <= 0:
        return 0.0
    c = 1.0 / (1.0 - b)
    z = x ** (-b * c)

    def f(phi):
        sb = math.sin(b * phi)
        a = (sb / math.sin(phi)) ** c * math.sin((1 - b) * phi) / sb
        return a * math.exp(-z * a)

    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-15, epsrel=1e-12, limit=500)
    return b * c / math.pi * x ** (-c) * val


def subordinator_density_q(alpha, s, u):
    """Density ``q(s, u)`` at u of the index ``1 - 1/alpha`` stable subordinator at time s.

    Normalised by ``int e^(-l u) q(s, u) du = exp(-s l^(1 - 1/alpha))``.  The
    index 1/2 case (alpha = 2) is the closed form
    ``s / (2 sqrt(pi u^3)) exp(-s^2 / (4 u))``; otherwise Kanter's integral
    representation at s = 1 and the scaling ``q(s, u) = s^(-1/b) q(1, u s^(-1/b))``.
    """
    a = float(alpha)
    if not 1 < a <= 2:
        raise ValueError("alpha must lie in (1, 2]")
    s_arr = np.asarray(s, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(s_arr <= 0) or np.any(u_arr <= 0):
        raise ValueError("q(s, u) needs s > 0 and u > 0")
    if a == 2.0:
        out = s_arr / (2 * np.sqrt(np.pi * u_arr ** 3)) * np.exp(-s_arr ** 2 / (4 * u_arr))
        return out if out.ndim else float(out)
    b = 1.0 - 1.0 / a

    def one(sv, uv):
        r = sv ** (-1.0 / b)
        return r * _kanter(uv * r, b)

    out = np.vectorize(one, otypes=[float])(s_arr, u_arr)
    return out if out.ndim else float(out)


# mark density -------------------------------------------------------------------------

def _delta(alpha, n_vertices, k):
    return k - (1 - 1 / alpha) * n_vertices - 1 / alpha


def _mark_args(skeleton, alpha, k):
    t, k = _check_skeleton(skeleton, k)
    a = float(alpha)
    if not 1 < a < 2:
        raise ValueError("mark density needs 1 < alpha < 2")
    if k < 2:
        raise ValueError("mark density needs k >= 2")
    n = t.size
    d = _delta(a, n, k)
    if d <= 0:
        raise ValueError(f"delta = {d} <= 0 for skeleton {t}")
    return t, k, a, n, d


def _density_of_sum(S, a, n, k, d):
    # density of the marks at any point whose coordinates sum to S
    logc = gammaln(k - 1 / a) - gammaln(d) + n * math.log(a)
    if S == 0:
        return math.exp(logc)
    s = a * S
    f = lambda u: subordinator_density_q(a, s, 1.0 - u) if u < 1.0 else 0.0
    val, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(d - 1.0, 0.0),
                            epsabs=1e-14, epsrel=1e-10, limit=200)
    return math.exp(logc) * val


def mark_density(skeleton, marks, alpha, k=None):
    """Joint density of the lifetimes given the skeleton.

    ``Gamma(k - 1/a) / Gamma(delta) a^|tau| int_0^1 u^(delta-1) q(a sum h, 1-u) du``
    with ``delta = k - (1 - 1/a)|tau| - 1/a``.  The weight ``u^(delta-1)`` is
    handled by an algebraic-weight quadrature rule.
    """
    t, k, a, n, d = _mark_args(skeleton, alpha, k)
    h = np.asarray(marks, dtype=float).reshape(-1)
    if h.shape[0] != n:
        raise ValueError(f"expected {n} marks")
    if np.any(h < 0):
        return 0.0
    return _density_of_sum(float(h.sum()), a, n, k, d)


def mark_sum_density(skeleton, alpha, k=None):
    """Density of the total lifetime: ``S^(n-1)/(n-1)! * f(S)`` as a callable."""
    t, k, a, n, d = _mark_args(skeleton, alpha, k)
    lf = math.lgamma(n)

    def g(S):
        if S <= 0:
            return 0.0
        return math.exp((n - 1) * math.log(S) - lf) * _density_of_sum(S, a, n, k, d)

    return g


def mark_normalization(skeleton, alpha, k=None, scale=1.0, upper=np.inf):
    """Total mass of the mark density (scaled by ``c^-n f(h/c)`` when scale = c)."""
    g = mark_sum_density(skeleton, alpha, k)
    # the total of c*h has density g(S/c)/c
    f = lambda S: g(S / scale) / scale
    val, _ = integrate.quad(f, 0.0, upper, epsabs=1e-10, epsrel=1e-8, limit=200)
    return val


def single_mark_sf(skeleton, alpha, k=None, xs=(0.0,), grid=None):
    """``P(h_v > x)`` for one coordinate (all coordinates share this law).

    Uses ``P(h_v > x) = int_x^inf (S - x)^(n-1)/(n-1)! f(S) dS`` with f
    tabulated on a grid of S.
    """
    t, k, a, n, d = _mark_args(skeleton, alpha, k)
    if grid is None:
        grid = np.concatenate([np.linspace(0, 1, 201)[:-1], np.linspace(1, 12, 441)])
    f = np.array([_density_of_sum(float(S), a, n, k, d) for S in grid])
    out = []
    lf = math.factorial(n - 1)
    for x in np.atleast_1d(xs):
        w = np.clip(grid - x, 0.0, None) ** (n - 1) / lf
        out.append(np.trapezoid(w * f, grid))
    return np.array(out)


# Monte Carlo over conditioned trees ----------------------------------------------------

@dataclass
class SkeletonEstimate:
    """Skeleton frequencies of reduced conditioned trees."""

    k: int
    reps: int
    counts: dict = field(default_factory=dict)

    def freq(self, key):
        return self.counts.get(str(key), 0) / self.reps

    def stderr(self, key):
        f = self.freq(key)
        return math.sqrt(f * (1 - f) / self.reps)

    def interval(self, key, z=1.96):
        """Wilson score interval."""
        n = self.reps
        f = self.freq(key)
        c = (f + z * z / (2 * n)) / (1 + z * z / n)
        r = z * math.sqrt(f * (1 - f) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        return c - r, c + r

    def table(self, alpha):
        """Rows ``(skeleton, closed form, frequency, stderr)``."""
        keys = [str(s) for s in admissible_skeletons(self.k)]
        extra = sorted(set(self.counts) - set(keys))
        rows = []
        for key in keys + extra:
            cf = skeleton_probability(OrderedTree.parse(key), alpha, self.k) if key in keys else 0.0
            rows.append((key, cf, self.freq(key), self.stderr(key)))
        return rows


def sample_reduced_trees(model, p, k, reps, rng, collapse=True, theta_form=False, rescale=True):
    """Yield reduced trees of conditioned trees at k distinct uniform vertices."""
    if not 1 <= k < p:
        raise ValueError("need 1 <= k < p")
    rng = as_rng(rng)
    samp = get_sampler(model, int(p))
    c = model.norming(p) / p if rescale else 1.0
    for _ in range(int(reps)):
        h = _height_from_children(samp.excursion_children(rng))
        pts = rng.choice(p, size=k, replace=False)
        th = _reduced_from_heights(h, pts, theta_form)
        if collapse:
            th = collapse_unary(th)
        yield th.scaled(c) if rescale else th


def mc_skeleton_estimate(model, p, k, reps, rng):
    """Empirical skeleton law of reduced trees (unary vertices collapsed)."""
    est = SkeletonEstimate(int(k), int(reps))
    for th in sample_reduced_trees(model, p, k, reps, rng, rescale=False):
        est.counts[th.key] = est.counts.get(th.key, 0) + 1
    return est


# CRT distance --------------------------------------------------------------------------

def crt_distance(h, s, t):
    """``h(s) + h(t) - 2 inf_[s ^ t, s v t] h``."""
    if isinstance(h, GridPath):
        v = np.asarray(h.values, dtype=float)
        i, j = (int(x) for x in h.index([s, t]))
    else:
        v = np.asarray(h, dtype=float)
        i, j = int(s), int(t)
        if not (0 <= i < v.shape[0] and 0 <= j < v.shape[0]):
            raise IndexError("time outside the path")
    lo, hi = min(i, j), max(i, j)
    return float(v[i] + v[j] - 2 * v[lo:hi + 1].min())
