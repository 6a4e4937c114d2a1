"""Galton-Watson trees conditioned on their total progeny.

Exact sampling goes through the random-walk bridge: draw the Lukasiewicz
steps conditioned on ``W_p = -1``, rotate them cyclically at the first
minimum (discrete Vervaat transform), read the tree off the rotated walk.

Two bridge samplers are provided.

``dp``
    backward sampling from the table ``f(m, k) = P(W_m = k)``:
    at time k the step s is picked with probability
    ``nu(s) f(p-k-1, -1-W_k-s) / f(p-k, -1-W_k)``.  O(p^2) per draw plus an
    O(p^3) table, so it is meant for small p.
``renewal``
    in a bridge, the positions of the leaves (k = 0) form a uniform subset
    and the non-zero counts, read in order, are i.i.d. with law
    mu(. | k >= 1), weighted by a Binomial(p, 1 - mu(0)) probability for
    how many of them there are.  So: draw non-zero counts one after the
    other until their sum reaches p - 1, reject if it overshoots, accept
    with probability ``Bin(r) / max Bin`` where r is the number drawn, and
    finally scatter the r values among p slots uniformly.  Values >= p
    cannot occur in an accepted draw, so the pmf is restricted to
    ``0..p-1``.  Each attempt costs O(p) alias-table draws and only a few
    attempts are needed (about 3 for the geometric law, 10-15 for
    alpha = 1.5 at p ~ 10^4).

``auto`` uses ``dp`` for p <= 128 and ``renewal`` above.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.stats import binom

from ._jit import njit
from .offspring import walk_law_table
from .paths import LatticePath, _kheight, _km, _kvervaat
from .rng import as_rng
from .trees import OrderedTree, _contour_from_height, _height_from_children

DP_MAX_P = 128


class TruncatedTree(RuntimeError):
    """Unconditioned tree grew past ``max_size``."""


class RejectionExhausted(RuntimeError):
    def __init__(self, tries, p):
        super().__init__(f"no tree of size {p} in {tries} tries")
        self.tries = tries


class InfeasibleConditioning(ValueError):
    pass


# kernels -----------------------------------------------------------------

@njit
def _gw_children(cdf, max_size, rng):
    # preorder expansion; returns (children, size) with size -1 if capped.
    # mass past the end of the table counts as an overflow
    k = np.empty(max_size, dtype=np.int64)
    slots = 1
    i = 0
    top = cdf.shape[0]
    while slots > 0:
        if i >= max_size:
            return k, -1
        c = np.searchsorted(cdf, rng.random(), side="right")
        if c >= top:
            return k, -1
        k[i] = c
        slots += c - 1
        i += 1
    return k, i


@njit
def _gw_rejection(cdf, p, max_tries, rng):
    for t in range(max_tries):
        # more than p - 1 children cannot occur in a size-p tree, so an
        # overflow is just another rejected draw
        k, n = _gw_children(cdf, p, rng)
        if n == p:
            return k, t + 1
    return k, -1


@njit
def _shuffle(a, rng):
    for i in range(a.shape[0] - 1, 0, -1):
        j = rng.integers(0, i + 1)
        t = a[i]
        a[i] = a[j]
        a[j] = t


@njit
def _bridge_renewal(prob, alias, accept, p, max_trials, rng):
    # prob/alias: Walker table of mu(. | k >= 1) on 1..p-1
    target = p - 1
    ys = np.empty(p, dtype=np.int64)
    nb = prob.shape[0]
    for trial in range(max_trials):
        s = 0
        r = 0
        while s < target:
            u = rng.random() * nb
            c = int(u)
            if c >= nb:
                c = nb - 1
            if u - c >= prob[c]:
                c = alias[c]
            s += c + 1
            ys[r] = c + 1
            r += 1
        if s != target:
            continue
        if rng.random() >= accept[r]:
            continue
        out = np.zeros(p, dtype=np.int64)
        out[:r] = ys[:r]
        _shuffle(out, rng)
        return out, trial + 1
    return np.empty(0, dtype=np.int64), -1


@njit
def _bridge_dp(F, nu, p, rng):
    # F[m, k + m] = P(W_m = k) on k in [-m, p-1-m]
    k = np.empty(p, dtype=np.int64)
    w = 0
    for step in range(p):
        m = p - step
        j = -1 - w
        total = F[m, j + m]
        u = rng.random() * total
        acc = 0.0
        smax = j + m - 1
        chosen = -2
        last = -2
        for s in range(-1, smax + 1):
            x = nu[s + 1] * F[m - 1, j - s + m - 1]
            if x > 0.0:
                last = s
                acc += x
                if u < acc:
                    chosen = s
                    break
        if chosen == -2:
            chosen = last
        k[step] = chosen + 1
        w += chosen
    return k


@njit
def _vervaat_children(k):
    # rotate the bridge steps at the first minimum of the walk
    p = k.shape[0]
    w = 0
    low = 0
    g = 0
    for i in range(p):
        w += k[i] - 1
        if w < low:
            low = w
            g = i + 1
    g = g % p
    out = np.empty(p, dtype=np.int64)
    for i in range(p):
        out[i] = k[(g + i) % p]
    return out


@njit
def _draw_bridge(method, prob, alias, accept, F, nu, p, max_trials, rng):
    if method == 0:
        return _bridge_dp(F, nu, p, rng), 1
    return _bridge_renewal(prob, alias, accept, p, max_trials, rng)


@njit
def _contour_gap(h):
    # sup_t |C_{2pt} - H_[pt]| on the padded contour, in raw units
    p = h.shape[0]
    c = _contour_from_height(h)
    m = c.shape[0]
    best = 0
    for n in range(p):
        for d in range(3):
            t = 2 * n + d
            ct = c[t] if t < m else 0
            g = abs(ct - h[n])
            if g > best:
                best = g
    return best


@njit
def _height_batch(method, prob, alias, accept, F, nu, p, max_trials, reps, idx, rng):
    out = np.empty((reps, idx.shape[0]), dtype=np.int64)
    gap = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        kb, t = _draw_bridge(method, prob, alias, accept, F, nu, p, max_trials, rng)
        if t < 0:
            raise RuntimeError("bridge sampler exhausted its attempt budget")
        h = _height_from_children(_vervaat_children(kb))
        for i in range(idx.shape[0]):
            out[r, i] = h[idx[i]] if idx[i] < p else 0
        gap[r] = _contour_gap(h)
    return out, gap


# sampler objects -----------------------------------------------------------

def _feasible(model, p):
    """Can p values from the support of mu sum to p - 1?"""
    if p == 1:
        return True
    mu = model.pmf(p - 1)
    if mu[p - 1] > 0:
        return True
    sup = [j for j in range(1, p) if mu[j] > 0]
    if not sup:
        return False
    best = np.full(p, np.iinfo(np.int64).max // 2, dtype=np.int64)
    best[0] = 0
    for s in range(1, p):
        for j in sup:
            if j > s:
                break
            if best[s - j] + 1 < best[s]:
                best[s] = best[s - j] + 1
    return best[p - 1] <= p


def alias_table(weights):
    """Walker alias table ``(prob, alias)`` for sampling index i ~ weights."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    prob = w * (n / w.sum())
    alias = np.arange(n, dtype=np.int64)
    small = list(np.flatnonzero(prob < 1.0))
    large = list(np.flatnonzero(prob >= 1.0))
    while small and large:
        s, l = small.pop(), large.pop()
        alias[s] = l
        prob[l] -= 1.0 - prob[s]
        (small if prob[l] < 1.0 else large).append(l)
    for i in small + large:
        prob[i] = 1.0
    return prob, alias


class BridgeSampler:
    """Precomputed state for drawing bridges of length p under a model."""

    def __init__(self, model, p, method="auto", max_trials=10**9):
        p = int(p)
        if p < 1:
            raise ValueError("p must be >= 1")
        if not _feasible(model, p):
            raise InfeasibleConditioning(f"P(W_p = -1) = 0 for p = {p} under {model}")
        if method == "auto":
            method = "dp" if p <= DP_MAX_P else "renewal"
        if method not in ("dp", "renewal"):
            raise ValueError(method)
        self.model, self.p, self.method = model, p, method
        self.max_trials = int(max_trials)
        self.norming = model.norming(p)
        e1, ei, e2 = np.zeros(1), np.zeros(1, dtype=np.int64), np.zeros((1, 1))
        if method == "dp":
            tab = walk_law_table(model, p, "float", kmax=-1)
            F = np.zeros((p + 1, p + 1))
            for m, row in enumerate(tab.rows):
                F[m, :row.size] = row
            self._args = (0, e1, ei, e1, F, model.pmf(p), p)
        else:
            mu = model.pmf(p - 1)
            q = mu / mu.sum()
            if p > 1:
                prob, alias = alias_table(q[1:])
            else:
                prob, alias = np.ones(1), np.zeros(1, dtype=np.int64)
            lp = binom.logpmf(np.arange(p + 1), p, 1.0 - q[0])
            accept = np.exp(lp - lp.max())
            self._args = (1, prob, alias, accept, e2, e1, p)

    def bridge_children(self, rng):
        rng = as_rng(rng)
        k, t = _draw_bridge(*self._args, self.max_trials, rng)
        if t < 0:
            raise RuntimeError(f"no bridge accepted in {self.max_trials} attempts")
        return k

    def excursion_children(self, rng):
        return _vervaat_children(self.bridge_children(rng))

    def heights(self, reps, idx, rng):
        idx = np.asarray(idx, dtype=np.int64)
        return _height_batch(*self._args, self.max_trials, int(reps), idx, as_rng(rng))


@lru_cache(maxsize=32)
def get_sampler(model, p, method="auto"):
    return BridgeSampler(model, p, method)


# public API ----------------------------------------------------------------

def sample_gw_tree(model, rng, max_size=10**6):
    """Unconditioned Galton-Watson tree; raises TruncatedTree past the cap."""
    max_size = int(max_size)
    mu = model.pmf(min(max_size, model.cutoff()))
    k, n = _gw_children(np.cumsum(mu), max_size, as_rng(rng))
    if n < 0:
        raise TruncatedTree(f"tree exceeded {max_size} vertices")
    return OrderedTree(k[:n])


def sample_bridge_walk(model, p, rng, method="auto"):
    """Walk with ``W_p = -1`` drawn from ``P(. | W_p = -1)``."""
    k = get_sampler(model, int(p), method).bridge_children(rng)
    w = np.zeros(k.shape[0] + 1, dtype=np.int64)
    np.cumsum(k - 1, out=w[1:])
    return LatticePath(w)


def sample_conditioned_tree(model, p, rng, method="auto"):
    """Tree with law ``P_mu(. | zeta = p)``."""
    return OrderedTree(get_sampler(model, int(p), method).excursion_children(rng))


def sample_conditioned_tree_rejection(model, p, rng, max_tries=10**7):
    """Independent check: redraw unconditioned trees until the size is p."""
    if not _feasible(model, int(p)):
        raise InfeasibleConditioning(f"P(zeta = p) = 0 for p = {p}")
    cdf = np.cumsum(model.pmf(int(p)))
    k, t = _gw_rejection(cdf, int(p), int(max_tries), as_rng(rng))
    if t < 0:
        raise RejectionExhausted(max_tries, p)
    return OrderedTree(k[:p])


def bridge_path_probability(model, path):
    """Probability the ``dp`` sampler assigns to a given bridge path."""
    w = np.asarray(path, dtype=np.int64)
    p = w.shape[0] - 1
    tab = walk_law_table(model, p, "float", kmax=-1)
    nu = model.pmf(p)
    prob = 1.0
    for step in range(p):
        m = p - step
        j = -1 - w[step]
        s = w[step + 1] - w[step]
        num = nu[s + 1] * tab.prob(m - 1, j - s) if s + 1 < nu.size else 0.0
        prob *= num / tab.prob(m, j)
    return prob


@dataclass
class RescaledBundle:
    """One conditioned sample with all of its codings.

    ``height`` and ``excursion_walk`` follow the padding conventions
    ``H_p = 0`` and ``W_p = -1``; ``contour`` has length 2p + 1 with zeros
    on ``[2p-2, 2p]``.
    """

    p: int
    norming: float
    bridge_walk: np.ndarray
    m: np.ndarray
    bridge_height: np.ndarray
    excursion_walk: np.ndarray
    height: np.ndarray
    contour: np.ndarray

    @property
    def walk_scale(self):
        return 1.0 / self.norming

    @property
    def height_scale(self):
        return self.norming / self.p

    def tree(self):
        return OrderedTree(np.diff(self.excursion_walk) + 1)

    def height_at(self, t):
        """``(a_p / p) H_[pt]`` for t in [0, 1]."""
        t = np.asarray(t, dtype=float)
        idx = np.minimum(np.floor(self.p * t).astype(np.int64), self.p)
        return self.height_scale * self.height[idx]

    def contour_at(self, t):
        """``(a_p / p) C_{2pt}`` (linear interpolation) for t in [0, 1]."""
        s = 2.0 * self.p * np.asarray(t, dtype=float)
        grid = np.arange(self.contour.shape[0])
        return self.height_scale * np.interp(s, grid, self.contour)

    def walk_at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.minimum(np.floor(self.p * t).astype(np.int64), self.p)
        return self.walk_scale * self.excursion_walk[idx]

    def contour_gap(self):
        return self.height_scale * _contour_gap(self.height[:-1])


def rescaled_bundle(model, p, rng, method="auto"):
    p = int(p)
    kb = get_sampler(model, p, method).bridge_children(rng)
    wb = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(kb - 1, out=wb[1:])
    hb = _kheight(wb)
    m = _km(wb)
    we = _kvervaat(wb)
    ke = np.diff(we) + 1
    h = np.zeros(p + 1, dtype=np.int64)
    h[:p] = _height_from_children(ke)
    c = np.zeros(2 * p + 1, dtype=np.int64)
    c[:2 * p - 1] = _contour_from_height(h[:p])
    return RescaledBundle(p, model.norming(p), wb, m, hb, we, h, c)
