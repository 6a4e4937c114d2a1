"""Ordered rooted trees and their three codings.

A tree with ``zeta`` vertices is stored as its preorder (lexicographic) list
of children counts ``k_0, ..., k_{zeta-1}``.  That list *is* the
Lukasiewicz path read step by step (step = k - 1), so no other storage is
needed.  From it we derive

* the height process ``H_n = |u(n)|`` on ``0..zeta-1``,
* the contour process on integer times ``0..2(zeta-1)``,
* the Lukasiewicz walk ``W`` on ``0..zeta`` with ``W_zeta = -1``.

Vertices are referred to by their preorder index; ``word(i)`` gives the
Ulam-Harris word (tuple of 1-based child ranks) when needed.
"""
import numpy as np

from ._jit import njit


class OrderedTree:
    """Finite ordered rooted tree, immutable.

    >>> t = OrderedTree([2, 0, 1, 0])
    >>> t.size, str(t)
    (4, '2,0,1,0')
    """

    __slots__ = ("_k", "_key")

    def __init__(self, children_counts):
        k = np.array(children_counts, dtype=np.int64).reshape(-1)
        bad = _first_violation(k)
        if bad >= 0:
            raise ValueError(f"not a valid children-count sequence (index {bad})")
        k.setflags(write=False)
        self._k = k
        self._key = None

    @classmethod
    def parse(cls, text):
        """Inverse of ``str(tree)``: comma separated children counts."""
        parts = [s for s in str(text).replace(" ", "").split(",") if s]
        return cls([int(s) for s in parts])

    @classmethod
    def from_words(cls, words):
        """Build from a prefix-closed set of Ulam-Harris words."""
        ws = sorted({tuple(w) for w in words})
        wset = set(ws)
        if () not in wset:
            raise ValueError("word set must contain the root ()")
        counts = {w: 0 for w in ws}
        for w in ws:
            if not w:
                continue
            if w[:-1] not in wset:
                raise ValueError(f"parent of {w} missing")
            if w[-1] > 1 and w[:-1] + (w[-1] - 1,) not in wset:
                raise ValueError(f"left sibling of {w} missing")
            counts[w[:-1]] = max(counts[w[:-1]], w[-1])
        return cls([counts[w] for w in ws])

    @property
    def children_counts(self):
        return self._k

    @property
    def size(self):
        return int(self._k.shape[0])

    def __len__(self):
        return self.size

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(int(x) for x in self._k)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, OrderedTree):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        return ",".join(str(int(x)) for x in self._k)

    def __repr__(self):
        s = str(self)
        if len(s) > 60:
            s = s[:57] + "..."
        return f"OrderedTree({s})"

    # vertex helpers -----------------------------------------------------
    def parents(self):
        """Parent index of each vertex (-1 for the root)."""
        return _parents(self._k)

    def depths(self):
        return _height_from_children(self._k)

    def leaves(self):
        return np.flatnonzero(self._k == 0)

    def words(self):
        """Ulam-Harris word of every vertex, in preorder."""
        par = self.parents()
        rank = np.zeros(self.size, dtype=np.int64)
        seen = np.zeros(self.size, dtype=np.int64)
        for i in range(1, self.size):
            seen[par[i]] += 1
            rank[i] = seen[par[i]]
        out = [()]
        for i in range(1, self.size):
            out.append(out[par[i]] + (int(rank[i]),))
        return out

    def index_of(self, word):
        word = tuple(word)
        for i, w in enumerate(self.words()):
            if w == word:
                return i
        raise KeyError(word)


# kernels -----------------------------------------------------------------

@njit
def _first_violation(k):
    # Lukasiewicz condition: partial sums of (k_i - 1) stay >= 0 until the
    # last index, where the sum hits -1.
    n = k.shape[0]
    if n == 0:
        return 0
    s = 0
    for i in range(n):
        if k[i] < 0:
            return i
        s += k[i] - 1
        if s < 0 and i < n - 1:
            return i
    if s != -1:
        return n - 1
    return -1


@njit
def _height_from_children(k):
    n = k.shape[0]
    h = np.empty(n, dtype=np.int64)
    left = np.empty(n + 1, dtype=np.int64)  # children still to visit, per depth
    h[0] = 0
    left[0] = k[0]
    top = 1
    for i in range(1, n):
        while left[top - 1] == 0:
            top -= 1
        left[top - 1] -= 1
        h[i] = top
        left[top] = k[i]
        top += 1
    return h


@njit
def _parents(k):
    n = k.shape[0]
    par = np.empty(n, dtype=np.int64)
    left = np.empty(n + 1, dtype=np.int64)
    who = np.empty(n + 1, dtype=np.int64)
    par[0] = -1
    left[0] = k[0]
    who[0] = 0
    top = 1
    for i in range(1, n):
        while left[top - 1] == 0:
            top -= 1
        left[top - 1] -= 1
        par[i] = who[top - 1]
        left[top] = k[i]
        who[top] = i
        top += 1
    return par


@njit
def _children_from_height(h):
    n = h.shape[0]
    k = np.zeros(n, dtype=np.int64)
    last = np.empty(n + 1, dtype=np.int64)  # last vertex seen at each depth
    last[0] = 0
    for i in range(1, n):
        k[last[h[i] - 1]] += 1
        last[h[i]] = i
    return k


@njit
def _check_height(h):
    n = h.shape[0]
    if n == 0 or h[0] != 0:
        return 0
    for i in range(1, n):
        if h[i] < 1 or h[i] > h[i - 1] + 1:
            return i
    return -1


@njit
def _contour_from_height(h):
    # two-branch formula with b_n = 2n - H_n
    z = h.shape[0]
    m = 2 * (z - 1)
    c = np.empty(m + 1, dtype=np.int64)
    for n in range(z):
        bn = 2 * n - h[n]
        if n + 1 < z:
            hn1 = h[n + 1]
            bn1 = 2 * (n + 1) - hn1
        else:
            hn1 = 0
            bn1 = m
        for t in range(bn, bn1):
            if t < bn1 - 1 or n + 1 == z:
                c[t] = h[n] - (t - bn)
            else:
                c[t] = t - bn1 + hn1
    c[m] = 0
    return c


@njit
def _contour_from_leaves(k):
    # independent route: walk between consecutive leaf heights and the
    # heights of their common ancestors, slope +-1
    n = k.shape[0]
    par = _parents(k)
    dep = _height_from_children(k)
    c = np.empty(2 * (n - 1) + 1, dtype=np.int64)
    c[0] = 0
    pos = 0
    cur = 0
    prev = -1
    for v in range(n):
        if k[v] != 0:
            continue
        if prev >= 0:
            a = prev
            b = v
            while dep[a] > dep[b]:
                a = par[a]
            while dep[b] > dep[a]:
                b = par[b]
            while a != b:
                a = par[a]
                b = par[b]
            target = dep[a]
            while cur > target:
                cur -= 1
                pos += 1
                c[pos] = cur
        target = dep[v]
        while cur < target:
            cur += 1
            pos += 1
            c[pos] = cur
        prev = v
    while cur > 0:
        cur -= 1
        pos += 1
        c[pos] = cur
    return c


# public functions ---------------------------------------------------------

def _tree(t):
    return t if isinstance(t, OrderedTree) else OrderedTree(t)


def height_process(tree):
    """``H_n`` for n in ``0..size-1`` as an int64 array."""
    return _height_from_children(_tree(tree).children_counts)


def check_height_sequence(h):
    h = np.asarray(h, dtype=np.int64)
    bad = _check_height(h)
    if bad >= 0:
        raise ValueError(f"invalid height sequence at index {bad}")
    return h


def tree_from_height(h):
    """Inverse of :func:`height_process`; raises ValueError on bad input."""
    h = check_height_sequence(h)
    return OrderedTree(_children_from_height(h))


def contour_process(tree):
    """Contour at integer times ``0..2(size-1)``, from leaf heights."""
    return _contour_from_leaves(_tree(tree).children_counts)


def contour_from_height(h):
    """Contour from the height sequence via the two-branch formula."""
    return _contour_from_height(check_height_sequence(h))


def lukasiewicz_walk(tree):
    """``W_0..W_zeta`` with steps ``k_n - 1``; ends at -1."""
    k = _tree(tree).children_counts
    w = np.zeros(k.shape[0] + 1, dtype=np.int64)
    np.cumsum(k - 1, out=w[1:])
    return w


def tree_from_walk(w):
    """Rebuild the tree from its Lukasiewicz walk (children = steps + 1)."""
    w = np.asarray(w, dtype=np.int64).reshape(-1)
    if w.shape[0] < 2 or w[0] != 0:
        raise ValueError("walk must start at 0 and have lifetime >= 1")
    steps = np.diff(w)
    if np.any(steps < -1):
        raise ValueError(f"step below -1 at index {int(np.argmax(steps < -1))}")
    hit = np.flatnonzero(w < 0)
    if hit.size == 0 or w[-1] != -1 or hit[0] != w.shape[0] - 1:
        raise ValueError("walk must first reach -1 at its lifetime")
    return OrderedTree(steps + 1)


def common_ancestor(tree, u, v):
    """Preorder index of the most recent common ancestor of u and v."""
    t = _tree(tree)
    par = t.parents()
    dep = t.depths()
    a, b = int(u), int(v)
    while dep[a] > dep[b]:
        a = par[a]
    while dep[b] > dep[a]:
        b = par[b]
    while a != b:
        a, b = par[a], par[b]
    return int(a)


def concat_trees(trees):
    """Graft the given trees, in order, under a new root."""
    ts = [_tree(t) for t in trees]
    parts = [np.array([len(ts)], dtype=np.int64)] + [t.children_counts for t in ts]
    return OrderedTree(np.concatenate(parts))


def forest_encode(forest):
    """Concatenated height and Lukasiewicz processes of a forest.

    W hits ``-j`` for the first time right after tree j has finished, and the
    returned walk has length ``total + 1`` with final value ``-len(forest)``.
    """
    ts = [_tree(t) for t in forest]
    if not ts:
        raise ValueError("empty forest")
    hs = [height_process(t) for t in ts]
    ws = []
    for j, t in enumerate(ts):
        ws.append(lukasiewicz_walk(t)[:-1] - j)
    ws.append(np.array([-len(ts)], dtype=np.int64))
    return np.concatenate(hs), np.concatenate(ws)


FIGURE_ONE_TREE = OrderedTree([2, 2, 0, 2, 0, 0, 0])
"""Small 7-vertex example used throughout the docs and tests."""
