"""Exhaustive enumeration with exact rational weights.

Ground truth for the combinatorial identities.  Everything here uses
``fractions.Fraction``; no floats are compared and no sampler is called.
Laws are compared atom by atom on canonical keys (nested tuples of ints),
so the comparison does not depend on enumeration order.

Identity names used in reports:

``otter``          p P(zeta = p) = P(W_p = -1)
``walk-height``    height read off the conditioned walk vs tree height
``vervaat``        V0 pushes the bridge law to the excursion law
``joint-vervaat``  (V0(W), V0(H(W) + M)) under the bridge law vs (W, H(W))
                   under the excursion law
``uniform``        geometric offspring: conditioned law uniform on trees
``bookkeeping``    the two height/ladder identities for all (n, m)
"""
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from ._jit import njit
from .offspring import walk_law_table
from .paths import (
    LatticePath,
    _kbeta_rev,
    _kheight_into,
    _kladder_into,
    _kreverse_into,
    height_from_walk,
    m_process,
    vervaat_discrete,
)
from .trees import OrderedTree, height_process

TREE_P_MAX = 12
PATH_P_MAX = 10


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def canon(x):
    """Canonical hashable key: nested tuples of ints."""
    if isinstance(x, OrderedTree):
        return x.key
    if isinstance(x, LatticePath):
        return tuple(int(v) for v in x.values)
    if isinstance(x, np.ndarray):
        return tuple(int(v) for v in x.tolist())
    if isinstance(x, (tuple, list)):
        return tuple(canon(v) for v in x)
    return int(x)


@dataclass
class WeightedEnsemble:
    """Atoms with exact probabilities; ``normalization`` is the raw mass."""

    items: list
    normalization: Fraction = Fraction(1)

    def __post_init__(self):
        if any(w < 0 for _, w in self.items):
            raise ValueError("negative weight")

    @property
    def total(self):
        return sum((w for _, w in self.items), Fraction(0))

    def __len__(self):
        return len(self.items)

    def law(self, f=None):
        """``{canonical key: probability}`` of the image under f."""
        out = {}
        for obj, w in self.items:
            key = canon(f(obj) if f is not None else obj)
            out[key] = out.get(key, Fraction(0)) + w
        return out

    def pushforward(self, f):
        return WeightedEnsemble(sorted(self.law(f).items()), self.normalization)


def mismatches(law_a, law_b):
    """Atoms where two laws differ, as ``(key, weight_a, weight_b)``."""
    out = []
    for key in sorted(set(law_a) | set(law_b)):
        a = law_a.get(key, Fraction(0))
        b = law_b.get(key, Fraction(0))
        if a != b:
            out.append((key, a, b))
    return out


# enumeration -----------------------------------------------------------------

def _require_exact(model):
    if not model.exact:
        raise ValueError(f"exact enumeration needs a rational pmf, not {model}")


def enumerate_trees(p):
    """All ordered rooted trees with p vertices, in lexicographic order."""
    if not 1 <= p <= TREE_P_MAX:
        raise ValueError(f"p must lie in [1, {TREE_P_MAX}]")
    out = []
    seq = []

    def rec(slots, left):
        # slots: vertices announced but not yet visited; left: vertices to place
        if left == 0:
            if slots == 0:
                out.append(OrderedTree(seq))
            return
        for k in range(0, left):
            ns = slots - 1 + k
            if ns > left - 1 or (ns == 0 and left > 1):
                continue
            seq.append(k)
            rec(ns, left - 1)
            seq.pop()

    rec(1, p)
    return out


def _weight(model, counts):
    w = Fraction(1)
    for k, c in Counter(int(x) for x in counts).items():
        w *= model.pmf_exact(k) ** c
    return w


def tree_ensemble(model, p):
    """Trees of size p with the law ``P_mu(. | zeta = p)``."""
    _require_exact(model)
    raw = [(t, _weight(model, t.children_counts)) for t in enumerate_trees(p)]
    raw = [(t, w) for t, w in raw if w]
    z = sum((w for _, w in raw), Fraction(0))
    if z == 0:
        raise ValueError(f"P(zeta = {p}) = 0")
    return WeightedEnsemble([(t, w / z) for t, w in raw], z)


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _path(steps):
    w = np.zeros(len(steps) + 1, dtype=np.int64)
    np.cumsum(steps, out=w[1:])
    return LatticePath(w)


def enumerate_bridge_paths(model, p):
    """Skip-free paths with ``w(p) = -1`` weighted by ``P(. | W_p = -1)``.

    The steps ``s_i + 1`` form a composition of p - 1, so no step exceeds
    p - 2 and the enumeration is exact.
    """
    _require_exact(model)
    if not 1 <= p <= PATH_P_MAX:
        raise ValueError(f"p must lie in [1, {PATH_P_MAX}]")
    raw = []
    for c in _compositions(p - 1, p):
        w = _weight(model, c)
        if w:
            raw.append((_path([x - 1 for x in c]), w))
    z = sum((w for _, w in raw), Fraction(0))
    if z == 0:
        raise ValueError(f"P(W_{p} = -1) = 0")
    return WeightedEnsemble([(x, w / z) for x, w in raw], z)


def enumerate_excursion_paths(model, p):
    """Paths staying >= 0 before time p with ``w(p) = -1``, law ``P(. | zeta = p)``."""
    _require_exact(model)
    if not 1 <= p <= PATH_P_MAX:
        raise ValueError(f"p must lie in [1, {PATH_P_MAX}]")
    raw = []
    for c in _compositions(p - 1, p):
        s = np.cumsum(np.array(c, dtype=np.int64) - 1)
        if np.all(s[:-1] >= 0):
            w = _weight(model, c)
            if w:
                raw.append((_path([x - 1 for x in c]), w))
    z = sum((w for _, w in raw), Fraction(0))
    if z == 0:
        raise ValueError(f"P(zeta = {p}) = 0")
    return WeightedEnsemble([(x, w / z) for x, w in raw], z)


def _partitions(n, parts, top=None):
    # multisets of `parts` nonnegative integers summing to n, nonincreasing
    if top is None:
        top = n
    if parts == 0:
        if n == 0:
            yield ()
        return
    for first in range(min(n, top), -1, -1):
        if first * parts < n:
            break
        for rest in _partitions(n - first, parts - 1, first):
            yield (first,) + rest


def bridge_mass(model, p):
    """``P(W_p = -1)`` in closed combinatorial form (sum over step multisets)."""
    _require_exact(model)
    tot = Fraction(0)
    for part in _partitions(p - 1, p):
        cnt = Counter(part)
        mult = factorial(p)
        for c in cnt.values():
            mult //= factorial(c)
        tot += mult * _weight(model, part)
    return tot


# bookkeeping sweep -------------------------------------------------------------

@njit
def _bookkeeping_kernel(z, smin, smax):
    steps = np.full(max(z, 1), smin, dtype=np.int64)
    w = np.zeros(z + 1, dtype=np.int64)
    h = np.empty(z + 1, dtype=np.int64)
    hs = np.empty(z + 1, dtype=np.int64)
    st = np.empty(z + 1, dtype=np.int64)
    rev = np.empty(z + 1, dtype=np.int64)
    lad = np.empty(z + 1, dtype=np.int64)
    bad_path = np.zeros(z + 1, dtype=np.int64)
    paths = 0
    checks = 0
    bad = 0
    while True:
        for i in range(z):
            w[i + 1] = w[i] + steps[i]
        paths += 1
        _kheight_into(w, 0, h, st)
        for n in range(z + 1):
            _kreverse_into(w, n, rev)
            _kladder_into(rev, n, lad)
            _kheight_into(w, n, hs, st)
            lo = h[n]
            for m in range(z - n + 1):
                if h[n + m] < lo:
                    lo = h[n + m]
                b = _kbeta_rev(w, n, m, rev)
                checks += 1
                if h[n + m] - lo != hs[m] or lo != lad[n] - lad[b]:
                    if bad == 0:
                        bad_path[:] = w
                    bad += 1
        i = 0
        while i < z and steps[i] == smax:
            steps[i] = smin
            i += 1
        if i >= z:
            break
        steps[i] += 1
    return paths, checks, bad, bad_path


def bookkeeping_sweep(zmax=10, full_upto=7, step_cap=3):
    """Check both bookkeeping identities on every path in the sweep.

    Lifetimes ``z <= full_upto`` use every step in ``-1..z``: the identities
    only depend on the order relations between path values, and capping an
    up-step at z does not change any of them, so this covers all skip-free
    paths of that lifetime.  Longer lifetimes use steps in ``-1..step_cap``.
    Returns a list of ``(z, step_max, paths, checks, failures, first_bad)``.
    """
    rows = []
    for z in range(zmax + 1):
        smax = max(z, 0) if z <= full_upto else step_cap
        paths, checks, bad, path = _bookkeeping_kernel(z, -1, smax)
        rows.append((z, smax, int(paths), int(checks), int(bad), path.tolist() if bad else None))
    return rows


# identity verification -----------------------------------------------------------

@dataclass
class IdentityRow:
    identity: str
    p: int
    atoms: int
    ok: bool
    mismatches: list = field(default_factory=list)
    detail: str = ""


@dataclass
class IdentityReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self):
        return all(r.ok for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r.ok]

    def table(self):
        lines = [f"{'identity':<14} {'p':>3} {'atoms':>7}  result"]
        for r in self.rows:
            lines.append(f"{r.identity:<14} {r.p:>3} {r.atoms:>7}  {'pass' if r.ok else 'FAIL'}"
                         + (f"  {r.detail}" if r.detail else ""))
            for key, a, b in r.mismatches[:5]:
                lines.append(f"    atom {key}: {a} vs {b}")
        return "\n".join(lines)


def _padded_height(w):
    # H of the excursion path w(0..p); H_p = 0 automatically since w(p) = -1
    return height_from_walk(w)


def verify_identities(model, p_max=8, otter_max=12, identities=None, vervaat=None):
    """Run the exact identities for ``p = 1..p_max`` (Otter up to ``otter_max``).

    ``vervaat`` replaces the discrete Vervaat transform (used for mutation
    tests: a broken transform must produce mismatching atoms).
    """
    _require_exact(model)
    names = identities or ["otter", "walk-height", "vervaat", "joint-vervaat", "uniform"]
    V = vervaat or (lambda w: vervaat_discrete(w))
    rep = IdentityReport()
    trees = {}

    def tens(p):
        if p not in trees:
            trees[p] = tree_ensemble(model, p)
        return trees[p]

    if "otter" in names:
        for p in range(1, otter_max + 1):
            lhs = p * tens(p).normalization * 1
            rhs = bridge_mass(model, p)
            tab = walk_law_table(model, p, "exact", kmax=-1).prob(p, -1)
            ok = lhs == rhs == tab
            rep.rows.append(IdentityRow("otter", p, 1, ok, [] if ok else [("P", lhs, rhs)],
                                        f"{rhs}"))
    for p in range(1, p_max + 1):
        if "walk-height" in names:
            exc = enumerate_excursion_paths(model, p)
            a = exc.law(lambda w: _padded_height(w)[:p])
            b = tens(p).law(height_process)
            mm = mismatches(a, b)
            rep.rows.append(IdentityRow("walk-height", p, len(b), not mm, mm))
        if "vervaat" in names or "joint-vervaat" in names:
            br = enumerate_bridge_paths(model, p)
            exc = enumerate_excursion_paths(model, p)
            if "vervaat" in names:
                a = br.law(V)
                b = exc.law()
                mm = mismatches(a, b)
                rep.rows.append(IdentityRow("vervaat", p, len(br), not mm, mm))
            if "joint-vervaat" in names:
                def joint(w):
                    hm = height_from_walk(w) + m_process(w)
                    return (V(w), V(hm))
                a = br.law(joint)
                b = exc.law(lambda w: (w, _padded_height(w)))
                mm = mismatches(a, b)
                rep.rows.append(IdentityRow("joint-vervaat", p, len(br), not mm, mm))
        if "uniform" in names and model.family == "geometric" and p <= 7:
            ens = tens(p)
            target = Fraction(1, catalan(p - 1))
            bad = [(t.key, w, target) for t, w in ens.items if w != target]
            ok = not bad and len(ens) == catalan(p - 1)
            rep.rows.append(IdentityRow("uniform", p, len(ens), ok, bad))
    if "bookkeeping" in names:
        for z, smax, paths, checks, bad, path in bookkeeping_sweep():
            rep.rows.append(IdentityRow("bookkeeping", z, paths, bad == 0,
                                        [] if not bad else [(tuple(path), bad, 0)],
                                        f"steps<= {smax}, {checks} (n,m) pairs"))
    return rep
