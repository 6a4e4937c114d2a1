from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from gwcrt import paths as P
from gwcrt import trees as T
from gwcrt.oracle import catalan, enumerate_bridge_paths, enumerate_trees, tree_ensemble
from gwcrt.rng import make_rng
from gwcrt.sampler import (InfeasibleConditioning, RejectionExhausted, TruncatedTree,
                           bridge_path_probability, get_sampler, rescaled_bundle,
                           sample_bridge_walk, sample_conditioned_tree,
                           sample_conditioned_tree_rejection, sample_gw_tree)
from gwcrt.offspring import table_offspring
from gwcrt.stats import chi2_gof, chi2_uniform, tv_distance


def test_gw_tree_small_sizes(geo, rng):
    n = 100_000

    def size(cap=1000):
        try:
            return sample_gw_tree(geo, rng, max_size=cap).size
        except TruncatedTree:
            return cap + 1
    sizes = np.array([size() for _ in range(n)])
    f1 = np.mean(sizes == 1)
    assert abs(f1 - 0.5) < 3 * np.sqrt(0.25 / n)
    f2 = np.mean(sizes == 2)
    assert abs(f2 - 1 / 8) < 3 * np.sqrt(f2 * (1 - f2) / n) + 1e-3


def test_gw_tree_deterministic_and_truncated(geo):
    a = [str(sample_gw_tree(geo, make_rng(7, i))) for i in range(50)]
    b = [str(sample_gw_tree(geo, make_rng(7, i))) for i in range(50)]
    assert a == b
    with pytest.raises(TruncatedTree):
        for i in range(1000):
            sample_gw_tree(geo, make_rng(3, i), max_size=3)


def test_bridge_walk_basics(geo, st15, rng):
    assert np.array_equal(sample_bridge_walk(geo, 1, rng).values, [0, -1])
    for m in (geo, st15):
        for p in (3, 7, 64, 129, 1000):
            w = sample_bridge_walk(m, p, rng)
            assert w.values[-1] == -1 and w.lifetime == p and w.skip_free
    # mu(1) = 0: no tree with two vertices
    with pytest.raises(InfeasibleConditioning):
        sample_bridge_walk(st15, 2, rng)


def test_bridge_probabilities_match_oracle(geo):
    for p in range(1, 9):
        ens = enumerate_bridge_paths(geo, p)
        for path, wt in ens.items:
            assert abs(bridge_path_probability(geo, path.values) - float(wt)) < 1e-12


@pytest.mark.parametrize("method", ["dp", "renewal"])
def test_bridge_law_chi2(geo, method):
    p, n = 5, 100_000
    ens = enumerate_bridge_paths(geo, p)
    keys = [tuple(int(x) for x in path.values) for path, _ in ens.items]
    probs = [float(wt) for _, wt in ens.items]
    samp = get_sampler(geo, p, method)
    rng = make_rng(11, p, len(method))
    c = Counter()
    for _ in range(n):
        k = samp.bridge_children(rng)
        c[tuple(np.concatenate([[0], np.cumsum(k - 1)]).tolist())] += 1
    assert set(c) <= set(keys)
    _, pv = chi2_gof([c[k] for k in keys], probs)
    assert pv > 0.01


def test_conditioned_tree_p3(geo, rng):
    assert str(sample_conditioned_tree(geo, 1, rng)) == "0"
    c = Counter(str(sample_conditioned_tree(geo, 3, rng)) for _ in range(100_000))
    assert set(c) == {"1,1,0", "2,0,0"}
    _, pv = chi2_uniform(list(c.values()))
    assert pv > 0.01


def test_conditioned_tree_matches_oracle_stable(st15):
    # non-uniform law: exact conditioned weights are not available in
    # rationals, so compare with float weights from the oracle recursion
    p, n = 6, 100_000
    rng = make_rng(12, 6)
    c = Counter(str(sample_conditioned_tree(st15, p, rng)) for _ in range(n))
    mu = st15.pmf(p)
    trees = enumerate_trees(p)
    w = np.array([np.prod([mu[k] for k in t.children_counts]) for t in trees])
    keys = [str(t) for t, x in zip(trees, w) if x > 0]
    w = w[w > 0]
    assert set(c) <= set(keys)
    _, pv = chi2_gof([c[k] for k in keys], w)
    assert pv > 0.01


def test_rejection_agrees_with_bridge(geo, rng):
    p, n = 6, 100_000
    a = Counter(str(sample_conditioned_tree(geo, p, rng)) for _ in range(n))
    b = Counter(str(sample_conditioned_tree_rejection(geo, p, rng)) for _ in range(n))
    keys = sorted(set(a) | set(b))
    assert len(keys) == catalan(p - 1)
    from scipy.stats import chi2_contingency
    _, pv, _, _ = chi2_contingency(np.array([[a[k] for k in keys], [b[k] for k in keys]]))
    assert pv > 0.01
    assert str(sample_conditioned_tree_rejection(geo, 1, rng)) == "0"


def test_rejection_tries(geo):
    # expected number of tries 1 / P(zeta = 2) = 8
    from gwcrt.sampler import _gw_rejection
    cdf = np.cumsum(geo.pmf(2))
    rng = make_rng(5)
    tries = [_gw_rejection(cdf, 2, 10**6, rng)[1] for _ in range(20_000)]
    assert abs(np.mean(tries) - 8) < 3 * np.sqrt(56 / 20_000)
    with pytest.raises(RejectionExhausted):
        sample_conditioned_tree_rejection(geo, 40, rng, max_tries=1)


def test_infeasible():
    binary = table_offspring(["1/2", 0, "1/2"])
    with pytest.raises(InfeasibleConditioning):
        get_sampler(binary, 4)
    assert str(sample_conditioned_tree(binary, 5, make_rng(0))) in {"2,2,0,0,0", "2,0,2,0,0"}


def test_bundle_pathwise(geo, st15, rng):
    for m in (geo, st15):
        for p in (1, 3, 17, 300):
            for _ in range(20):
                b = rescaled_bundle(m, p, rng)
                assert np.array_equal(b.excursion_walk, P.vervaat_discrete(b.bridge_walk).values)
                assert np.array_equal(P.vervaat_discrete(b.m + b.bridge_height).values, b.height)
                t = b.tree()
                assert t.size == p
                assert np.array_equal(b.height[:-1], T.height_process(t)) and b.height[-1] == 0
                c = T.contour_process(t)
                assert np.array_equal(b.contour[: c.size], c) and not b.contour[c.size:].any()
                assert b.contour.shape[0] == 2 * p + 1
                assert b.height_at(0.0) == 0.0
                assert b.walk_at(1.0) == -b.walk_scale


def _lca_depth(h, i, j):
    # |u_i ^ u_j| from the height sequence
    if i == j:
        return h[i]
    if i > j:
        i, j = j, i
    m = h[i + 1: j + 1].min()
    return h[i] if m > h[i] else m - 1


def _shared_before(h, n, k):
    # strict ancestors of u_n that are also ancestors of u_{n+k}; 0 past p
    p = h.shape[0] - 1
    j = n + k
    if j >= p:
        return 0
    if k == 0:
        return h[n]
    d = _lca_depth(h, n, j)
    return d if h[n + 1: j + 1].min() > h[n] else d + 1


def _m_samples(model, p, reps, ks, seed):
    rng = make_rng(seed)
    ms = {k: np.empty(reps, dtype=np.int64) for k in ks}
    lc = {k: np.empty(reps, dtype=np.int64) for k in ks}
    sb = {k: np.empty(reps, dtype=np.int64) for k in ks}
    for r in range(reps):
        b = rescaled_bundle(model, p, rng)
        h = b.height
        n = rng.integers(p)          # independent of the tree
        for k in ks:
            ms[k][r] = b.m[k]
            lc[k][r] = _lca_depth(h, n, (n + k) % p)
            sb[k][r] = _shared_before(h, n, k)
    return ms, lc, sb


def test_m_pathwise_ancestors(geo, st15, rng):
    # with N = p - G_p (bridge time 0), M_k counts the strict ancestors of
    # u_N that are ancestors of u_{N+k}
    for m in (geo, st15):
        for _ in range(300):
            p = int(rng.integers(3, 80))
            b = rescaled_bundle(m, p, rng)
            g = P.first_argmin(b.bridge_walk)
            n = (p - g) % p
            for k in range(p + 1):
                assert b.m[k] == _shared_before(b.height, n, k)


def test_m_law_shared_ancestors(geo):
    ms, _, sb = _m_samples(geo, 50, 100_000, (1, 5, 20, 40), 13)
    for k in ms:
        assert tv_distance(ms[k], sb[k]) < 0.02, k


@pytest.mark.xfail(strict=True, reason="M_k is the shared-ancestor count, not |u_N ^ u_N(k)|; see ledger")
def test_m_interpretation(geo):
    ms, lc, _ = _m_samples(geo, 50, 100_000, (1, 5, 20, 40), 13)
    for k in ms:
        assert tv_distance(ms[k], lc[k]) < 0.02, k


def test_bundle_max_self_consistent(geo):
    # sup of the rescaled height: p = 10^4 against an independent p = 4 10^4 run
    def sup_mean(p, reps, seed):
        rng = make_rng(seed, p)
        return np.mean([rescaled_bundle(geo, p, rng).height.max() * geo.norming(p) / p
                        for _ in range(reps)])
    a = sup_mean(10**4, 10**4, 1)
    b = sup_mean(4 * 10**4, 2500, 2)
    assert abs(a / b - 1) < 0.05
