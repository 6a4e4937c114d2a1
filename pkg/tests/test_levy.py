import math
from itertools import product

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from gwcrt import levy
from gwcrt import paths as P
from gwcrt.levy import GridPath, StableModel
from gwcrt.offspring import stable_offspring
from gwcrt.rng import make_rng
from gwcrt.sampler import sample_bridge_walk
from gwcrt.stats import ks_one_sample, ks_two_sample


def _x1(alpha, reps, rng, T=1.0, n=4):
    return np.array([levy.sample_stable_path(alpha, T, n, rng).values[-1] for _ in range(reps)])


def test_model_constants():
    m = StableModel(1.5)
    assert m.beta_eps(0.1) == pytest.approx(1.5 / (gamma(0.5) * 0.1**0.5))
    assert m.beta_eps(0.1) > m.beta_eps(0.2) > 0
    r = np.array([0.5, 1.0, 2.0])
    assert np.allclose(m.levy_density(r), 1.5 * 0.5 / gamma(0.5) * r**-2.5)
    # beta_eps is the mean jump size above eps under the Levy measure
    val, _ = integrate.quad(lambda x: x * m.levy_density(np.array([x]))[0], 0.1, np.inf)
    assert val == pytest.approx(m.beta_eps(0.1), rel=1e-8)
    assert m.psi(2.0) == pytest.approx(2.0**1.5)
    for bad in (1.0, 2.5):
        with pytest.raises(ValueError):
            StableModel(bad)
    assert StableModel(2.0).brownian


def test_grid_path():
    g = GridPath(2.0, np.array([0.0, 1.0, 3.0, 2.0, 0.5]))
    assert g.n == 4 and np.allclose(g.increments, [1, 2, -1, -1.5])
    assert np.allclose(g.times, [0, 0.5, 1, 1.5, 2])
    assert g.at(1.0) == 3.0 and g.at(1.49) == 3.0 and g.at(2.0) == 0.5
    for bad in ([0.0, np.inf], [0.0, np.nan], [0.0]):
        with pytest.raises(ValueError):
            GridPath(1.0, np.array(bad))


def test_default_eps_scaling():
    assert levy.default_eps(10**4, 1.5) == pytest.approx(1e4 ** (-1 / 3))
    assert levy.default_eps(10**4, 1.5, 4.0) == pytest.approx(4 ** (1 / 1.5) * 1e4 ** (-1 / 3))


def test_brownian_variance(rng):
    x = _x1(2.0, 100_000, rng)
    assert abs(x.var() / 2.0 - 1) < 0.02


def test_laplace_stable(rng):
    # E exp(-X_1) = e under psi(l) = l^alpha
    x = np.concatenate([levy._stable_increments(1.5, 200_000, 1.0, rng) for _ in range(5)])
    assert abs(np.mean(np.exp(-x)) / math.e - 1) < 0.02
    # spectrally positive: the lower tail is light
    assert x.min() > -6


def test_scaling_of_x(rng):
    # k^(-1/alpha) X_k has the law of X_1
    a, k = 1.5, 4
    direct = _x1(a, 100_000, rng)
    scaled = k ** (-1 / a) * _x1(a, 100_000, rng, T=k)
    assert ks_two_sample(direct, scaled)[1] > 0.01


def test_height_estimate_trivial():
    x = np.cumsum(np.r_[0.0, np.full(50, 0.3)])
    assert np.array_equal(levy.height_estimate(GridPath(1.0, x), model=2.0).values, x)
    y = np.r_[0.0, 1.0, -0.5, 2.0, 1.0]
    h = levy.height_estimate(GridPath(1.0, y), model=2.0).values
    assert np.allclose(h, y - np.minimum.accumulate(y))
    dec = GridPath(1.0, -np.linspace(0, 3, 101))
    assert not levy.height_estimate(dec, eps=0.01, model=1.5).values.any()
    with pytest.raises(ValueError):
        levy.height_estimate(dec, eps=0.0, model=1.5)
    with pytest.raises(ValueError):
        levy.local_time_estimate(dec, eps=-1.0, model=1.5)


def test_height_estimate_literal(rng):
    # stack count against the literal definition on small random paths
    m = StableModel(1.5)
    for _ in range(200):
        x = levy.sample_stable_path(m, 1.0, 40, rng).values
        eps = 0.2
        h = levy.height_estimate(GridPath(1.0, x), eps=eps, model=m).values * m.beta_eps(eps)
        for t in range(41):
            c = sum(1 for u in range(1, t + 1)
                    if x[u] - x[u - 1] > eps and x[u - 1] < x[u: t + 1].min())
            assert round(h[t]) == c


def test_local_time_trivial():
    x = np.cumsum(np.r_[0.0, np.full(20, 0.5)])
    m = StableModel(1.5)
    lt = levy.local_time_estimate(GridPath(1.0, x), eps=0.1, model=m).values
    assert np.allclose(lt, np.arange(21) / m.beta_eps(0.1))
    y = np.r_[0.0, 1.0, -0.5, 2.0, 1.0]
    assert np.allclose(levy.local_time_estimate(GridPath(1.0, y), model=2.0).values,
                       np.maximum.accumulate(y))


@pytest.mark.xfail(strict=True, reason="jump-count noise at n = 1e5 exceeds the pin; see ledger")
def test_local_time_matches_ladder_counts():
    m = stable_offspring(1.5)
    p = 10**5
    rng = make_rng(41)
    for _ in range(5):
        w = sample_bridge_walk(m, p, rng).values
        ap = m.norming(p)
        ld = P.ladder_counts(w) * ap / p
        le = levy.local_time_estimate(GridPath(1.0, w / ap), model=1.5).values
        assert np.abs(ld - le).max() < 0.05


@pytest.mark.xfail(strict=True, reason="halving eps changes counts by several units; see ledger")
def test_eps_stability():
    m = stable_offspring(1.5)
    p = 10**5
    rng = make_rng(42)
    for _ in range(5):
        path = levy.bridge_path(1.5, p, rng)
        e = levy.default_eps(p, 1.5)
        h1 = levy.height_estimate(path, eps=e, model=1.5).values
        h2 = levy.height_estimate(path, eps=e / 2, model=1.5).values
        assert np.abs(h1 - h2).max() < 0.1


def test_bridge_endpoints(rng):
    for a in (1.5, 2.0):
        ap = StableModel(a).offspring().norming(1000)
        for method in ("walk", "chaumont"):
            b = levy.bridge_path(a, 1000, rng, method=method)
            assert b.values[0] == 0.0 and b.n == 1000
            if method == "walk":
                assert abs(b.values[-1]) < 2 / ap and b.defect == pytest.approx(1 / ap)
            else:
                assert b.values[-1] == 0.0


def _bridge_cdf(alpha, t):
    xs = np.linspace(-14, 14, 2801)
    f = (levy.stable_density(alpha, t, xs) * levy.stable_density(alpha, 1 - t, -xs)
         / levy.stable_density(alpha, 1.0, 0.0))
    F = integrate.cumulative_trapezoid(f, xs, initial=0.0)
    return lambda x: np.interp(x, xs, F / F[-1])


@pytest.mark.parametrize("method", ["walk", "chaumont"])
def test_bridge_marginal_exact(method):
    # against the density p_t(x) p_{1-t}(-x) / p_1(0)
    a, t = 1.5, 0.5
    rng = make_rng(43, len(method))
    x = np.array([levy.bridge_path(a, 2000, rng, method=method).at(t) for _ in range(3000)])
    assert ks_one_sample(x, _bridge_cdf(a, t))[1] > 0.01


def test_bridge_duality():
    rng = make_rng(44)
    d, r = [], []
    for _ in range(5000):
        x = levy.bridge_path(1.5, 3000, rng).values
        d.append(GridPath(1.0, x).at(1 / 3))
        x = levy.bridge_path(1.5, 3000, rng).values
        r.append(GridPath(1.0, x[-1] - x[::-1]).at(1 / 3))
    assert ks_two_sample(d, r)[1] > 0.01


@pytest.mark.slow
def test_bridge_cross_method():
    rw, rc = make_rng(45, 1), make_rng(45, 2)
    n, reps = 10**4, 10**4
    w = [levy.bridge_path(1.5, n, rw).at(0.5) for _ in range(reps)]
    c = [levy.bridge_path(1.5, n, rc, method="chaumont").at(0.5) for _ in range(reps)]
    assert ks_two_sample(w, c)[1] > 0.01


def test_excursion_basic(rng):
    for a in (1.5, 2.0):
        for method in ("vervaat", "straddle"):
            e = levy.excursion_path(a, 2000, rng, method=method)
            assert e.values[0] == 0.0 and e.values[-1] <= e.defect + 1e-12
            assert e.values.min() >= -e.defect - 1e-12
            if method == "vervaat":
                assert e.defect < 2 / StableModel(a).offspring().norming(2000)


def test_excursion_tail_exponent():
    rng = make_rng(46)
    lens, loc = [], 0.0
    for _ in range(40):
        lv, lt = levy.excursion_lengths(1.5, 200.0, 2 * 10**6, rng)
        lens.append(lv)
        loc += lt
    lens = np.concatenate(lens)
    ts = np.logspace(-1, 1, 9)
    rate = np.array([(lens > t).sum() for t in ts]) / loc
    slope = np.polyfit(np.log(ts), np.log(rate), 1)[0]
    assert abs(slope / (-1 / 1.5) - 1) < 0.05


def test_excursion_straddle_matches_vervaat():
    rv, rs = make_rng(47, 1), make_rng(47, 2)
    v = [levy.excursion_path(1.5, 2000, rv).at(0.5) for _ in range(3000)]
    s = [levy.excursion_path(1.5, 2000, rs, method="straddle").at(0.5) for _ in range(3000)]
    assert ks_two_sample(v, s)[1] > 0.01


def test_vervaat_continuous_basic(rng):
    # minimum at the endpoint: unchanged
    x = np.r_[0.0, 1.0, 0.5, 2.0, -1.0]
    assert np.array_equal(levy.vervaat_continuous(GridPath(1.0, x)).values, x)
    # rotation at the first minimum
    y = np.r_[0.0, -1.0, 0.5, -1.0, 0.0]
    assert np.array_equal(levy.vervaat_continuous(GridPath(1.0, y)).values, [0.0, 1.5, 0.0, 1.0, 0.0])
    assert np.array_equal(levy.vervaat_continuous(GridPath(1.0, y), at=3).values,
                          [0.0, 1.0, 0.0, 1.5, 0.0])
    with pytest.raises(IndexError):
        levy.vervaat_continuous(GridPath(1.0, y), at=9)
    for _ in range(100):
        b = levy.bridge_path(1.5, 300, rng)
        v = levy.vervaat_continuous(b).values
        assert v[0] == 0.0 and v.min() >= -b.defect - 1e-12 and v[-1] == pytest.approx(-b.defect)


def test_vervaat_matches_discrete():
    for z in range(1, 9):
        for steps in product(range(-1, 3), repeat=z):
            w = np.concatenate([[0], np.cumsum(steps)])
            a = levy.vervaat_continuous(GridPath(1.0, w.astype(float))).values
            b = P.vervaat_discrete(w).values
            assert np.array_equal(a, b)


def test_b_and_m_brownian(rng):
    for _ in range(50):
        b = levy.bridge_path(2.0, 1000, rng)
        B, M = levy.b_and_m(b, model=2.0)
        H = levy.height_estimate(b, model=2.0)
        x = b.values
        assert np.allclose(M.values + H.values, x - x.min(), atol=1e-12)
        lv = np.linspace(0, 3, 31)
        assert np.allclose(B(lv), np.maximum(-lv - x.min(), 0.0))


def test_b_monotone_and_vanishing(rng):
    for _ in range(100):
        b = levy.bridge_path(1.5, 2000, rng)
        B, M = levy.b_and_m(b, model=1.5)
        lv = np.linspace(0, 1.2 * -b.values.min() + 0.1, 200)
        bv = B(lv)
        assert np.all(np.diff(bv) <= 0) and np.all(bv >= 0)
        assert not B(np.array([-b.values.min() + 1e-9, 5.0])).any()
        assert np.all(M.values >= 0)


def test_bridge_route_pathwise(rng):
    # V(M + H^br), rotated at the bridge minimum, is H of V(bridge) on the grid
    for a in (1.5, 2.0):
        for _ in range(100):
            b = levy.bridge_path(a, 3000, rng)
            lhs = levy.excursion_height_from_bridge(b, model=a).values
            rhs = levy.height_estimate(levy.vervaat_continuous(b), model=a).values
            assert np.allclose(lhs, rhs, atol=1e-12)
            if a < 2:
                # same lattice point, same float: ties between the routes stay ties
                assert np.array_equal(lhs[:-1], rhs[:-1])


def test_stable_density_brownian():
    assert levy.stable_density(2.0, 1.0, 0.0) == pytest.approx((4 * np.pi) ** -0.5, rel=1e-15)
    xs = np.linspace(-10, 10, 41)
    # Fourier route at alpha = 2 agrees with the closed form
    fx = levy._fourier_density(2.0, 1.0, xs)
    assert np.max(np.abs(fx - (4 * np.pi) ** -0.5 * np.exp(-xs**2 / 4))) < 1e-12
    with pytest.raises(ValueError):
        levy.stable_density(1.5, 0.0, 1.0)


def test_stable_density_levy_stable():
    # independent route: scipy's S1 parameterisation, scale (-cos(pi a / 2))^(1/a)
    from scipy.stats import levy_stable
    a = 1.5
    xs = np.linspace(-20, 20, 81)
    ref = levy_stable.pdf(xs, a, 1.0, loc=0.0, scale=(-np.cos(np.pi * a / 2)) ** (1 / a))
    assert np.max(np.abs(levy.stable_density(a, 1.0, xs) - ref)) < 1e-8


def test_stable_density_normalized_and_scaling():
    a = 1.5
    f = lambda x: levy.stable_density(a, 1.0, x)
    val = integrate.quad(f, -np.inf, 0, limit=400)[0] + integrate.quad(f, 0, 200, limit=400)[0]
    # right tail f(x) ~ c x^(-1-a): its mass past 200 is 200 f(200) / a
    val += 200 * f(200.0) / a
    assert abs(val - 1) < 1e-6
    for t in (0.3, 2.0):
        for x in (-2.0, 0.0, 0.7, 5.0):
            lhs = levy.stable_density(a, t, x)
            rhs = t ** (-1 / a) * levy.stable_density(a, 1.0, t ** (-1 / a) * x)
            assert abs(lhs - rhs) < 1e-8


def test_brownian_increments_reduce(rng):
    # the one-sided stable generator at alpha = 2 is Gaussian with variance 2
    x = levy._stable_increments(2.0, 100_000, 1.0, rng)
    from scipy.stats import norm
    assert ks_one_sample(x, norm(scale=np.sqrt(2)).cdf)[1] > 0.01
