import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import binom

from gwcrt.offspring import (geometric_offspring, otter_check, parse_model, read_pmf_file,
                             stable_offspring, step_law, table_offspring, walk_law_table,
                             walk_law_row)


def test_geometric_basics(geo):
    assert geo.pmf_exact(0) == Fraction(1, 2)
    assert geo.mean == 1 and geo.variance == 2
    assert geo.critical and geo.aperiodic
    assert geo.norming(400) == 20.0
    assert abs(geo.pmf(80).sum() - 1) < 1e-15


def test_geometric_laplace_expansion(geo):
    # E exp(-theta xi) = 1 + theta^2 + O(theta^3): step variance 2
    for th in (1e-2, 1e-3):
        assert abs((geo.laplace_step(th) - 1) / th**2 - 1) < 5 * th


def test_stable_pmf(st15):
    mu = st15.pmf(40)
    assert mu[0] == pytest.approx(2 / 3, abs=1e-15)
    assert mu[1] == 0.0
    assert mu[2] == pytest.approx(0.25, abs=1e-15)
    for j in range(2, 12):
        assert mu[j] == pytest.approx((-1) ** j * binom(1.5, j) / 1.5, rel=1e-12)
    assert st15.critical and st15.aperiodic
    assert abs(st15.numeric_mean() - 1) < 1e-12
    # survival closed form against the head of the pmf
    assert st15.survival(40) == pytest.approx(1 - mu.sum(), rel=1e-9)


@pytest.mark.parametrize("a", [1.0, 2.0, 2.5, 0.9])
def test_stable_rejects_alpha(a):
    with pytest.raises(ValueError):
        stable_offspring(a)


def test_stable_laplace_calibration_exact():
    # (E exp(-l xi / a_p))^p against exp(l^alpha), from the generating function
    m = stable_offspring(1.5)
    for p in (10**3, 10**4, 10**5):
        a = m.norming(p)
        for lam in (0.5, 1.0, 2.0):
            val = m.laplace_step(lam / a) ** p
            assert abs(val / math.exp(lam**1.5) - 1) < 0.02, (p, lam)


def test_stable_laplace_calibration_mc(st15, rng):
    p, reps = 1000, 100_000
    kmax = 10**6
    cdf = np.cumsum(st15.pmf(kmax))
    a = st15.norming(p)
    w = np.zeros(reps)
    for _ in range(p):
        k = np.searchsorted(cdf, rng.random(reps), side="right")
        w += k - 1   # k = kmax + 1 stands for the tail (exp(-l k/a) ~ 0)
    for lam in (0.5, 1.0):
        est = np.exp(-lam * w / a).mean()
        assert abs(est / math.exp(lam**1.5) - 1) < 0.02, lam


def test_step_law(geo, st15):
    nu, off = step_law(geo, 30)
    assert off == -1 and nu[0] == 0.5
    assert np.allclose(nu[1:6], [2.0 ** -(k + 2) for k in range(5)])
    nu, _ = step_law(geo)
    assert abs(nu.sum() - 1) < 1e-14
    nu, _ = step_law(st15, 10**5)
    assert nu[0] == st15.pmf(0)[0] and nu[1] == 0.0
    assert abs(nu.sum() + st15.survival(10**5 + 1) - 1) < 1e-12
    with pytest.raises(ValueError):
        step_law(st15)
    # step mean 0 for the closed-form families (tails in closed form)
    for m in (geo, st15):
        assert abs(m.numeric_mean() - 1) < 1e-12


def test_walk_table_exact(geo):
    tab = walk_law_table(geo, 20, mode="exact", kmax=20 * 30)
    assert tab.prob(1, -1) == Fraction(1, 2)
    assert tab.prob(2, -1) == Fraction(1, 4)
    for m in range(21):
        assert sum(tab.rows[m], Fraction(0)) + tab.tail[m] == 1
        assert tab.upper[m] >= -m - 1
    small = walk_law_table(geo, 6, mode="exact", kmax=-1)
    assert small.prob(6, -1) == tab.prob(6, -1)
    with pytest.raises(ValueError):
        walk_law_table(stable_offspring(1.5), 4, mode="exact")


def test_walk_table_float_matches_fft(st15):
    tab = walk_law_table(st15, 30, mode="float", kmax=10)
    ks, pr = walk_law_row(st15, 30, kmax=10)
    assert ks[0] == -30 and ks[-1] == 10
    for k in range(-30, 11):
        assert abs(tab.prob(30, k) - pr[k + 30]) < 1e-12


def test_otter_small(geo):
    assert otter_check(geo, 1) == (Fraction(1, 2), Fraction(1, 2))
    assert otter_check(geo, 2) == (Fraction(1, 4), Fraction(1, 4))
    for p in range(1, 13):
        lhs, rhs = otter_check(geo, p)
        assert lhs == rhs
    lhs, rhs = otter_check(stable_offspring(1.5), 9)
    assert abs(lhs - rhs) < 1e-14


def test_local_limit_geometric(geo):
    p = 2000
    a = geo.norming(p)
    tab = walk_law_table(geo, p, mode="float", kmax=6 * int(a))
    ks = np.arange(-p, 6 * int(a) + 1)
    f = np.array([tab.prob(p, int(k)) for k in ks])
    g = (4 * np.pi) ** -0.5 * np.exp(-(ks / a) ** 2 / 4)
    assert np.max(np.abs(a * f - g)) < 0.01


def test_table_model(tmp_path):
    path = tmp_path / "mu.txt"
    path.write_text("# critical, support {0, 1, 3}\n0,1/2\n1,1/4\n3,1/4\n")
    assert read_pmf_file(path) == [Fraction(1, 2), Fraction(1, 4), 0, Fraction(1, 4)]
    m = parse_model(f"table:{path}")
    assert m.critical and m.aperiodic and m.exact
    assert m.variance == Fraction(3, 2)
    assert m.norming(6) == pytest.approx(math.sqrt(4.5))
    lhs, rhs = otter_check(m, 7)
    assert lhs == rhs
    # binary law: support gcd 2, periodic
    b = table_offspring(["1/2", 0, "1/2"])
    assert not b.aperiodic
    bad = tmp_path / "bad.txt"
    bad.write_text("0,1/2\n0,1/2\n")
    with pytest.raises(ValueError):
        read_pmf_file(bad)
    with pytest.raises(ValueError):
        table_offspring(["1/4", 0, "3/4"])   # supercritical
    with pytest.raises(ValueError):
        table_offspring(["1/2", "1/4"])      # does not sum to 1


def test_parse_model():
    assert parse_model("geometric") == geometric_offspring()
    assert parse_model("stable:alpha=1.5") == stable_offspring(1.5)
    assert str(parse_model("stable:alpha=1.5")) == "stable:alpha=1.5"
    for bad in ("poisson", "stable", "stable:beta=2"):
        with pytest.raises(ValueError):
            parse_model(bad)
