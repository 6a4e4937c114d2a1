"""Small statistical helpers shared by the study harness and the tests."""
import numpy as np
from scipy import stats as _st


def _nonempty(x, name):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    return x


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = _nonempty(a, "first sample")
    b = _nonempty(b, "second sample")
    r = _st.ks_2samp(a, b, method="asymp")
    return float(r.statistic), float(r.pvalue)


def ks_one_sample(a, cdf):
    a = _nonempty(a, "sample")
    r = _st.kstest(a, cdf)
    return float(r.statistic), float(r.pvalue)


def chi2_uniform(counts):
    """Chi-square goodness of fit of counts to the uniform law."""
    c = np.asarray(counts, dtype=float)
    r = _st.chisquare(c)
    return float(r.statistic), float(r.pvalue)


def chi2_gof(counts, probs):
    c = np.asarray(counts, dtype=float)
    p = np.asarray(probs, dtype=float)
    r = _st.chisquare(c, c.sum() * p / p.sum())
    return float(r.statistic), float(r.pvalue)


def tv_distance(a, b):
    """Total variation distance between two empirical laws on the integers."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    keys = np.union1d(a, b)
    pa = np.array([np.count_nonzero(a == k) for k in keys]) / max(a.size, 1)
    pb = np.array([np.count_nonzero(b == k) for k in keys]) / max(b.size, 1)
    return 0.5 * float(np.abs(pa - pb).sum())


def strictly_decreasing(xs):
    xs = list(xs)
    return all(x > y for x, y in zip(xs[:-1], xs[1:]))
