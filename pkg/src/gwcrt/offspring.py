"""Offspring laws, their step laws and exact walk-law tables.

Three families are available:

``geometric``
    mu(k) = 2^-(k+1); finite variance 2, a_p = sqrt(p).
``stable:alpha=a``
    generating function g(s) = s + (1-s)^a / a with 1 < a < 2, so that
    mu(0) = 1/a, mu(1) = 0 and mu(j) = Gamma(j-a) / (a Gamma(-a) j!) for
    j >= 2.  With a_p = (p/a)^(1/a) the rescaled walk has Laplace exponent
    lambda^a.
``table:<path>``
    explicit finite pmf read from a ``k,prob`` file.  Finite support means
    finite variance s2, hence alpha = 2 and a_p = sqrt(p s2 / 2).

The random walk attached to mu has steps k - 1, i.e. step law
nu(k) = mu(k + 1) on {-1, 0, 1, ...}.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
import math

import numpy as np
from scipy.special import gammaln

_TAIL_EPS = 1e-15


@dataclass(frozen=True, eq=False)
class OffspringModel:
    """Offspring distribution on {0, 1, 2, ...}.

    ``critical`` and ``aperiodic`` are recomputed from the pmf at
    construction and are never taken from the caller.
    """

    family: str
    alpha: float
    table: tuple = ()          # Fractions, only for family == "table"
    label: str = ""
    critical: bool = field(init=False)
    aperiodic: bool = field(init=False)

    def __post_init__(self):
        if self.family not in ("geometric", "stable", "table"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "stable" and not 1.0 < self.alpha < 2.0:
            raise ValueError("stable family needs 1 < alpha < 2; use geometric for alpha = 2")
        if self.family == "table":
            tot = sum(self.table)
            if abs(float(tot) - 1.0) > 1e-12:
                raise ValueError(f"table pmf sums to {float(tot)!r}")
            if any(x < 0 for x in self.table):
                raise ValueError("negative probability in table")
            if len(self.table) > 1 and self.table[1] == 1:
                raise ValueError("mu(1) = 1 gives a degenerate tree")
        m = self.numeric_mean()
        object.__setattr__(self, "critical", abs(m - 1.0) < 1e-9)
        if m > 1.0 + 1e-9:
            raise ValueError(f"supercritical offspring law (mean {m})")
        object.__setattr__(self, "aperiodic", self._support_gcd() == 1)

    # identity ------------------------------------------------------------
    @property
    def key(self):
        return (self.family, float(self.alpha), self.table)

    def __eq__(self, other):
        return isinstance(other, OffspringModel) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __str__(self):
        if self.label:
            return self.label
        if self.family == "stable":
            return f"stable:alpha={self.alpha:g}"
        return self.family

    @property
    def exact(self):
        """True when the pmf has rational entries."""
        return self.family in ("geometric", "table")

    # pmf ---------------------------------------------------------------
    def pmf_exact(self, k):
        if k < 0:
            return Fraction(0)
        if self.family == "geometric":
            return Fraction(1, 2 ** (k + 1))
        if self.family == "table":
            return self.table[k] if k < len(self.table) else Fraction(0)
        raise ValueError("the stable family has irrational probabilities")

    def pmf(self, kmax):
        """Float array ``mu(0..kmax)``."""
        kmax = int(kmax)
        if kmax < 0:
            return np.zeros(0)
        k = np.arange(kmax + 1)
        if self.family == "geometric":
            return np.ldexp(1.0, -(k + 1))
        if self.family == "table":
            out = np.zeros(kmax + 1)
            m = min(kmax + 1, len(self.table))
            out[:m] = [float(x) for x in self.table[:m]]
            return out
        a = self.alpha
        out = np.zeros(kmax + 1)
        out[0] = 1.0 / a
        if kmax >= 2:
            j = k[2:]
            # Gamma(-a) > 0 for 1 < a < 2
            out[2:] = np.exp(gammaln(j - a) - gammaln(j + 1.0) - math.log(a) - gammaln(-a))
        return out

    def survival(self, k):
        """``P(K > k)`` in float, using closed forms for the tails."""
        if k < 0:
            return 1.0
        if self.family == "geometric":
            return math.ldexp(1.0, -(k + 1))
        if self.family == "table":
            return float(sum(self.table[k + 1:], Fraction(0)))
        a = self.alpha
        if k == 0:
            return 1.0 - 1.0 / a
        # telescoping: sum_{j>k} Gamma(j-a)/Gamma(j+1) = Gamma(k+1-a)/(a Gamma(k+1))
        return math.exp(gammaln(k + 1 - a) - gammaln(k + 1.0) - 2 * math.log(a) - gammaln(-a))

    def support_max(self):
        """Largest k with mu(k) > 0, or None for infinite support."""
        if self.family == "table":
            nz = [i for i, x in enumerate(self.table) if x > 0]
            return nz[-1]
        return None

    def cutoff(self, eps=_TAIL_EPS):
        """Smallest k with ``P(K > k) < eps`` (or the support maximum)."""
        sm = self.support_max()
        if sm is not None:
            return sm
        if self.family == "geometric":
            return max(1, math.ceil(-math.log2(eps)))
        lo, hi = 1, 2
        while self.survival(hi) >= eps:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.survival(mid) >= eps:
                lo = mid
            else:
                hi = mid
        return hi

    # moments -----------------------------------------------------------
    def numeric_mean(self):
        """Mean recomputed from the pmf (tail handled in closed form)."""
        if self.family == "table":
            return float(sum(i * x for i, x in enumerate(self.table)))
        if self.family == "geometric":
            K = 64
            k = np.arange(K + 1)
            # sum_{j>K} j 2^-(j+1) = (K+2) 2^-(K+1)
            return float(np.sum(k * self.pmf(K))) + (K + 2) * 2.0 ** -(K + 1)
        a = self.alpha
        K = 200
        k = np.arange(K + 1)
        head = float(np.sum(k * self.pmf(K)))
        # sum_{j>K} j mu(j) = Gamma(K+1-a)/((a-1) Gamma(K)) / (a Gamma(-a))
        tail = math.exp(gammaln(K + 1 - a) - gammaln(K) - math.log(a - 1) - math.log(a) - gammaln(-a))
        return head + tail

    @property
    def mean(self):
        if self.family == "geometric":
            return Fraction(1)
        if self.family == "table":
            return sum(i * x for i, x in enumerate(self.table))
        return 1.0

    @property
    def variance(self):
        if self.family == "geometric":
            return Fraction(2)
        if self.family == "table":
            m = self.mean
            return sum((i - m) ** 2 * x for i, x in enumerate(self.table))
        return math.inf

    def _support_gcd(self):
        if self.family == "geometric":
            return 1
        if self.family == "stable":
            return math.gcd(2, 3)
        ks = [i for i, x in enumerate(self.table) if x > 0 and i >= 1]
        return reduce(math.gcd, ks, 0)

    # scaling -----------------------------------------------------------
    def norming(self, p):
        """``a_p`` such that ``W_[pt] / a_p`` has Laplace exponent lambda^alpha."""
        if self.family == "stable":
            return (p / self.alpha) ** (1.0 / self.alpha)
        return math.sqrt(p * float(self.variance) / 2.0)

    def laplace_step(self, theta):
        """``E exp(-theta * step)`` computed from the generating function."""
        s = math.exp(-theta)
        if self.family == "geometric":
            g = 1.0 / (2.0 - s)
        elif self.family == "stable":
            g = s + (1.0 - s) ** self.alpha / self.alpha
        else:
            g = sum(float(x) * s ** i for i, x in enumerate(self.table))
        return g / s


def geometric_offspring():
    return OffspringModel("geometric", 2.0)


def stable_offspring(alpha):
    return OffspringModel("stable", float(alpha))


def table_offspring(probs, label=""):
    """Explicit pmf ``probs[k] = mu(k)``; entries may be strings like '1/3'."""
    fr = tuple(Fraction(str(x)) if not isinstance(x, Fraction) else x for x in probs)
    while len(fr) > 1 and fr[-1] == 0:
        fr = fr[:-1]
    return OffspringModel("table", 2.0, fr, label)


def read_pmf_file(path):
    """Parse ``k,prob`` lines (``#`` comments allowed) into a pmf list."""
    pairs = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                k, pr = line.split(",")
                k = int(k)
                pr = Fraction(pr.strip())
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: expected 'k,prob'") from exc
            if k < 0 or k in pairs:
                raise ValueError(f"{path}:{ln}: bad or repeated k={k}")
            pairs[k] = pr
    if not pairs:
        raise ValueError(f"{path}: empty pmf")
    out = [Fraction(0)] * (max(pairs) + 1)
    for k, pr in pairs.items():
        out[k] = pr
    return out


def parse_model(name):
    """``geometric`` | ``stable:alpha=1.5`` | ``table:<path>``."""
    if isinstance(name, OffspringModel):
        return name
    name = str(name).strip()
    if name == "geometric":
        return geometric_offspring()
    if name.startswith("stable"):
        _, _, rest = name.partition(":")
        params = dict(kv.split("=", 1) for kv in rest.split(";") if kv)
        if "alpha" not in params:
            raise ValueError("stable model needs alpha=...")
        return stable_offspring(float(params["alpha"]))
    if name.startswith("table:"):
        path = name[len("table:"):]
        return table_offspring(read_pmf_file(path), label=name)
    raise ValueError(f"unrecognised model {name!r}")


_DENSE_MAX = 10**7


def step_law(model, smax=None):
    """``(nu, offset)`` with ``nu[i] = P(step = i - 1)`` for steps up to smax.

    Without smax the law is cut at tail mass 1e-15; heavy tails (alpha < 2)
    need an explicit smax since that cut lies beyond 10^9.
    """
    if smax is None:
        smax = model.cutoff() - 1
        if smax > _DENSE_MAX:
            raise ValueError(f"tail of {model} too heavy for a dense step law; pass smax")
    return model.pmf(smax + 1), -1


# walk-law tables -----------------------------------------------------------

@dataclass
class WalkLawTable:
    """Rows ``f(m, k) = P(W_m = k)`` for ``m = 0..n``.

    Row m is stored on the window ``k in [-m, upper[m]]``.  The windows are
    chosen so that every stored entry is exact (no mass can re-enter the
    window from outside), and ``tail[m]`` is the mass above the window.
    """

    n: int
    mode: str
    upper: list
    rows: list
    tail: list

    def prob(self, m, k):
        if not 0 <= m <= self.n:
            raise IndexError(m)
        if k < -m or k > self.upper[m]:
            if k > self.upper[m]:
                raise KeyError(f"k={k} outside stored window of row {m}")
            return Fraction(0) if self.mode == "exact" else 0.0
        return self.rows[m][k + m]

    def row_dict(self, m):
        return {k - m: v for k, v in enumerate(self.rows[m])}


def walk_law_table(model, n, mode="float", kmax=None):
    """Exact convolution table for ``P(W_m = k)``, ``m <= n``.

    ``kmax`` bounds the window of the last row; each earlier row keeps
    ``n - m`` extra values so that the last row is still exact.  By default
    the window is the whole reachable range for finite-support laws and
    ``n - 1`` otherwise (enough for every event ``{W_n = j}`` with j < n).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if mode not in ("exact", "float"):
        raise ValueError(mode)
    if mode == "exact" and not model.exact:
        raise ValueError(f"exact mode needs a rational pmf, not {model}")
    sm = model.support_max()
    smax_step = None if sm is None else sm - 1
    if kmax is None:
        kmax = n * smax_step if smax_step is not None else n - 1
    upper = []
    for m in range(n + 1):
        u = kmax + (n - m)
        if smax_step is not None:
            u = min(u, m * smax_step)
        upper.append(max(u, -m - 1))
    S = max(upper[m] - (-(m - 1)) for m in range(1, n + 1)) + 1 if n else 0
    if smax_step is not None:
        S = min(S, smax_step)
    S = max(S, -1)
    rows, tail = [], []
    if mode == "exact":
        nu = [model.pmf_exact(s + 1) for s in range(-1, S + 1)]
        rows.append([Fraction(1)] if upper[0] >= 0 else [])
        for m in range(1, n + 1):
            prev = rows[-1]
            width = upper[m] + m + 1
            row = [Fraction(0)] * max(width, 0)
            for i, pv in enumerate(prev):
                if not pv:
                    continue
                j = i - (m - 1)
                for si, q in enumerate(nu):
                    k = j + si - 1
                    if k > upper[m]:
                        break
                    if q:
                        row[k + m] += pv * q
            rows.append(row)
        tail = [1 - sum(r, Fraction(0)) for r in rows]
    else:
        nu = model.pmf(S + 1)
        rows.append(np.ones(1) if upper[0] >= 0 else np.zeros(0))
        for m in range(1, n + 1):
            width = upper[m] + m + 1
            conv = np.convolve(rows[-1], nu) if rows[-1].size else np.zeros(0)
            row = np.zeros(max(width, 0))
            w = min(width, conv.size)
            row[:w] = conv[:w]
            rows.append(row)
        tail = [max(0.0, 1.0 - float(r.sum())) for r in rows]
    return WalkLawTable(n, mode, upper, rows, tail)


def walk_law_row(model, n, kmax=None, eps=_TAIL_EPS):
    """Float law of ``W_n`` by FFT: returns ``(ks, probs)``.

    With ``kmax`` the offspring law is cut at ``kmax + n``, which leaves
    ``P(W_n = k)`` exact for ``k <= kmax`` (a larger step overshoots).
    Otherwise it is cut where its tail drops below ``eps`` and the
    neglected mass is at most ``n * eps``.
    """
    if kmax is not None:
        S = int(kmax) + n
    else:
        S = model.cutoff(eps)
        if S > _DENSE_MAX:
            raise ValueError(f"tail of {model} too heavy; pass kmax")
    mu = model.pmf(S)
    size = n * S + 1
    N = 1 << int(math.ceil(math.log2(size + 1)))
    phi = np.fft.rfft(mu, N)
    row = np.fft.irfft(phi ** n, N)[:size]
    ks = np.arange(size) - n
    row = np.clip(row, 0.0, None)
    if kmax is not None:
        keep = ks <= kmax
        return ks[keep], row[keep]
    return ks, row


def otter_check(model, p, mode=None):
    """``(p P(zeta = p), P(W_p = -1))`` computed by two separate DPs."""
    if p < 1:
        raise ValueError("p >= 1")
    if mode is None:
        mode = "exact" if model.exact else "float"
    one = Fraction(1) if mode == "exact" else 1.0
    pm = model.pmf_exact if mode == "exact" else (lambda k, _m=model.pmf(p): _m[k] if k < len(_m) else 0.0)
    # first passage below 0: walk kept on [0, p-1-m] at time m
    g = {0: one}
    for m in range(1, p):
        new = {}
        cap = p - 1 - m
        for j, v in g.items():
            for k in range(0, cap - j + 2):
                nj = j + k - 1
                if nj < 0 or nj > cap:
                    continue
                new[nj] = new.get(nj, 0 * one) + v * pm(k)
        g = new
    lhs = p * g.get(0, 0 * one) * pm(0)
    tab = walk_law_table(model, p, mode=mode, kmax=-1)
    rhs = tab.prob(p, -1)
    return lhs, rhs
