"""Spectrally positive stable paths on a grid and their functionals.

Convention: Laplace exponent psi(lambda) = lambda^alpha, i.e.
E exp(-lambda X_t) = exp(t lambda^alpha).  At alpha = 2 this makes X a
Brownian motion with variance 2t (sqrt(2) times a standard one).

A :class:`GridPath` holds the values ``x[0..n]`` at times ``j T / n``.
A "jump at j" is the increment ``x[j] - x[j-1]``.  For alpha < 2 the local
time and height are approximated by counting increments larger than eps,
normalised by ``beta_eps = alpha / (Gamma(2 - alpha) eps^(alpha - 1))``;
for alpha = 2 the exact expressions ``L = S`` and ``H = X - I`` are used.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate
from scipy.special import gamma

from ._jit import njit
from .offspring import geometric_offspring, stable_offspring
from .paths import _kargmin
from .rng import as_rng
from .sampler import get_sampler


@dataclass(frozen=True)
class StableModel:
    alpha: float

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError("alpha must lie in (1, 2]")

    @property
    def brownian(self):
        return self.alpha == 2.0

    def psi(self, lam):
        return np.asarray(lam, dtype=float) ** self.alpha

    def levy_density(self, r):
        """Density of the Levy measure, ``alpha(alpha-1)/Gamma(2-alpha) r^(-alpha-1)``."""
        if self.brownian:
            return np.zeros_like(np.asarray(r, dtype=float))
        a = self.alpha
        return a * (a - 1) / gamma(2 - a) * np.asarray(r, dtype=float) ** (-a - 1)

    def beta_eps(self, eps):
        if self.brownian:
            raise ValueError("no jump normalisation at alpha = 2")
        if eps <= 0:
            raise ValueError("eps must be positive")
        a = self.alpha
        return a / (gamma(2 - a) * eps ** (a - 1))

    def offspring(self):
        """Offspring law whose walk is attracted to this process."""
        return geometric_offspring() if self.brownian else stable_offspring(self.alpha)


@dataclass
class GridPath:
    """Values ``x[0..n]`` on the uniform grid of ``[0, horizon]``."""

    horizon: float
    values: np.ndarray
    defect: float = 0.0   # known endpoint error of a bridge/excursion

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("a grid path needs at least two values")
        # sampled paths start at 0; derived processes such as M need not
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid path values must be finite")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def n(self):
        return self.values.shape[0] - 1

    @property
    def increments(self):
        return np.diff(self.values)

    @property
    def times(self):
        return np.linspace(0.0, self.horizon, self.n + 1)

    def index(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.floor(t * self.n / self.horizon + 1e-9).astype(np.int64), 0, self.n)

    def at(self, t):
        """Value at time t (right-continuous step interpolation)."""
        return self.values[self.index(t)]


def default_eps(n, alpha, horizon=1.0):
    """``horizon^(1/alpha) * n^(-1/(2 alpha))``.

    With horizon 1 this is ``n^(-1/(2 alpha))``: much larger than the
    increment scale ``n^(-1/alpha)``.  The horizon factor makes the estimator
    commute with the scaling of X (same n, longer horizon = rescaled path).
    """
    return horizon ** (1.0 / alpha) * n ** (-1.0 / (2.0 * alpha))


# kernels -----------------------------------------------------------------

@njit
def _stable_increments(alpha, n, scale, rng):
    # Chambers-Mallows-Stuck with skewness +1, scaled so that
    # E exp(-lambda X) = exp(lambda^alpha); the two scale factors cancel
    out = np.empty(n)
    b = (0.5 * np.pi * alpha - np.pi) / alpha
    ia = 1.0 / alpha
    ex = (1.0 - alpha) / alpha
    for i in range(n):
        v = np.pi * (rng.random() - 0.5)
        w = rng.exponential()
        a = alpha * (v + b)
        out[i] = scale * math.sin(a) / math.cos(v) ** ia * (math.cos(v - a) / w) ** ex
    return out


@njit
def _height_counts(x, eps, tol):
    # number of u <= t with x[u] - x[u-1] > eps and x[u-1] < min x[u..t];
    # values within tol count as equal
    n = x.shape[0] - 1
    out = np.zeros(n + 1, dtype=np.int64)
    lev = np.empty(n + 1)
    top = 0
    for t in range(1, n + 1):
        while top > 0 and lev[top - 1] >= x[t] - tol:
            top -= 1
        if x[t] - x[t - 1] > eps:
            lev[top] = x[t - 1]
            top += 1
        out[t] = top
    return out


@njit
def _ladder_jump_counts(x, eps, tol):
    # cumulative number of increments > eps that reach a new supremum
    n = x.shape[0] - 1
    out = np.zeros(n + 1, dtype=np.int64)
    best = x[0]
    c = 0
    for t in range(1, n + 1):
        if x[t] - x[t - 1] > eps and x[t] > best + tol:
            c += 1
        if x[t] > best + tol:
            best = x[t]
        out[t] = c
    return out


@njit
def _running_min(x):
    out = np.empty_like(x)
    m = x[0]
    for i in range(x.shape[0]):
        if x[i] < m:
            m = x[i]
        out[i] = m
    return out


@njit
def _running_max(x):
    out = np.empty_like(x)
    m = x[0]
    for i in range(x.shape[0]):
        if x[i] > m:
            m = x[i]
        out[i] = m
    return out


@njit
def _m_counts(x, eps, tol):
    # M_t = L_1(Xhat) - L_{1 ^ T(-I_t)-}(Xhat), L as raw jump counts; the
    # jump of Xhat that passes the level strictly has the pre-jump value of X
    # below x[n] + I_t, so it is counted
    n = x.shape[0] - 1
    xh = np.empty(n + 1)
    for k in range(n + 1):
        xh[k] = x[n] - x[n - k]
    lad = _ladder_jump_counts(xh, eps, tol)
    low = _running_min(x)
    m = np.empty(n + 1, dtype=np.int64)
    k = 0
    for t in range(n + 1):
        level = -low[t]
        while k <= n and xh[k] <= level + tol:
            k += 1
        if k > n:
            m[t] = 0
        else:
            m[t] = lad[n] - lad[max(k - 1, 0)]
    return m


@njit
def _vervaat_values(x, g):
    z = x.shape[0] - 1
    low = x[g]
    v = np.empty(z + 1)
    for k in range(z + 1):
        if k <= z - g:
            v[k] = x[k + g] - low
        else:
            v[k] = x[k + g - z] + x[z] - low - x[0]
    return v


# sampling ----------------------------------------------------------------

def _model(model):
    return model if isinstance(model, StableModel) else StableModel(float(model))


def sample_stable_path(model, T, n, rng):
    """X on ``[0, T]`` at ``n + 1`` grid points."""
    model = _model(model)
    if n < 1:
        raise ValueError("n >= 1")
    inc = _stable_increments(model.alpha, int(n), (T / n) ** (1.0 / model.alpha), as_rng(rng))
    x = np.zeros(n + 1)
    np.cumsum(inc, out=x[1:])
    return GridPath(float(T), x)


def _walk_bridge(model, n, rng):
    off = model.offspring()
    k = get_sampler(off, int(n)).bridge_children(rng)
    a = off.norming(n)
    # integer partial sums first, so equal lattice points are equal floats
    s = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(k - 1, out=s[1:])
    return GridPath(1.0, s / a, defect=1.0 / a)


def _chaumont_bridge(model, n, rng, oversample=4):
    # last zero of X on [0, 1] (fine grid), then rescale; short G are
    # redrawn, which leaves the law of the rescaled path unchanged because it
    # is independent of G.  A zero is a sign change with the path within one
    # increment scale of 0: an upward jump across 0 does not visit 0.
    N = oversample * n
    delta = (1.0 / N) ** (1.0 / model.alpha)
    while True:
        x = sample_stable_path(model, 1.0, N, rng).values
        near = np.minimum(np.abs(x[:-1]), np.abs(x[1:])) <= delta
        sc = np.flatnonzero((x[:-1] * x[1:] <= 0.0) & near)
        if sc.size == 0:
            continue
        j = sc[-1]
        g = j if abs(x[j]) <= abs(x[j + 1]) else j + 1
        if g < n:
            continue
        G = g / N
        idx = np.floor(np.arange(n + 1) * g / n).astype(np.int64)
        y = x[idx] * G ** (-1.0 / model.alpha)
        d = abs(y[-1])
        y[-1] = 0.0
        return GridPath(1.0, y, defect=d)


def bridge_path(model, n, rng, method="walk"):
    """Grid approximation of the stable bridge X^br on [0, 1]."""
    model = _model(model)
    rng = as_rng(rng)
    if method == "walk":
        return _walk_bridge(model, n, rng)
    if method == "chaumont":
        return _chaumont_bridge(model, n, rng)
    raise ValueError(method)


def vervaat_continuous(path, at=None):
    """Rotation at the first time the path attains its minimum.

    ``at`` overrides the rotation index (it must be a minimum of the path
    for the result to start at its minimum).
    """
    x = np.asarray(path.values, dtype=float)
    g = _kargmin(x) if at is None else int(at)
    if not 0 <= g <= x.shape[0] - 1:
        raise IndexError(g)
    return GridPath(path.horizon, _vervaat_values(x, g), path.defect)


def _straddle_excursion(model, n, rng, oversample=8, cap=64.0):
    # the excursion of X - I straddling 1.  Its right end has a heavy tail,
    # so draws ending after `cap` are redrawn; the normalised shape is
    # independent of (g, d), so this leaves its law unchanged
    N = oversample * n
    dt = 1.0 / N
    d = None
    while d is None:
        x = sample_stable_path(model, 2.0, 2 * N, rng).values
        low = _running_min(x)
        i1 = N
        g = np.flatnonzero(x[: i1 + 1] <= low[: i1 + 1])[-1]
        while True:
            after = np.flatnonzero(x[i1 + 1:] <= low[i1:-1])
            if after.size:
                d = i1 + 1 + after[0]
                break
            if x.size * dt >= cap:
                break
            more = sample_stable_path(model, x.size * dt, x.size, rng).values + x[-1]
            x = np.concatenate([x, more[1:]])
            low = _running_min(x)
    zeta = (d - g) * dt
    idx = g + np.floor(np.arange(n + 1) * (d - g) / n).astype(np.int64)
    y = (x[idx] - x[g]) * zeta ** (-1.0 / model.alpha)
    defect = max(0.0, -y.min())
    y = np.maximum(y, 0.0)
    y[-1] = 0.0
    return GridPath(1.0, y, defect=defect)


def excursion_path(model, n, rng, method="vervaat"):
    """Normalised excursion: V(bridge) or the rescaled excursion straddling 1."""
    model = _model(model)
    rng = as_rng(rng)
    if method == "vervaat":
        return vervaat_continuous(_walk_bridge(model, n, rng))
    if method == "straddle":
        return _straddle_excursion(model, n, rng)
    raise ValueError(method)


def excursion_lengths(model, T, n, rng):
    """Lengths of the excursions of X - I on a grid path, and -I_T.

    The number of excursions longer than t per unit of local time -I
    estimates N(zeta > t) = t^(-1/alpha) / Gamma(1 - 1/alpha).  The last
    excursion, still running at T, enters with its length so far: it is
    longer than t whenever that is, so tail counts stay unbiased.
    """
    model = _model(model)
    x = sample_stable_path(model, T, n, rng).values
    low = _running_min(x)
    at_min = np.flatnonzero(x <= low)
    dt = T / n
    lengths = np.diff(np.append(at_min, n)) * dt
    return lengths[lengths > dt], float(-low[-1])


# estimators ------------------------------------------------------------------

def _tol(x):
    return 1e-9 * (float(np.ptp(x)) + 1e-300)


def _eps(path, eps, model):
    if eps is None:
        return default_eps(path.n, model.alpha, path.horizon)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return float(eps)


def height_estimate(path, eps=None, model=None):
    """Height process of a grid path (``X - I`` at alpha = 2)."""
    model = _model(model if model is not None else 2.0)
    x = np.asarray(path.values, dtype=float)
    if model.brownian:
        return GridPath(path.horizon, x - _running_min(x))
    e = _eps(path, eps, model)
    return GridPath(path.horizon, _height_counts(x, e, _tol(x)) / model.beta_eps(e))


def local_time_estimate(path, eps=None, model=None):
    """Local time at the supremum (``S`` at alpha = 2)."""
    model = _model(model if model is not None else 2.0)
    x = np.asarray(path.values, dtype=float)
    if model.brownian:
        return GridPath(path.horizon, _running_max(x))
    e = _eps(path, eps, model)
    return GridPath(path.horizon, _ladder_jump_counts(x, e, _tol(x)) / model.beta_eps(e))


def b_and_m(bridge, eps=None, model=None):
    """``(B, M)`` for a bridge on [0, 1].

    ``B(x) = L_1(Xhat) - L_{1 ^ T_x(Xhat)}(Xhat)`` with Xhat the reversed
    bridge, and ``M_t = B(-inf_{[0,t]} X)``.  At alpha = 2 the closed forms
    ``B(x) = (-x - I_1)_+`` and ``M_t = I_t - I_1`` are used.
    """
    model = _model(model if model is not None else 2.0)
    x = np.asarray(bridge.values, dtype=float)
    n = x.shape[0] - 1
    low = _running_min(x)
    if model.brownian:
        i1 = low[-1]

        def B(level):
            return np.maximum(-np.asarray(level, dtype=float) - i1, 0.0)

        return B, GridPath(bridge.horizon, low - i1)
    e = _eps(bridge, eps, model)
    beta = model.beta_eps(e)
    xh = x[n] - x[::-1]
    tol = _tol(x)
    lad = _ladder_jump_counts(xh, e, tol)
    runmax = _running_max(xh)

    def B(level):
        lv = np.asarray(level, dtype=float)
        # first index where Xhat passes the level strictly
        k = np.searchsorted(runmax, lv + tol, side="right")
        c = lad[n] - lad[np.clip(k - 1, 0, n)]
        return np.where(k > n, 0, c) / beta

    return B, GridPath(bridge.horizon, _m_counts(x, e, tol) / beta)


def excursion_height_from_bridge(bridge, eps=None, model=None):
    """``V(M + H^br)`` with the rotation at the first minimum of the bridge.

    The eps-estimate of ``M + H^br`` vanishes on whole intervals before the
    bridge minimum (no surviving jump above eps), whereas its limit vanishes
    only there; rotating at the bridge minimum keeps the estimator consistent.
    """
    model = _model(model if model is not None else 2.0)
    x = np.asarray(bridge.values, dtype=float)
    g = _kargmin(x)
    if model.brownian:
        _, M = b_and_m(bridge, eps, model)
        v = _vervaat_values(M.values + height_estimate(bridge, eps, model).values, g)
    else:
        # rotate the integer counts and normalise last, so that the result
        # sits exactly on the lattice of height_estimate (no 1-ulp split atoms)
        e = _eps(bridge, eps, model)
        tol = _tol(x)
        c = (_m_counts(x, e, tol) + _height_counts(x, e, tol)).astype(float)
        v = _vervaat_values(c, g) / model.beta_eps(e)
    # the rotation carries the walk's endpoint defect; an excursion height
    # vanishes at the end, as in the discrete padding
    v[-1] = 0.0
    return GridPath(bridge.horizon, v)


# densities -------------------------------------------------------------------

def stable_density(model, t, x):
    """Density ``p_t(x)`` of X_t.

    Closed form at alpha = 2; otherwise Fourier inversion
    ``p_t(x) = (1/pi) int_0^inf exp(t c th^a) cos(th x + t s th^a) dth``
    with ``c = cos(pi a / 2)``, ``s = sin(pi a / 2)``.
    """
    model = _model(model)
    if t <= 0:
        raise ValueError("t must be positive")
    xs = np.asarray(x, dtype=float)
    if model.brownian:
        return np.exp(-xs ** 2 / (4 * t)) / math.sqrt(4 * math.pi * t)
    return _fourier_density(model.alpha, t, xs)


def _fourier_density(a, t, xs):
    c = math.cos(math.pi * a / 2)
    s = math.sin(math.pi * a / 2)
    # integrand is negligible once t |c| th^a > 50
    top = (50.0 / (t * abs(c))) ** (1.0 / a)

    def one(x):
        f = lambda th: math.exp(t * c * th ** a) * math.cos(th * x + t * s * th ** a)
        val, _ = integrate.quad(f, 0.0, top, limit=2000, epsabs=1e-13, epsrel=1e-12)
        return val / math.pi

    out = np.vectorize(one, otypes=[float])(xs)
    return out if out.ndim else float(out)
