"""Convergence studies and the exact identity suite.

A study samples ``(a_p / p) H_[pt]`` for conditioned trees along a ladder of
sizes p and compares every rung with an independent run at the largest p
(the reference stands in for the limit object).  Streams are keyed by
``(seed, rung, batch)`` so results do not depend on batching or on which
rungs are run.
"""
from dataclasses import asdict, dataclass, field
from fractions import Fraction
import io
import json

import numpy as np

from . import levy
from . import trees as T
from .marginals import skeleton_law
from .offspring import parse_model
from .oracle import bookkeeping_sweep, enumerate_trees, verify_identities
from .paths import height_from_walk
from .rng import make_rng
from .sampler import get_sampler
from .stats import ks_two_sample, strictly_decreasing

REF_RUNG = 10**6   # stream key of the reference run


@dataclass
class StudyConfig:
    model: str = "geometric"
    alpha: float = None
    p_ladder: list = field(default_factory=lambda: [100, 1000, 10000])
    replicates: int = 10000
    ref_replicates: int = None
    times: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    seed: int = 0
    output: str = None
    thresholds: dict = field(default_factory=lambda: {"ks_pvalue": 0.01})
    batch: int = 1000

    def __post_init__(self):
        self.p_ladder = [int(p) for p in self.p_ladder]
        self.times = [float(t) for t in self.times]
        if not self.p_ladder or any(a >= b for a, b in zip(self.p_ladder[:-1], self.p_ladder[1:])):
            raise ValueError("p_ladder must be strictly increasing")
        if int(self.replicates) < 1:
            raise ValueError("replicates must be >= 1")
        if any(not 0.0 <= t <= 1.0 for t in self.times):
            raise ValueError("times must lie in [0, 1]")
        if self.ref_replicates is None:
            self.ref_replicates = self.replicates
        if self.alpha is not None and self.model == "stable":
            self.model = f"stable:alpha={self.alpha}"

    @property
    def offspring(self):
        return parse_model(self.model)

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**known)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


def conditioned_heights(model, p, times, reps, seed, rung, batch=1000):
    """``(a_p/p) H_[pt]`` samples (reps x len(times)) and the contour gaps."""
    samp = get_sampler(model, int(p))
    idx = np.minimum(np.floor(np.asarray(times) * p + 1e-9).astype(np.int64), p)
    scale = model.norming(p) / p
    hs, gs = [], []
    for b, start in enumerate(range(0, reps, batch)):
        n = min(batch, reps - start)
        h, g = samp.heights(n, idx, make_rng(seed, rung, b))
        hs.append(h)
        gs.append(g)
    return scale * np.concatenate(hs).astype(float), scale * np.concatenate(gs).astype(float)


@dataclass
class ConvergenceResult:
    config: StudyConfig
    rows: list            # (p, t, ks_stat, ks_pvalue, n_samples)
    gap_q99: dict         # p -> 99th percentile of the contour/height sup gap

    def ks(self, t):
        return [r[2] for r in self.rows if r[1] == t]

    def trend(self):
        """Per time: is the KS statistic strictly decreasing along the ladder?"""
        return {t: strictly_decreasing(self.ks(t)) for t in self.config.times}

    def gap_trend(self):
        return strictly_decreasing(self.gap_q99[p] for p in self.config.p_ladder)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("p,t,ks_stat,ks_pvalue,n_samples\n")
        for p, t, s, pv, n in self.rows:
            buf.write(f"{p},{t:.17g},{s:.17g},{pv:.17g},{n}\n")
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "config": self.config.to_dict(),
            "rows": [dict(zip(("p", "t", "ks_stat", "ks_pvalue", "n_samples"), r)) for r in self.rows],
            "gap_q99": {str(k): v for k, v in self.gap_q99.items()},
            "trend": {str(k): v for k, v in self.trend().items()},
        }, indent=1)


def run_convergence_study(cfg):
    model = cfg.offspring
    pmax = cfg.p_ladder[-1]
    ref, _ = conditioned_heights(model, pmax, cfg.times, cfg.ref_replicates, cfg.seed, REF_RUNG, cfg.batch)
    rows, gaps = [], {}
    for rung, p in enumerate(cfg.p_ladder):
        h, g = conditioned_heights(model, p, cfg.times, cfg.replicates, cfg.seed, rung, cfg.batch)
        gaps[p] = float(np.quantile(g, 0.99))
        for j, t in enumerate(cfg.times):
            s, pv = ks_two_sample(h[:, j], ref[:, j])
            rows.append((p, t, s, pv, h.shape[0]))
    res = ConvergenceResult(cfg, rows, gaps)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(res.to_csv())
    return res


def brownian_excursion_marginal(t, n, reps, rng):
    """``X^exc_t`` for alpha = 2 from Gaussian bridges and the continuous Vervaat map.

    Under psi(l) = l^2, X is sqrt(2) times a standard Brownian motion, so
    this is sqrt(2) times the normalised Brownian excursion at t.
    """
    out = np.empty(reps)
    grid = np.linspace(0.0, 1.0, n + 1)
    for r in range(reps):
        x = levy.sample_stable_path(2.0, 1.0, n, rng).values
        br = levy.GridPath(1.0, x - grid * x[-1])
        out[r] = levy.vervaat_continuous(br).at(t)
    return out


# identity suite ----------------------------------------------------------------

def _round_trips(zmax=10):
    bad = 0
    count = 0
    for z in range(1, zmax + 1):
        for t in enumerate_trees(z):
            count += 1
            h = T.height_process(t)
            w = T.lukasiewicz_walk(t)
            ok = (T.tree_from_height(h) == t and T.tree_from_walk(w) == t
                  and np.array_equal(height_from_walk(w)[:-1], h)
                  and np.array_equal(T.contour_from_height(h), T.contour_process(t)))
            bad += not ok
    return count, bad


def _skeleton_sums():
    out = []
    for a in (1.2, 1.5, 1.8, 2.0):
        for k in (2, 3):
            out.append((a, k, sum(skeleton_law(a, k, exact=True).values()) == Fraction(1)))
        out.append((a, 4, abs(sum(skeleton_law(a, 4).values()) - 1.0) < 1e-9))
    return out


def run_identity_suite(cfg=None, p_max=8, otter_max=12, out=None):
    """Exhaustive checks; returns ``(exit_status, report_text)``."""
    model = parse_model(cfg.model) if cfg is not None else parse_model("geometric")
    lines = []
    rep = verify_identities(model, p_max, otter_max)
    lines.append(rep.table())
    ok = rep.ok
    lines.append("")
    lines.append(f"{'bookkeeping z':<14} {'steps<=':>7} {'paths':>9} {'(n,m)':>11}  result")
    for z, smax, paths, checks, bad, path in bookkeeping_sweep():
        ok &= bad == 0
        lines.append(f"{z:<14} {smax:>7} {paths:>9} {checks:>11}  {'pass' if not bad else 'FAIL ' + str(path)}")
    count, bad = _round_trips()
    ok &= bad == 0
    lines.append("")
    lines.append(f"coding round trips: {count} trees, {bad} failures")
    for a, k, good in _skeleton_sums():
        ok &= good
        lines.append(f"skeleton sum alpha={a:g} k={k}: {'pass' if good else 'FAIL'}")
    text = "\n".join(lines)
    if out is not None:
        out.write(text + "\n")
    return (0 if ok else 1), text
