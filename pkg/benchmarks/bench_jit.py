"""Compiled kernels against the pure python fallback.

The same cases run in two child processes, one with numba and one with
``GWCRT_NO_JIT=1`` (every kernel, including the ones it calls, left as plain
python).  Each child prints a checksum of its results next to the timings, and
the parent refuses to report a speedup when the checksums differ.  Compilation
happens on a warm-up call that is not timed.

    python3 benchmarks/bench_jit.py [--repeat 3] [--quick]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _cases(quick):
    from gwcrt import levy, paths, sampler, trees
    from gwcrt.marginals import sample_reduced_trees
    from gwcrt.offspring import stable_offspring
    from gwcrt.oracle import bookkeeping_sweep
    from gwcrt.rng import make_rng

    n = 20_000 if quick else 200_000
    m = stable_offspring(1.5)
    s = sampler.get_sampler(m, n)
    k = s.bridge_children(make_rng(1))
    w = np.concatenate([[0], np.cumsum(k - 1)]).astype(np.int64)
    h = trees._height_from_children(sampler._vervaat_children(k))
    x = levy.bridge_path(1.5, n, make_rng(0)).values
    eps, tol = levy.default_eps(n, 1.5), levy._tol(x)
    return [
        ("height_from_walk", lambda: paths.height_from_walk(w)),
        ("m_process", lambda: paths.m_process(w)),
        ("vervaat_discrete", lambda: paths.vervaat_discrete(w).values),
        ("contour_from_height", lambda: trees._contour_from_height(h)),
        ("eps_height_counts", lambda: levy._height_counts(x, eps, tol)),
        ("eps_m_counts", lambda: levy._m_counts(x, eps, tol)),
        ("bridge_renewal", lambda: s.bridge_children(make_rng(2))),
        ("reduced_trees_k3", lambda: np.array([sum(t.lifetimes) for t in sample_reduced_trees(
            m, 2000 if quick else 20_000, 3, 20, make_rng(3), rescale=False)])),
        ("bookkeeping_z7", lambda: np.array([r[:5] for r in bookkeeping_sweep(7, 5, 3)])),
    ]


def _child(quick, repeat):
    from gwcrt._jit import JIT_ENABLED
    out = {"jit": JIT_ENABLED, "rows": []}
    for name, f in _cases(quick):
        r = f()                   # warm-up, compiles under numba
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            f()
            times.append(time.perf_counter() - t0)
        out["rows"].append([name, min(times), float(np.sum(np.asarray(r, dtype=float)))])
    print(json.dumps(out))


def _run(no_jit, args):
    env = dict(os.environ)
    env.pop("GWCRT_NO_JIT", None)
    if no_jit:
        env["GWCRT_NO_JIT"] = "1"
    cmd = [sys.executable, __file__, "--child", "--repeat", str(args.repeat if not no_jit else 1)]
    if args.quick:
        cmd.append("--quick")
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        _child(args.quick, args.repeat)
        return
    fast = _run(False, args)
    slow = _run(True, args)
    if not fast["jit"] or slow["jit"]:
        raise SystemExit("numba unavailable: nothing to compare")
    print(f"{'kernel':<22} {'jit [s]':>10} {'python [s]':>11} {'speedup':>9}")
    for (name, tj, cj), (_, tp, cp) in zip(fast["rows"], slow["rows"]):
        if not np.isclose(cj, cp, rtol=1e-12, atol=0):
            raise SystemExit(f"{name}: compiled and python results differ ({cj} vs {cp})")
        print(f"{name:<22} {tj:>10.5f} {tp:>11.4f} {tp / tj:>8.0f}x")


if __name__ == "__main__":
    main()
