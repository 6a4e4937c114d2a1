"""Command-line front end: ``gwcrt <subcommand> [options]``.

Subcommands: sample-tree, sample-excursion, verify, converge, marginals.
Global flags: --seed, --threads, --format csv|json, --config <json>.
Floats are written with 17 significant digits.
"""
import argparse
import csv
import json
import os
import sys

import numpy as np

from . import levy
from .marginals import admissible_skeletons, mc_skeleton_estimate, skeleton_probability
from .offspring import parse_model
from .oracle import verify_identities
from .rng import make_rng
from .sampler import rescaled_bundle
from .study import StudyConfig, run_convergence_study, run_identity_suite

F = ".17g"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), F)
    return str(x)


def _emit_table(header, rows, fmt, out):
    if fmt == "json":
        json.dump([dict(zip(header, r)) for r in rows], out, indent=1)
        out.write("\n")
        return
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(x) for x in r])


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _model_arg(args, conf):
    name = args.model or conf.get("model")
    alpha = args.alpha if getattr(args, "alpha", None) is not None else conf.get("alpha")
    if name is None:
        name = "geometric" if alpha in (None, 2, 2.0) else f"stable:alpha={alpha}"
    if name == "stable" and alpha is not None:
        name = f"stable:alpha={alpha}"
    return name


# subcommands ---------------------------------------------------------------

def cmd_sample_tree(args, conf, out):
    model = parse_model(_model_arg(args, conf))
    p = args.p or conf.get("p")
    if p is None:
        raise SystemExit("sample-tree needs --p")
    bundles = [rescaled_bundle(model, int(p), make_rng(args.seed, 0, i)) for i in range(args.count)]
    if args.emit == "tree":
        for b in bundles:
            out.write(str(b.tree()) + "\n")
        return 0
    if args.format == "json":
        json.dump({"model": str(model), "p": int(p), "samples": [
            {"tree": str(b.tree()), "n": list(range(b.p + 1)),
             "W": b.excursion_walk.tolist(), "H": b.height.tolist(),
             "t": list(range(b.contour.shape[0])), "C": b.contour.tolist()}
            for b in bundles]}, out)
        out.write("\n")
        return 0
    # two tables: the walk and height indexed by n, then the contour by t
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["sample", "n", "W", "H"])
    for i, b in enumerate(bundles):
        for n in range(b.p + 1):
            wr.writerow([i, n, int(b.excursion_walk[n]), int(b.height[n])])
    out.write("\n")
    wr.writerow(["sample", "t", "C"])
    for i, b in enumerate(bundles):
        for t, c in enumerate(b.contour):
            wr.writerow([i, t, int(c)])
    return 0


def cmd_sample_excursion(args, conf, out):
    alpha = float(args.alpha if args.alpha is not None else conf.get("alpha", 2.0))
    n = int(args.n or conf.get("n", 1000))
    rng = make_rng(args.seed, 1)
    if args.method == "walk":
        path = levy.excursion_path(alpha, n, rng, method="vervaat")
    elif args.method == "chaumont":
        path = levy.vervaat_continuous(levy.bridge_path(alpha, n, rng, method="chaumont"))
    else:
        path = levy.excursion_path(alpha, n, rng, method="straddle")
    emit = [e.strip() for e in args.emit.split(",") if e.strip()]
    cols = {"t": path.times}
    if "path" in emit:
        cols["path"] = path.values
    if "height" in emit:
        cols["height"] = levy.height_estimate(path, args.eps, alpha).values
    header = list(cols)
    rows = list(zip(*(cols[h] for h in header)))
    _emit_table(header, rows, args.format, out)
    return 0


def cmd_verify(args, conf, out):
    model = parse_model(_model_arg(args, conf))
    pmax = int(args.pmax or conf.get("pmax", 8))
    if args.suite:
        status, text = run_identity_suite(StudyConfig(model=str(_model_arg(args, conf))), pmax)
        out.write(text + "\n")
        return status
    names = args.identities.split(",") if args.identities else None
    rep = verify_identities(model, pmax, max(pmax, int(args.otter_max)), names)
    if args.format == "json":
        json.dump([{"identity": r.identity, "p": r.p, "atoms": r.atoms, "ok": r.ok,
                    "mismatches": [[str(k), str(a), str(b)] for k, a, b in r.mismatches]}
                   for r in rep.rows], out, indent=1)
        out.write("\n")
    else:
        out.write(rep.table() + "\n")
    return 0 if rep.ok else 1


def cmd_converge(args, conf, out):
    d = dict(conf)
    d["model"] = _model_arg(args, conf)
    d.pop("alpha", None)
    if args.ladder:
        d["p_ladder"] = [int(x) for x in args.ladder.split(",")]
    if args.reps:
        d["replicates"] = args.reps
    if args.times:
        d["times"] = [float(x) for x in args.times.split(",")]
    d["seed"] = args.seed if args.seed is not None else d.get("seed", 0)
    if args.output:
        d["output"] = args.output
    cfg = StudyConfig.from_dict(d)
    res = run_convergence_study(cfg)
    if args.format == "json":
        out.write(res.to_json() + "\n")
    else:
        out.write(res.to_csv())
    return 0


def _parse_mc(s):
    out = {}
    for kv in s.split(","):
        k, _, v = kv.partition("=")
        out[k.strip()] = int(float(v))
    return out


def cmd_marginals(args, conf, out):
    alpha = float(args.alpha if args.alpha is not None else conf.get("alpha", 1.5))
    k = int(args.k or conf.get("k", 3))
    skels = admissible_skeletons(k)
    header = ["skeleton", "closed_form", "mc_freq", "mc_stderr"]
    est = None
    if args.mc:
        mc = _parse_mc(args.mc)
        model = parse_model("geometric" if alpha == 2.0 else f"stable:alpha={alpha}")
        est = mc_skeleton_estimate(model, mc.get("p", 20000), k, mc.get("reps", 20000),
                                   make_rng(args.seed, 2))
    rows = []
    for s in skels:
        cf = skeleton_probability(s, alpha, k)
        if est is None:
            rows.append((str(s), cf, float("nan"), float("nan")))
        else:
            rows.append((str(s), cf, est.freq(s), est.stderr(s)))
    if est is not None:
        keys = {str(s) for s in skels}
        for key in sorted(set(est.counts) - keys):
            rows.append((key, 0.0, est.freq(key), est.stderr(key)))
    _emit_table(header, rows, args.format, out)
    return 0


def _global_flags(ap, suppress):
    # accepted before or after the subcommand; the subcommand copy only
    # overrides when given
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    ap.add_argument("--seed", type=int, default=d(0))
    ap.add_argument("--threads", type=int, default=d(1),
                    help="accepted for compatibility; kernels run on one core")
    ap.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    ap.add_argument("--config", default=d(None), help="JSON file with study/config fields")


def build_parser():
    ap = argparse.ArgumentParser(prog="gwcrt", description=__doc__.splitlines()[0])
    _global_flags(ap, False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, True)
    sub = ap.add_subparsers(dest="cmd", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("sample-tree", help="conditioned Galton-Watson trees")
    s.add_argument("--model")
    s.add_argument("--alpha", type=float)
    s.add_argument("--p", type=int)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--emit", choices=("table", "tree"), default="table",
                   help="coding columns (n, W, H) and (t, C), or preorder child counts")
    s.set_defaults(func=cmd_sample_tree)

    s = sub.add_parser("sample-excursion", help="normalised stable excursion on a grid")
    s.add_argument("--alpha", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--method", choices=("walk", "chaumont", "straddle"), default="walk")
    s.add_argument("--emit", default="height,path")
    s.add_argument("--eps", type=float)
    s.set_defaults(func=cmd_sample_excursion)

    s = sub.add_parser("verify", help="exact identity checks")
    s.add_argument("--model")
    s.add_argument("--alpha", type=float)
    s.add_argument("--pmax", type=int)
    s.add_argument("--otter-max", type=int, default=12)
    s.add_argument("--identities")
    s.add_argument("--suite", action="store_true", help="run the full identity suite")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("converge", help="convergence study along a p ladder")
    s.add_argument("--model")
    s.add_argument("--alpha", type=float)
    s.add_argument("--ladder")
    s.add_argument("--reps", type=int)
    s.add_argument("--times")
    s.add_argument("--output")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("marginals", help="skeleton law of the k-th marginal")
    s.add_argument("--alpha", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--mc", help="p=20000,reps=20000")
    s.set_defaults(func=cmd_marginals)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    conf = _load_config(args.config)
    if args.threads < 1:
        raise SystemExit("--threads must be >= 1")
    try:
        return args.func(args, conf, out)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return 0


if __name__ == "__main__":
    sys.exit(main())
