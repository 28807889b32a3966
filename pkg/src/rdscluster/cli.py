"""Command-line front end.

Subcommands: generate | sample | probs | fit | sweep | eval | study.
Common flags: --seed (controls all randomness), --out (output directory),
--quiet (warnings only).  Exit codes: 0 success, 1 runtime failure,
2 usage or configuration error.
"""

import argparse
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import fileio
from .evalmetrics import (
    DEFAULT_ALPHA_GRID,
    alpha_sweep,
    modularity,
    weighted_modularity,
    weighted_nmi,
)
from .mixfit import FitConfig, fit
from .netcore import RdsClusterError
from .probs import PAIR_MODES, ProbsConfig, estimate_probs
from .rds import RdsConfig, rds_sample
from .study import CASES, ModelSpec, StudyConfig, run_study
from .synth import case_config, generate_population

logger = logging.getLogger(__name__)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--quiet", action="store_true",
                   help="log warnings and errors only")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _models(text):
    """Parse 'weighted:1,unweighted:0.5,weighted:star' into ModelSpecs."""
    specs = []
    for part in text.split(","):
        mode, _, alpha = part.partition(":")
        if mode not in ("weighted", "unweighted") or not alpha:
            raise argparse.ArgumentTypeError(
                f"model must look like weighted:<alpha|star>, got {part!r}"
            )
        a = alpha if alpha == "star" else float(alpha)
        specs.append(ModelSpec(weighted=(mode == "weighted"), alpha=a))
    return specs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rdscluster",
        description="Cluster attributed networks observed through "
                    "respondent-driven sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic population")
    _add_common(p)
    p.add_argument("--case", choices=CASES, default="I")

    p = sub.add_parser("sample", help="trace an RDS sample from a population")
    _add_common(p)
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--n-target", type=int, required=True)
    p.add_argument("--num-seeds", type=int, default=3)
    p.add_argument("--max-coupons", type=int, default=3)
    p.add_argument("--recruit-dist", type=_floats, default=None,
                   help="comma list of probabilities over 0..max_coupons")
    p.add_argument("--no-reseed", action="store_true")

    p = sub.add_parser("probs", help="estimate inclusion probabilities")
    _add_common(p)
    p.add_argument("--recruit", required=True)
    p.add_argument("--n-assumed", type=int, required=True,
                   help="posited population size")
    p.add_argument("--num-sims", type=int, default=1000)
    p.add_argument("--num-iters", type=int, default=3)
    p.add_argument("--edge-sims", type=int, default=500)
    p.add_argument("--pair-mode", choices=PAIR_MODES, default="within_sim")
    p.add_argument("--num-seeds", type=int, default=3,
                   help="seed count of the design used in edge simulations")
    p.add_argument("--max-coupons", type=int, default=3)
    p.add_argument("--recruit-dist", type=_floats, default=None)

    p = sub.add_parser("fit", help="fit the mixture model to a sample")
    _add_common(p)
    p.add_argument("--recruit", required=True)
    p.add_argument("--probs", help="probs.json for weighted mode")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init", default="random")

    p = sub.add_parser("sweep", help="fit along a tuning-parameter grid")
    _add_common(p)
    p.add_argument("--recruit", required=True)
    p.add_argument("--probs")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--grid", type=_floats, default=None,
                   help="comma list of alpha values")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=500)

    p = sub.add_parser("eval", help="score a fit against a sample")
    _add_common(p)
    p.add_argument("--recruit", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--probs")

    p = sub.add_parser("study", help="run a replicated simulation study")
    _add_common(p)
    p.add_argument("--case", choices=CASES, default="I")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--models", type=_models,
                   default=[ModelSpec(False, 1.0), ModelSpec(True, 1.0)])
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--num-seeds", type=int, default=0)
    p.add_argument("--num-sims", type=int, default=800)
    p.add_argument("--edge-sims", type=int, default=300)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=250)
    p.add_argument("--init", default="kmeans")

    return parser


def _need_out(args, parser):
    if not args.out:
        parser.exit(2, parser.format_usage()
                    + "error: this command requires --out\n")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _rds_config(args, n_target):
    kwargs = {}
    if args.recruit_dist is not None:
        kwargs["recruit_dist"] = np.asarray(args.recruit_dist)
    return RdsConfig(
        n_target=n_target,
        num_seeds=args.num_seeds,
        max_coupons=args.max_coupons,
        rng_seed=args.seed,
        reseed=not getattr(args, "no_reseed", False),
        **kwargs,
    )


def cmd_generate(args, parser):
    out = _need_out(args, parser)
    cfg = case_config(args.case, rng_seed=args.seed)
    pop = generate_population(cfg)
    nodes = os.path.join(out, "nodes.csv")
    edges = os.path.join(out, "edges.csv")
    fileio.write_population(pop, nodes, edges)
    print(nodes)
    print(edges)
    return 0


def cmd_sample(args, parser):
    out = _need_out(args, parser)
    pop = fileio.read_population(args.nodes, args.edges)
    samp = rds_sample(pop, _rds_config(args, args.n_target))
    path = os.path.join(out, "recruit.csv")
    fileio.write_sample(samp, path)
    print(path)
    return 0


def cmd_probs(args, parser):
    out = _need_out(args, parser)
    samp = fileio.read_sample(args.recruit)
    rds_cfg = _rds_config(args, samp.n)
    cfg = ProbsConfig(
        N_assumed=args.n_assumed,
        num_sims=args.num_sims,
        num_iters=args.num_iters,
        edge_sims=args.edge_sims,
        rng_seed=args.seed,
        rds=rds_cfg,
        pair_mode=args.pair_mode,
    )
    probs = estimate_probs(samp, cfg)
    path = os.path.join(out, "probs.json")
    meta = {
        "N_assumed": cfg.N_assumed, "num_sims": cfg.num_sims,
        "num_iters": cfg.num_iters, "edge_sims": cfg.edge_sims,
        "rng_seed": cfg.rng_seed, "pair_mode": cfg.pair_mode,
    }
    fileio.write_probs(probs, path, config=meta)
    print(path)
    return 0


def cmd_fit(args, parser):
    out = _need_out(args, parser)
    if args.weighted and not args.probs:
        print("error: weighted mode requires --probs", file=sys.stderr)
        return 2
    samp = fileio.read_sample(args.recruit)
    probs = fileio.read_probs(args.probs)[0] if args.probs else None
    cfg = FitConfig(
        K=args.k, weighted=args.weighted, alpha=args.alpha,
        max_iter=args.max_iter, tol=args.tol, restarts=args.restarts,
        init=args.init, rng_seed=args.seed,
    )
    result = fit(samp, probs if args.weighted else None, cfg)
    path = os.path.join(out, "result.json")
    fileio.write_result(result, path, config=asdict(cfg))
    print(path)
    return 0


def cmd_sweep(args, parser):
    out = _need_out(args, parser)
    if args.weighted and not args.probs:
        print("error: weighted mode requires --probs", file=sys.stderr)
        return 2
    samp = fileio.read_sample(args.recruit)
    probs = fileio.read_probs(args.probs)[0] if args.probs else None
    cfg = FitConfig(
        K=args.k, weighted=args.weighted, restarts=args.restarts,
        max_iter=args.max_iter, rng_seed=args.seed,
    )
    grid = args.grid if args.grid is not None else DEFAULT_ALPHA_GRID
    report = alpha_sweep(samp, probs, cfg, grid)
    path = os.path.join(out, "sweep.csv")
    fileio.write_sweep(report, path)
    print(path)
    print(report.suggestion)
    return 0


def cmd_eval(args, parser):
    samp = fileio.read_sample(args.recruit)
    result, _ = fileio.read_result(args.result)
    labels = result.labels
    if labels.shape[0] != samp.n:
        raise RdsClusterError(
            f"result has {labels.shape[0]} labels but the sample has {samp.n}"
        )
    probs = fileio.read_probs(args.probs)[0] if args.probs else None
    if probs is not None:
        mod = weighted_modularity(samp, probs, labels)
    else:
        mod = modularity(samp.adjY, labels)
    wn = weighted_nmi(samp, probs, labels)
    print(f"modularity {mod!r}")
    print(f"nmi {wn.average!r}")
    for name in sorted(wn.per_feature):
        print(f"nmi_feature_{name} {wn.per_feature[name]!r}")
    return 0


def cmd_study(args, parser):
    out = _need_out(args, parser)
    cfg = StudyConfig(
        case=args.case, n=args.n, replications=args.reps,
        models=tuple(args.models), rng_seed=args.seed, workers=args.workers,
        num_seeds=args.num_seeds, num_sims=args.num_sims,
        edge_sims=args.edge_sims, restarts=args.restarts,
        max_iter=args.max_iter, init=args.init,
    )
    result = run_study(cfg)
    path = os.path.join(out, "study_summary.csv")
    fileio.write_study_summary(result.summary, path)
    print(path)
    if result.failures:
        print(f"excluded {result.failures} failed replications")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "probs": cmd_probs,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "eval": cmd_eval,
    "study": cmd_study,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args, parser)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RdsClusterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
