"""Command-line entry point: ``fjlr simulate | optimize | synth | analyze``.

Inputs that are not given as files are generated from ``--seed``. Every
command writes a JSON report (``report.json``) into ``--out`` and prints it
to stdout. Exit status: 0 on success, 2 for invalid input, 3 when a solver
fails to converge or a system is singular.

The environment variable ``FJLR_NUM_THREADS`` caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import degree_increase_rate, grouped_stats, influence_scores, rank_correlation, topic_table
from .baselines import BL1_SELECTIONS, run_baseline
from .errors import ConditioningError, ConvergenceError, FJError, ParseError, ValidationError
from .fj import equilibrium_exact, indices, read_opinions, write_opinions
from .gdpm import GdpmConfig, optimize, reduction_ratio, trace_csv
from .graph import read_edge_list, write_edge_list
from .model import (
    LowRankModel,
    augmented_indices,
    bounds_from_theta,
    estimate_opinions,
    format_matrix,
    read_matrix,
    spectral_condition,
    write_matrix,
)
from .synth import OPINION_DISTS, SynthConfig, gen_graph, gen_opinions, gen_X, gen_Y

SCHEMA_VERSION = 1
THREADS_ENV = "FJLR_NUM_THREADS"

log = logging.getLogger("fjlowrank")


def _topics(text):
    if text is None or text == "":
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated topic ids, got {text!r}") from None


def _learning_rate(text):
    if text == "theory":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("learning rate must be a number or 'theory'") from None


def build_parser():
    p = argparse.ArgumentParser(prog="fjlr", description="Timeline-augmented Friedkin-Johnsen toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--graph", type=Path, help="edge list 'u v [w]', 0-based ids")
        sp.add_argument("--opinions", type=Path, help="one innate opinion per line")
        sp.add_argument("--x", type=Path, help="user-topic matrix (TSV)")
        sp.add_argument("--y", type=Path, help="influence-topic matrix (TSV)")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--n", type=int, default=1000, help="users to synthesize when no graph is given")
        sp.add_argument("--k", type=int, default=20, help="topics to synthesize when no X is given")
        sp.add_argument("--opinion-dist", choices=OPINION_DISTS, default="polarized")
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--omit-timings", action="store_true", help="zero all wall times for byte-stable output")
        sp.add_argument("-v", "--verbose", action="store_true")
        if model:
            sp.add_argument("--c", type=float, default=0.1, help="timeline weight fraction C")
            sp.add_argument("--eps", type=float, default=1e-6, help="accuracy of objective and gradient")

    sp = sub.add_parser("simulate", help="indices on G and on G plus the timeline edges")
    common(sp)

    sp = sub.add_parser("optimize", help="re-weight X to reduce the index")
    common(sp)
    sp.add_argument("--theta", type=float, default=0.1)
    sp.add_argument("--algo", choices=("gdpm", "bl1", "bl2"), default="gdpm")
    sp.add_argument("--learning-rate", type=_learning_rate, default=10.0)
    sp.add_argument("--iters", type=int, help="iterations (default 100 for gdpm, 10 for baselines)")
    sp.add_argument("--frozen-topics", type=_topics, default=[])
    sp.add_argument("--bl1-selection", choices=BL1_SELECTIONS, default="as_listed")
    sp.add_argument("--track-objective", action="store_true")

    sp = sub.add_parser("synth", help="write a synthetic instance")
    common(sp, model=False)

    sp = sub.add_parser("analyze", help="topic and degree statistics for an optimized X")
    common(sp)
    sp.add_argument("--x-after", type=Path, required=True, help="optimized user-topic matrix (TSV)")
    sp.add_argument("--groups", type=int, default=20)
    return p


def _load_inputs(args):
    """Graph, opinions, X and Y from files, synthesizing whatever is missing."""
    cfg = SynthConfig(seed=args.seed, opinion_dist=args.opinion_dist, k=args.k)
    g = read_edge_list(args.graph) if args.graph else gen_graph(args.n, args.seed)
    n = g.n
    s = read_opinions(args.opinions, n) if args.opinions else gen_opinions(n, cfg)
    X = read_matrix(args.x) if args.x else gen_X(n, cfg)
    if X.shape[0] != n:
        raise ValidationError(f"{args.x}: {X.shape[0]} rows but the graph has {n} vertices")
    if args.y:
        Y = read_matrix(args.y)
    else:
        Y = gen_Y(n, SynthConfig(seed=args.seed, opinion_dist=args.opinion_dist, k=X.shape[1]), s)
    if Y.shape != (X.shape[1], n):
        raise ValidationError(f"Y has shape {Y.shape}, expected {(X.shape[1], n)}")
    return g, s, X, Y


def _clock(args):
    start = time.perf_counter()
    return lambda: 0.0 if args.omit_timings else round(time.perf_counter() - start, 6)


def cmd_simulate(args):
    clock = _clock(args)
    g, s, X, Y = _load_inputs(args)
    model = LowRankModel(g, X, Y, args.c)
    z = equilibrium_exact(g, s)
    base = indices(g, s, z)
    est = estimate_opinions(model, s, args.eps)
    aug = augmented_indices(model, s, est.z, tol=max(1e-8, 10 * args.eps))
    spectral = spectral_condition(model)
    return {
        "command": "simulate",
        "n": g.n,
        "m": g.m,
        "k": model.k,
        "C": model.C,
        "W": model.W,
        "graph": base.as_dict(),
        "augmented": aug.as_dict(),
        "weight_norms": model.weight_norms(),
        "spectral_condition": spectral.as_dict(),
        "opinions_verified": est.verified,
        "seconds": clock(),
    }, {}


def cmd_optimize(args):
    clock = _clock(args)
    g, s, X, Y = _load_inputs(args)
    model = LowRankModel(g, X, Y, args.c)
    bounds = bounds_from_theta(X, args.theta, args.frozen_topics)
    if args.algo == "gdpm":
        cfg = GdpmConfig(
            learning_rate=args.learning_rate,
            max_iters=100 if args.iters is None else args.iters,
            grad_eps=args.eps,
            track_objective=args.track_objective,
        )
        res = optimize(model, s, bounds, cfg)
        extra = {"learning_rate": res.learning_rate, "stop_reason": res.stop_reason, "best_kind": res.best_kind}
    else:
        res = run_baseline(
            model, s, bounds, args.algo, 10 if args.iters is None else args.iters, args.eps, args.bl1_selection
        )
        extra = {"bl1_selection": args.bl1_selection} if args.algo == "bl1" else {}
    trace = res.trace
    if args.omit_timings:
        trace = [type(r)(**{**r.__dict__, "seconds": 0.0}) for r in trace]
    report = {
        "command": "optimize",
        "algo": args.algo,
        "n": g.n,
        "k": model.k,
        "C": model.C,
        "theta": args.theta,
        "frozen_topics": list(args.frozen_topics),
        "f_initial": res.f_initial,
        "f_best": res.f_best,
        "reduction_ratio": reduction_ratio(res.f_initial, res.f_best),
        "best_iter": res.best_iter,
        "iterations": len(res.trace) - 1,
        "unverified_evaluations": res.unverified_evaluations,
        **extra,
        "seconds": clock(),
    }
    return report, {"X_best.tsv": format_matrix(res.X_best), "trace.csv": trace_csv(trace)}


def cmd_synth(args):
    g, s, X, Y = _load_inputs(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "graph.txt")
    write_opinions(s, out / "opinions.txt")
    write_matrix(X, out / "X.tsv")
    write_matrix(Y, out / "Y.tsv")
    return {
        "command": "synth",
        "seed": args.seed,
        "n": g.n,
        "m": g.m,
        "k": X.shape[1],
        "opinion_dist": args.opinion_dist,
        "files": ["graph.txt", "opinions.txt", "X.tsv", "Y.tsv"],
    }, {}


def cmd_analyze(args):
    clock = _clock(args)
    g, s, X, Y = _load_inputs(args)
    X_after = read_matrix(args.x_after)
    before = LowRankModel(g, X, Y, args.c)
    after = before.with_X(X_after)
    eps = args.eps
    zb = estimate_opinions(before, s, eps).z
    za = estimate_opinions(after, s, eps).z
    table = topic_table(Y, X, X_after, s, zb, za)
    rate = degree_increase_rate(after)
    fb, fa = float(s @ zb), float(s @ za)
    report = {
        "command": "analyze",
        "n": g.n,
        "k": before.k,
        "C": before.C,
        "f_before": fb,
        "f_after": fa,
        "reduction_ratio": reduction_ratio(fb, fa),
        "sum_delta": float(table.delta.sum()),
        "spearman_abs_tau_s_delta": rank_correlation(np.abs(table.tau_s), table.delta),
        "tau_z_range_before": float(np.ptp(table.tau_z_before)),
        "tau_z_range_after": float(np.ptp(table.tau_z_after)),
        "topics": list(table.rows()),
        "degree_increase": {
            "by_influence": grouped_stats(rate, influence_scores(Y), args.groups),
            "by_degree": grouped_stats(rate, g.degrees, args.groups),
        },
        "seconds": clock(),
    }
    header = "topic,delta,tau_s,tau_z_before,tau_z_after\n"
    lines = "".join(
        f"{r['topic']},{r['delta']:.17g},{r['tau_s']:.17g},{r['tau_z_before']:.17g},{r['tau_z_after']:.17g}\n"
        for r in table.rows()
    )
    return report, {"topics.csv": header + lines}


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "synth": cmd_synth, "analyze": cmd_analyze}


def _limit_threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    try:
        count = int(value)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    if count < 1:
        raise ValidationError(f"{THREADS_ENV} must be positive")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=count)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        limiter = _limit_threads()
        try:
            report, files = COMMANDS[args.command](args)
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
        report = {"schema_version": SCHEMA_VERSION, **report}
        args.out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (args.out / name).write_text(text)
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        (args.out / "report.json").write_text(text)
        sys.stdout.write(text)
        return 0
    except (ConvergenceError, ConditioningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ParseError, FJError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
