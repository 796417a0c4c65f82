"""Command-line front end: solve, color-stats, spectral, convert.

Exit codes: 0 success, 2 bad flags (argparse), 3 file I/O error,
4 input parse error, 5 divergence abort.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import List, Optional

import numpy as np

from .coloring import color_features, coloring_stats
from .data import Dataset, ParseError, load_libsvm, normalize_columns
from .engine import DivergenceError, RunConfig, RunResult, TraceRecord, run
from .losses import Loss, Objective
from .spectral import power_iteration
from .strategies import StrategyConfig

EXIT_OK = 0
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_DIVERGED = 5

TRACE_HEADER = "wall_time_s,iterations,updates,objective,nnz"

_ALGORITHMS = {
    "cyclic": "cyclic",
    "stochastic": "stochastic",
    "shotgun": "shotgun",
    "greedy": "greedy",
    "thread-greedy": "thread_greedy",
    "coloring": "coloring",
}


def write_trace(records: List[TraceRecord], path) -> None:
    """CSV with one row per record, fixed formatting."""
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.wall_time:.3f},{r.iterations},{r.total_updates},"
                f"{r.objective:.10e},{r.nnz}\n"
            )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parcd",
        description="Parallel coordinate descent for L1-regularized loss minimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="fit a model and emit a convergence trace")
    solve.add_argument("--data", required=True, help="LibSVM-format input file")
    solve.add_argument("--loss", choices=["logistic", "squared"], default="logistic")
    solve.add_argument("--lambda", dest="lam", type=float, default=1e-4,
                       help="L1 penalty weight (default 1e-4)")
    solve.add_argument("--algorithm", choices=sorted(_ALGORITHMS), default="cyclic")
    solve.add_argument("--threads", type=int, default=1,
                       help="worker threads / thread-greedy block count (default 1)")
    solve.add_argument("--seed", type=int, default=0, help="selection RNG seed")
    solve.add_argument("--max-iters", type=int, default=None)
    solve.add_argument("--time-limit", type=float, default=None, help="seconds")
    solve.add_argument("--tol", type=float, default=1e-8,
                       help="relative objective decrease per sweep to stop at")
    solve.add_argument("--refine-steps", type=int, default=500,
                       help="extra quadratic steps per accepted update (default 500)")
    solve.add_argument("--refine-tol", type=float, default=1e-12)
    solve.add_argument("--no-normalize", action="store_true",
                       help="skip unit-norm column scaling (descent guarantees "
                            "assume normalized columns)")
    solve.add_argument("--n-features", type=int, default=None,
                       help="declared feature count when larger than the max index seen")
    solve.add_argument("--label-threshold", type=float, default=None,
                       help="map raw labels to +1 when >= threshold, else -1")
    solve.add_argument("--shotgun-p", type=int, default=None,
                       help="shotgun subset size (default: P* estimate)")
    solve.add_argument("--thread-greedy-subset", type=int, default=None,
                       help="propose a random subset of this size instead of all "
                            "coordinates (thread-greedy only)")
    solve.add_argument("--coloring-weighted", action="store_true",
                       help="pick colors weighted by class size")
    solve.add_argument("--balanced-coloring", action="store_true")
    solve.add_argument("--trace", default=None, help="trace CSV output path")
    solve.add_argument("--summary", default=None, help="summary JSON output path")
    solve.add_argument("--weights-out", default=None,
                       help="write nonzero weights (original column scale) as CSV")
    solve.add_argument("--trace-every-s", type=float, default=0.1)
    solve.add_argument("--trace-every-iters", type=int, default=None)
    solve.add_argument("--quiet", action="store_true")

    cstats = sub.add_parser("color-stats", help="color a dataset and print class stats")
    cstats.add_argument("--data", required=True)
    cstats.add_argument("--n-features", type=int, default=None)
    cstats.add_argument("--balanced", action="store_true")
    cstats.add_argument("--csv", default=None, help="write per-color sizes as CSV")

    spect = sub.add_parser("spectral", help="estimate the Gram spectral radius and P*")
    spect.add_argument("--data", required=True)
    spect.add_argument("--n-features", type=int, default=None)
    spect.add_argument("--normalize", action="store_true",
                       help="estimate on unit-norm columns (the matrix solve uses)")
    spect.add_argument("--max-iters", type=int, default=1000)
    spect.add_argument("--tol", type=float, default=1e-6)
    spect.add_argument("--seed", type=int, default=0)

    conv = sub.add_parser("convert", help="build +/-1-labeled LibSVM files")
    conv_sub = conv.add_subparsers(dest="converter", required=True)

    rcv1 = conv_sub.add_parser(
        "rcv1", help="label topic-tagged document vectors by topic membership"
    )
    rcv1.add_argument("--vectors", required=True,
                      help="lines of `docid idx:val ...`")
    rcv1.add_argument("--topics", required=True,
                      help="topic assignment file with lines `topic docid 1`")
    rcv1.add_argument("--topic", default="CCAT")
    rcv1.add_argument("--output", required=True)

    nips = conv_sub.add_parser(
        "indices", help="pair a sparse binary index file with a +/-1 label file"
    )
    nips.add_argument("--data", required=True,
                      help="lines of space-separated 1-based feature indices")
    nips.add_argument("--labels", required=True, help="one +/-1 label per line")
    nips.add_argument("--output", required=True)

    return parser


def _load(args) -> Dataset:
    label_map = None
    if getattr(args, "label_threshold", None) is not None:
        thr = args.label_threshold
        label_map = lambda v: 1.0 if v >= thr else -1.0
    return load_libsvm(args.data, n_features=args.n_features, label_map=label_map)


def _cmd_solve(args) -> int:
    data = _load(args)
    if args.loss == "logistic":
        try:
            data.require_binary_labels()
        except ValueError as exc:  # wrong file contents, not wrong flags
            raise ParseError(str(exc)) from None
    if not args.no_normalize:
        x, _ = normalize_columns(data.x)
        data = Dataset(x, data.y)
    objective = Objective(Loss(args.loss), args.lam)
    strategy = StrategyConfig(
        kind=_ALGORITHMS[args.algorithm],
        threads=args.threads,
        shotgun_p=args.shotgun_p,
        rng_seed=args.seed,
        thread_greedy_subset=args.thread_greedy_subset,
        coloring_weighted=args.coloring_weighted,
    )
    coloring = None
    if strategy.kind == "coloring":
        t0 = time.perf_counter()
        coloring = color_features(data.x, balanced=args.balanced_coloring)
        if not args.quiet:
            stats = coloring_stats(coloring)
            print(
                f"colored {data.x.n_features} features into {stats['num_colors']} "
                f"classes (mean size {stats['mean_size']:.1f}) "
                f"in {time.perf_counter() - t0:.2f}s"
            )
    cfg = RunConfig(
        objective=objective,
        strategy=strategy,
        max_iterations=args.max_iters,
        time_limit=args.time_limit,
        convergence_tol=args.tol,
        refine_steps=args.refine_steps,
        refine_tol=args.refine_tol,
        trace_every_s=args.trace_every_s,
        trace_every_iters=args.trace_every_iters,
    )
    result = run(data, cfg, coloring=coloring)
    _emit_solve_outputs(args, data, result)
    return EXIT_OK


def _emit_solve_outputs(args, data: Dataset, result: RunResult) -> None:
    final = result.trace[-1]
    ups = result.total_updates / result.elapsed_s if result.elapsed_s > 0 else 0.0
    if not args.quiet:
        print(
            f"{args.algorithm}: objective={final.objective:.6f} nnz={final.nnz} "
            f"updates={result.total_updates} ({ups:.0f}/s) "
            f"elapsed={result.elapsed_s:.2f}s "
            f"{'converged' if result.converged else 'stopped'} ({result.reason})"
        )
    if args.trace:
        write_trace(result.trace, args.trace)
    if args.summary:
        summary = {
            "objective": final.objective,
            "nnz": final.nnz,
            "updates": result.total_updates,
            "wall_time_s": result.elapsed_s,
            "algorithm": args.algorithm,
            "lambda": args.lam,
            "threads": args.threads,
            "converged": result.converged,
        }
        with open(args.summary, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    if args.weights_out:
        scales = np.ones(data.x.n_features)
        if not args.no_normalize:
            # data was normalized in place for the solve; recover the scale
            # factors from the original file to report original-scale weights
            raw = _load(args)
            _, scales = normalize_columns(raw.x)
        with open(args.weights_out, "w") as fh:
            fh.write("feature,weight\n")
            for j in np.nonzero(result.state.w)[0]:
                fh.write(f"{j + 1},{result.state.w[j] / scales[j]:.17g}\n")


def _cmd_color_stats(args) -> int:
    data = load_libsvm(args.data, n_features=args.n_features)
    t0 = time.perf_counter()
    coloring = color_features(data.x, balanced=args.balanced)
    elapsed = time.perf_counter() - t0
    stats = coloring_stats(coloring)
    print(
        f"features={data.x.n_features} colors={stats['num_colors']} "
        f"mean_size={stats['mean_size']:.2f} min={stats['min_size']} "
        f"max={stats['max_size']} time_s={elapsed:.2f}"
    )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("color,size\n")
            for c, cls in enumerate(coloring.classes):
                fh.write(f"{c},{cls.shape[0]}\n")
    return EXIT_OK


def _cmd_spectral(args) -> int:
    data = load_libsvm(args.data, n_features=args.n_features)
    x = data.x
    if args.normalize:
        x, _ = normalize_columns(x)
    est = power_iteration(x, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    print(
        f"rho={est.rho:.8g} p_star={est.p_star} iterations={est.iterations_used} "
        f"converged={est.converged}"
    )
    return EXIT_OK


def _cmd_convert(args) -> int:
    if args.converter == "rcv1":
        members = set()
        with open(args.topics) as fh:
            for line in fh:
                parts = line.split()
                if len(parts) >= 2 and parts[0] == args.topic:
                    members.add(parts[1])
        n_pos = 0
        with open(args.vectors) as src, open(args.output, "w") as dst:
            for line in src:
                parts = line.split()
                if not parts:
                    continue
                label = "+1" if parts[0] in members else "-1"
                n_pos += label == "+1"
                dst.write(" ".join([label] + parts[1:]) + "\n")
        print(f"wrote {args.output} ({n_pos} positive)")
        return EXIT_OK
    # indices: sparse binary rows + separate label file
    with open(args.labels) as fh:
        labels = [line.strip() for line in fh if line.strip()]
    with open(args.data) as src, open(args.output, "w") as dst:
        for i, line in enumerate(src):
            idxs = line.split()
            if i >= len(labels):
                raise ParseError(f"{args.labels}: fewer labels than data rows")
            pairs = [f"{idx}:1" for idx in idxs]
            dst.write(" ".join([labels[i]] + pairs) + "\n")
    print(f"wrote {args.output}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "color-stats":
            return _cmd_color_stats(args)
        if args.command == "spectral":
            return _cmd_spectral(args)
        return _cmd_convert(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivergenceError as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # semantic flag validation (counts, ranges)
        parser.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
