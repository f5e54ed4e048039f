"""Command-line interface: ``rankinfer <command> ...``.

Exit codes: 0 success, 1 usage or input error, 2 statistical precondition
failure (disconnected graph, singular system, solver failure). Errors are
reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import experiments, ingest
from .debias import debias
from .errors import AlphaOutOfRange, IndexOutOfRange, InsufficientUsers, RankInferError
from .estimate import DEFAULT_C_LAMBDA, MleConfig, solve_mle
from .inference import (
    DEFAULT_SELECT_DRAWS,
    DEFAULT_TEST_DRAWS,
    select_by,
    select_topk_fdr_by,
    select_topk_fwer,
    test_pairwise,
    test_topk,
)
from .simulate import block_scores, parse_blocks, simulate_dataset, uniform_scores


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# argument types
# --------------------------------------------------------------------------

def _alpha(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {text}")
    return v


def _probability(text):
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in (0, 1], got {text}")
    return v


def parse_grid(text: str, cast=float) -> tuple:
    """``"a:b:step"`` (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} must be start:stop:step")
        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"grid {text!r} is empty")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        # round away representation noise such as 0.30000000000000004
        return tuple(cast(round(start + k * step, 12)) for k in range(count))
    try:
        return tuple(cast(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _int_grid(text):
    vals = parse_grid(text, float)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"L grid {text!r} must hold positive integers")
    return tuple(int(v) for v in vals)


def _float_grid(text):
    return parse_grid(text, float)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _load_numbers(path) -> np.ndarray:
    """A JSON array or whitespace/comma separated numbers."""
    text = Path(path).read_text()
    try:
        vals = json.loads(text)
    except json.JSONDecodeError:
        vals = text.replace(",", " ").split()
    arr = np.asarray(vals, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{path}: expected a non-empty list of numbers")
    return arr


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_data(args):
    return ingest.read_comparisons(args.data, n=getattr(args, "n", None))


def _mle_config(args) -> MleConfig:
    lam = args.lambda0
    return MleConfig(lambda0="auto" if lam == "auto" else float(lam), c_lambda=args.c_lambda)


def _estimate(args, data):
    """Debiased result, reusing scores from ``--estimates`` when given."""
    if getattr(args, "estimates", None):
        est = json.loads(Path(args.estimates).read_text())
        theta = np.asarray(est["theta_hat"], dtype=float)
        if theta.size != data.n:
            raise ValueError("estimates file does not match the dataset's item count")
        return debias(theta, data, est.get("lambda0")), None
    fit = solve_mle(data, _mle_config(args))
    return debias(fit.theta, data, fit.lambda0), fit


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_simulate(args):
    if args.score_blocks:
        scores = block_scores(parse_blocks(args.score_blocks)).values
    elif args.scores_file:
        raw = _load_numbers(args.scores_file)
        scores = raw - raw.mean()
    else:
        if args.n is None:
            raise UsageError("--score-dist needs --n")
        kind, _, rest = args.score_dist.partition(":")
        bounds = rest.split(":")
        if kind != "uniform" or len(bounds) != 2:
            raise UsageError("--score-dist must look like uniform:LO:HI")
        scores = uniform_scores(args.n, float(bounds[0]), float(bounds[1]), args.seed).values
    if args.n is not None and args.n != scores.size:
        raise UsageError(f"--n {args.n} disagrees with {scores.size} scores")
    data = simulate_dataset(scores, args.p, args.L, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_comparisons(out / "comparisons.csv", data)
    truth = {
        "theta_star": scores.tolist(),
        "n": int(scores.size),
        "p": args.p,
        "L": args.L,
        "seed": args.seed,
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")


def cmd_estimate(args):
    data = _load_data(args)
    res, fit = _estimate(args, data)
    out = res.to_dict()
    if fit is not None:
        out["iterations"] = fit.iterations
        out["grad_norm"] = fit.grad_norm
    _emit(out, args.out)


def cmd_test(args):
    data = _load_data(args)
    res, _ = _estimate(args, data)
    if args.what == "pair":
        report = test_pairwise(res, args.i, args.j, args.alpha)
    else:
        report = test_topk(res, data, args.i, args.k, args.alpha, args.bootstrap_draws, args.seed)
    _emit(report.to_dict(), args.out)


def cmd_select(args):
    if args.p_values:
        if args.method != "fdr-by":
            raise UsageError("--p-values works only with --method fdr-by")
        result = select_by(_load_numbers(args.p_values), args.alpha, args.k)
        _emit(result.to_dict(), args.out)
        return
    if not args.data:
        raise UsageError("select needs --data or --p-values")
    data = _load_data(args)
    res, _ = _estimate(args, data)
    if args.method == "fwer":
        result = select_topk_fwer(
            res, data, args.k, args.alpha, args.bootstrap_draws, args.seed, args.conservative_box
        )
    else:
        result = select_topk_fdr_by(
            res, data, args.k, args.alpha, args.bootstrap_draws, args.seed, args.threads
        )
    _emit(result.to_dict(), args.out)


def cmd_ingest(args):
    if args.ratings:
        if args.n_items is None or args.p is None or args.L is None:
            raise UsageError("--ratings needs --n-items, --p and --L")
        table = ingest.read_ratings(args.ratings)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", InsufficientUsers)
            data = ingest.ratings_to_comparisons(table, args.n_items, args.p, args.L, args.seed)
        for w in caught:
            if isinstance(w.message, InsufficientUsers):
                note = {"warning": "InsufficientUsers", "L": args.L,
                        "dropped": [list(e) for e in w.message.dropped]}
                sys.stderr.write(json.dumps(note) + "\n")
    else:
        lists = ingest.read_comparison_lists(args.comparisons)
        data = ingest.equalize_replicates(lists, args.seed, args.n)
    ingest.write_comparisons(args.out, data)


def cmd_experiment(args):
    cfg = experiments.ExperimentConfig(
        kind=args.kind,
        reps=args.reps,
        n=args.n,
        p=args.p,
        L_grid=args.L_grid,
        delta_grid=args.delta_grid,
        seed=args.seed,
        alpha=args.alpha,
        B=args.bootstrap_draws,
        K=args.k,
        c_lambda=args.c_lambda,
    )
    rows = experiments.run_experiment(cfg, args.threads)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            experiments.write_rows(fh, rows)
    else:
        experiments.write_rows(sys.stdout, rows)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(p, draws):
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--bootstrap-draws", "--B", dest="bootstrap_draws", type=_positive_int,
                   default=draws)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)


def _data_args(p, required=True):
    p.add_argument("--data", required=required, help="comparisons CSV (i,j,rep,outcome)")
    p.add_argument("--n", type=_positive_int, default=None,
                   help="number of items (default: largest id + 1)")
    p.add_argument("--estimates", help="JSON from `rankinfer estimate` to reuse")
    p.add_argument("--lambda0", default="auto")
    p.add_argument("--c-lambda", type=float, default=DEFAULT_C_LAMBDA)
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankinfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate BTL comparisons")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--p", type=_probability, required=True)
    p.add_argument("--L", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scores-file")
    g.add_argument("--score-dist", help="uniform:LO:HI")
    g.add_argument("--score-blocks", help="e.g. 30x10,70x7.5")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="regularized MLE and debiased scores")
    _data_args(p)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="test a ranking property")
    tsub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    t = tsub.add_parser("pair", help="H0: theta_i <= theta_j")
    t.add_argument("--i", type=int, required=True)
    t.add_argument("--j", type=int, required=True)
    _data_args(t)
    _common(t, DEFAULT_TEST_DRAWS)
    t.set_defaults(func=cmd_test)
    t = tsub.add_parser("topk", help="H0: item i is not in the top K")
    t.add_argument("--i", type=int, required=True)
    t.add_argument("--k", type=_positive_int, required=True)
    _data_args(t)
    _common(t, DEFAULT_TEST_DRAWS)
    t.set_defaults(func=cmd_test)

    p = sub.add_parser("select", help="multiple testing selection")
    ssub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    s = ssub.add_parser("topk", help="select the top-K items")
    s.add_argument("--k", type=_positive_int, required=True)
    s.add_argument("--method", choices=("fwer", "fdr-by"), required=True)
    s.add_argument("--conservative-box", action="store_true")
    s.add_argument("--p-values", help="apply BY to these p-values instead of data")
    _data_args(s, required=False)
    _common(s, DEFAULT_SELECT_DRAWS)
    s.set_defaults(func=cmd_select)

    p = sub.add_parser("ingest", help="build a comparisons CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ratings", help="ratings CSV (user,item,rating)")
    src.add_argument("--comparisons", help="comparisons CSV with unequal replicate counts")
    p.add_argument("--n-items", type=_positive_int)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--p", type=_probability)
    p.add_argument("--L", type=_positive_int)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("experiment", help="Monte Carlo studies as long CSV")
    p.add_argument("kind", choices=experiments.KINDS)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--p", type=_probability, default=0.2)
    p.add_argument("--L-grid", type=_int_grid, default=(200,))
    p.add_argument("--delta-grid", type=_float_grid, default=None)
    p.add_argument("--k", "--K", dest="k", type=_positive_int, default=30)
    p.add_argument("--c-lambda", type=float, default=None)
    p.add_argument("--out")
    _common(p, experiments.ExperimentConfig.B)
    p.set_defaults(func=cmd_experiment)
    return parser


def _fail(exc, code) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        # one BLAS thread keeps floating-point results independent of --threads
        with threadpool_limits(1):
            args.func(args)
    except (UsageError, AlphaOutOfRange, IndexOutOfRange) as exc:
        return _fail(exc, 1)
    except RankInferError as exc:
        return _fail(exc, 2)
    except (ValueError, OSError, KeyError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
