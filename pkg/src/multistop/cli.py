"""Command-line entry point: ``multistop <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import load_config
from .environment import balanced_weights
from .exceptions import MultiStopError, RunFailed
from .experiment import Variant, ablation_compare, prepare_problem, run_experiment
from .io import generate_point_set, load_point_set, save_point_set
from .precompute import save_table
from .stats import aggregate, format_summary, read_results_csv
from .validation import in_lens


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("config", help="experiment config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--runs", type=int, help="shortcut for run.run_count")
    p.add_argument("--top-k", type=int, help="shortcut for run.top_k")
    p.add_argument("--seed", type=int, help="shortcut for run.base_seed")
    p.add_argument("--jobs", type=int, help="shortcut for run.n_jobs")
    p.add_argument("--output-dir", help="shortcut for run.output_dir")


def _load(args):
    overrides = list(args.overrides)
    for flag, key in (("runs", "run_count"), ("top_k", "top_k"), ("seed", "base_seed"),
                      ("jobs", "n_jobs"), ("output_dir", "output_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f"run.{key}={value}")
    return load_config(args.config, overrides)


def _progress(quiet):
    if quiet:
        return None

    def report(rec):
        print(f"seed {rec.seed}: best reward {rec.best_reward:.6e} after {rec.total_steps} steps",
              file=sys.stderr, flush=True)
    return report


def cmd_precompute(args) -> int:
    cfg = _load(args)
    problem = prepare_problem(cfg)
    path = save_table(problem.table, args.out)
    print(f"wrote {path} ({problem.table.n_terms} terms x {problem.table.n_points} points)")
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg, progress=_progress(args.quiet))
    print(result.summary, end="")
    for name, path in result.files.items():
        print(f"{name}: {path}")
    return 0


def _parse_variant(text: str, table):
    name, _, spec = text.partition(":")
    if not name or not spec:
        raise argparse.ArgumentTypeError(f"variant {text!r} must be NAME:W1,W2 or NAME:balanced")
    if spec == "balanced":
        w1, w2 = balanced_weights(table)
    else:
        try:
            w1, w2 = (float(v) for v in spec.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"variant {text!r} must be NAME:W1,W2 or NAME:balanced") from None
    return Variant(name, w1, w2)


def cmd_ablate(args) -> int:
    cfg = _load(args)
    specs = args.variant or ["none:0,0", f"two:{cfg.reward.w1!r},{cfg.reward.w2!r}"]
    table = prepare_problem(cfg).table
    variants = [_parse_variant(s, table) for s in specs]
    report = ablation_compare(cfg, variants, write=True, progress=_progress(args.quiet))
    print(report.text(), end="")
    return 0


def cmd_stats(args) -> int:
    records = read_results_csv(args.results)
    groups = {}
    for expr in args.sum or []:
        groups[expr] = [int(t.strip().lstrip("cC")) - 1 for t in expr.split("+")]
    stats = aggregate(records, args.top_k, groups)
    ref = np.array(args.reference, dtype=float) if args.reference else None
    print(format_summary(stats, ref), end="")
    return 0


def cmd_points(args) -> int:
    if args.action == "generate":
        pts = generate_point_set(args.count, args.seed, args.margin, args.complex)
        if args.out:
            save_point_set(pts, args.out)
            print(f"wrote {pts.count} points to {args.out}")
        else:
            print("re,im")
            for x in pts.points:
                print(f"{x.real!r},{x.imag!r}")
        return 0
    pts = load_point_set(args.file)
    arr = pts.as_array()
    margin = float(np.min(np.minimum(1 - np.abs(arr), 1 - np.abs(1 - arr))))
    symmetric = all(np.min(np.abs(arr - (1 - x))) < 1e-15 for x in arr)
    print(f"points: {pts.count}")
    print(f"complex: {int(np.sum(arr.imag != 0))}")
    print(f"min lens margin: {margin:.6g}")
    print(f"closed under x -> 1-x: {symmetric}")
    print(f"inside lens: {all(in_lens(x) for x in pts.points)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multistop", description="RL search for CFT data with integral constraints")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="build and cache the block table")
    _config_args(p)
    p.add_argument("-o", "--out", required=True, help="table CSV to write")
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("run", help="run an experiment")
    _config_args(p)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="compare constraint settings on shared seeds")
    _config_args(p)
    p.add_argument("--variant", action="append", metavar="NAME:W1,W2",
                   help="variant weights, or NAME:balanced; first variant is the baseline")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("stats", help="re-aggregate a results CSV")
    p.add_argument("results")
    p.add_argument("--top-k", type=int, default=4)
    p.add_argument("--sum", action="append", metavar="c2+c3", help="sum group (repeatable)")
    p.add_argument("--reference", type=float, nargs="+", help="reference C^2 values")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("points", help="generate or inspect sample point sets")
    psub = p.add_subparsers(dest="action", required=True)
    g = psub.add_parser("generate")
    g.add_argument("--count", type=int, default=180)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--margin", type=float, default=0.05)
    g.add_argument("--complex", action="store_true", help="conjugate quadruples off the real axis")
    g.add_argument("-o", "--out")
    i = psub.add_parser("inspect")
    i.add_argument("file")
    p.set_defaults(func=cmd_points)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RunFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MultiStopError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
