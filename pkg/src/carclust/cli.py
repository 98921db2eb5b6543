"""Command-line front end: load, optionally normalize, fit or sweep, report.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .data_io import load_panel, minmax_normalize, write_panel
from .errors import CarClustError, InvalidConfigError
from .estimator import FitConfig, InitStrategy, default_threads, fit_multistart
from .report import build_report, dumps_tree, render_text
from .selection import select_g
from .synthetic import generate_panel, separated_spec, write_truth

PROG = "carclust"


class UsageError(Exception):
    pass


def parse_clusters(text: str) -> tuple[int, int]:
    """``"4"`` -> (4, 4); ``"2..6"`` -> (2, 6)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--clusters expects G or A..B, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"--clusters range {text!r} is reversed; write {hi}..{lo}")
    if lo < 1:
        raise argparse.ArgumentTypeError(f"--clusters must be >= 1, got {text!r}")
    return lo, hi


def _positive_int(name):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {v}")
        return v
    return conv


def _positive_float(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects a number, got {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be > 0, got {v}")
        return v
    return conv


def _fit_args(p: argparse.ArgumentParser, clusters_default: str) -> None:
    p.add_argument("--input", required=True, help="panel CSV with header unit,time,<vars>")
    p.add_argument("--clusters", type=parse_clusters, default=parse_clusters(clusters_default),
                   help="number of clusters G, or an inclusive range A..B")
    p.add_argument("--lags", type=_positive_int("--lags"), default=1, help="VAR lag order P")
    p.add_argument("--restarts", type=_positive_int("--restarts"), default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive_float("--tol"), default=1e-8,
                   help="stop when the relative objective decrease falls below this")
    p.add_argument("--max-iters", type=_positive_int("--max-iters"), default=200)
    p.add_argument("--normalize", action="store_true", help="min-max scale each variable to [0, 1] first")
    p.add_argument("--init", choices=[s.value for s in InitStrategy], default="mixed")
    p.add_argument("--output", default="-", help="report path ('-' for stdout)")
    p.add_argument("--format", choices=["text", "tree"], default="tree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Time-varying K-means clustering with VAR(P) centroids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{fit,select,simulate,validate}")

    p = sub.add_parser("fit", help="fit at a fixed number of clusters")
    _fit_args(p, "2")
    p.add_argument("--allow-trivial", action="store_true", help="permit --clusters 1")

    p = sub.add_parser("select", help="sweep a range of cluster counts and pick G by CH")
    _fit_args(p, "2..6")

    p = sub.add_parser("simulate", help="write a synthetic panel and its ground truth")
    p.add_argument("--output", required=True, help="panel CSV path")
    p.add_argument("--truth", help="ground-truth JSON path (default: <output>.truth.json)")
    p.add_argument("--units", type=_positive_int("--units"), default=90)
    p.add_argument("--vars", type=_positive_int("--vars"), default=2)
    p.add_argument("--times", type=_positive_int("--times"), default=8)
    p.add_argument("--clusters", type=_positive_int("--clusters"), default=3)
    p.add_argument("--lags", type=_positive_int("--lags"), default=1)
    p.add_argument("--noise", type=_positive_float("--noise"), default=0.1)
    p.add_argument("--separation", type=_positive_float("--separation"), default=8.0,
                   help="minimum centre spacing in units of --noise")
    p.add_argument("--switch-prob", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check a panel CSV without fitting")
    p.add_argument("--input", required=True)
    p.add_argument("--normalize", action="store_true", help="also check that min-max scaling is defined")
    return parser


def _emit(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _load(args):
    panel = load_panel(args.input)
    if args.normalize:
        panel = minmax_normalize(panel)
    return panel


def _config(args, g: int) -> FitConfig:
    return FitConfig(n_clusters=g, lag_order=args.lags, n_restarts=args.restarts, max_iters=args.max_iters,
                     rel_tol=args.tol, seed=args.seed, init_strategy=args.init)


def cmd_fit(args) -> int:
    lo, hi = args.clusters
    if lo != hi:
        raise UsageError(f"fit takes a single --clusters value, got {lo}..{hi}; use 'select' for a range")
    if lo == 1 and not args.allow_trivial:
        raise UsageError("--clusters 1 gives a degenerate fit; pass --allow-trivial to run it anyway")
    panel = _load(args)
    config = _config(args, lo)
    config.validate(panel)
    result = fit_multistart(panel, config, n_jobs=default_threads())
    tree = build_report(result, panel)
    _emit(dumps_tree(tree) if args.format == "tree" else render_text(tree), args.output)
    print(f"{PROG}: fit G={lo} P={args.lags} objective={result.objective:.6g} "
          f"(restart {result.restart_index}, {result.iterations} iterations)", file=sys.stderr)
    return 0


def cmd_select(args) -> int:
    lo, hi = args.clusters
    if lo < 2:
        raise UsageError(f"select needs cluster counts >= 2 (CH is undefined for G=1); got {lo}..{hi}")
    panel = _load(args)
    config = _config(args, lo)
    for g in (lo, hi):
        FitConfig(n_clusters=g, lag_order=args.lags).validate(panel)
    ch = select_g(panel, range(lo, hi + 1), lag_order=args.lags, config=config, n_jobs=default_threads())
    best = ch.best
    tree = build_report(best.fit, panel, ch=ch)
    _emit(dumps_tree(tree) if args.format == "tree" else render_text(tree), args.output)
    for c in ch.candidates:
        shown = "failed" if c.ch_value is None else f"CH={c.ch_value:.6g}"
        print(f"{PROG}: G={c.n_clusters} {shown}", file=sys.stderr)
    print(f"{PROG}: selected G={ch.selected_g}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if not 0.0 <= args.switch_prob <= 1.0:
        raise UsageError(f"--switch-prob must lie in [0, 1], got {args.switch_prob}")
    if args.clusters > args.units:
        raise UsageError(f"--clusters {args.clusters} exceeds --units {args.units}")
    spec = separated_spec(n=args.units, J=args.vars, T=args.times, G=args.clusters, P=args.lags,
                          separation=args.separation, noise_scale=args.noise,
                          switch_prob=args.switch_prob, seed=args.seed)
    sim = generate_panel(spec)
    write_panel(sim.panel, args.output)
    truth = args.truth or f"{args.output}.truth.json"
    write_truth(sim, spec, truth)
    print(f"{PROG}: wrote {args.output} and {truth}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    panel = _load(args)
    n, J, T = panel.shape
    print(f"{args.input}: ok, {n} units x {J} variables x {T} times "
          f"({panel.time_labels[0]}..{panel.time_labels[-1]})")
    return 0


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "simulate": cmd_simulate, "validate": cmd_validate}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidConfigError) as exc:
        print(f"{PROG} {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (CarClustError, OSError) as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
