"""Command line: ``vpinnls run|compare|bench-ad|bench-cost``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import costs, driver
from .config import ConfigError, RunConfig
from .optim import TrainingDiverged

EXIT_CONFIG, EXIT_DIVERGED = 2, 3

# flag -> RunConfig field
FLAG_FIELDS = {
    "problem": "problem",
    "optimizer": "optimizer",
    "formulation": "formulation",
    "ad_mode": "ad_mode",
    "iters": "iters",
    "seed": "seed",
    "width": "width",
    "depth": "depth",
    "modes": "modes",
    "points": "points",
    "val_points": "val_points",
    "lam": "lam",
    "lr": "lr",
    "eval_every": "eval_every",
    "out": "out",
}


def _sizes(text):
    """``"32"`` -> 32, ``"8x8"`` or ``"8,8"`` -> (8, 8)."""
    parts = text.replace("x", ",").split(",")
    try:
        vals = tuple(int(p) for p in parts if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or AxB, got {text!r}") from None
    if not vals or len(vals) > 2:
        raise argparse.ArgumentTypeError(f"expected one or two sizes, got {text!r}")
    return vals[0] if len(vals) == 1 else vals


def _add_run_flags(p, with_optimizer=True):
    p.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    p.add_argument("--problem")
    if with_optimizer:
        p.add_argument("--optimizer", choices=("adam", "ls-adam"))
    p.add_argument("--formulation", choices=("weak", "ultraweak"))
    p.add_argument("--ad-mode", dest="ad_mode", choices=("forward", "backward"))
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--width", type=int, help="hidden width N")
    p.add_argument("--depth", type=int, help="number of hidden layers")
    p.add_argument("--modes", type=_sizes, help="test functions: M or M1xM2")
    p.add_argument("--points", type=_sizes, help="training points: K or Kx,Ky")
    p.add_argument("--val-points", dest="val_points", type=_sizes)
    p.add_argument("--lambda", dest="lam", type=float, help="LS regularization (default scale-relative)")
    p.add_argument("--lr", type=float)
    p.add_argument("--eval-every", dest="eval_every", type=int, help="validation cadence")
    p.add_argument("--out", help="output directory")


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for flag, name in FLAG_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[name] = val
    cfg = replace(cfg, **overrides)
    return cfg.resolved()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpinnls", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one network")
    _add_run_flags(p)

    p = sub.add_parser("compare", help="Adam and LS/Adam from one initialization")
    _add_run_flags(p, with_optimizer=False)

    p = sub.add_parser("bench-ad", help="spatial-gradient cost ratios per AD mode")
    p.add_argument("--dims", type=int, nargs="+", default=[1, 2])
    p.add_argument("--n", type=int, nargs="+", default=[1, 4, 16, 64])
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--out", type=Path, default=Path("ad_ratios.csv"))

    p = sub.add_parser("bench-cost", help="single-iteration LS/GD vs GD cost ratios")
    p.add_argument("--n", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64, 128, 256])
    p.add_argument("--include-512", action="store_true")
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--out", type=Path, default=Path("cost_ratios.csv"))
    return parser


def _cmd_run(args):
    cfg = config_from_args(args)
    out = cfg.out or "runs"
    _, history = driver.run(cfg, out=out)
    rec = history.last_evaluated()
    print(f"final relative error: {100 * rec['relative_error']:.4f}% (iteration {rec['iteration']})")


def _cmd_compare(args):
    cfg = config_from_args(args)
    out = Path(cfg.out or "runs")
    results = driver.compare(cfg, out=out)
    summaries = {name: driver.summary(h) for name, (_, h) in results.items()}
    driver.dump_summary(out / "summary.json", summaries)
    for name, s in summaries.items():
        print(f"{name:8s} final relative error: {100 * s['relative_error']:.4f}%"
              f"  loss/error correlation: {s['loss_error_correlation']:.4f}")


def _cmd_bench_ad(args):
    cfg = costs.BenchConfig(dims=tuple(args.dims), widths_n=tuple(args.n), width=args.width, depth=args.depth)
    table = costs.ad_ratio_sweep(cfg)
    table.write_csv(args.out)
    print(table.format())


def _cmd_bench_cost(args):
    cfg = costs.BenchConfig(sweep_n=tuple(args.n), include_512=args.include_512,
                            width=args.width, depth=args.depth)
    table = costs.optimizer_cost_sweep(cfg, progress=lambda name, n, r: logging.info("%s N=%d ratio=%.4f", name, n, r))
    table.write_csv(args.out)
    print(table.format())


COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "bench-ad": _cmd_bench_ad, "bench-cost": _cmd_bench_cost}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return 0


if __name__ == "__main__":
    sys.exit(main())

