"""Command-line interface.

Two subcommands: `select` picks a minimal exposure set for a stack (loaded
from disk or simulated), `benchmark` compares selection strategies on a
simulated scene. Exit codes: 0 success, 2 configuration error, 3 IO error,
4 infeasible classification.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .camera import CameraProfile, default_profile, load_profile
from .errors import ConfigError, InfeasibleError
from .pipeline import (BoundsSpec, RunConfig, default_ladder, parse_ladder_spec,
                       parse_sim_spec, run_benchmark, run_select)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", metavar="PATH",
                   help="camera profile JSON (default: built-in reference profile)")
    p.add_argument("--ladder", metavar="SPEC",
                   help="ladder spec: base=1/4096,count=55,step=1/3 or "
                        "shutters=a:b:c (default: 55 shutters, 1/3 stop)")
    p.add_argument("--cost-mode", choices=("unit", "time"), default="unit",
                   help="selection cost: shots, or shutter+overhead seconds")
    p.add_argument("--snr-db", type=float, default=20.0,
                   help="SNR threshold for the auto lower bound (default 20)")
    p.add_argument("--imin", default="auto",
                   help="lower usable level, or 'auto' to derive from --snr-db")
    p.add_argument("--imax", default="230",
                   help="upper usable level, or 'auto' to estimate saturation")
    p.add_argument("--imax-epsilon", type=float, default=0.01,
                   help="saturated fraction tolerated by --imax auto")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--bins", type=int, default=256, help="histogram bins")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (reports, CSV, figures)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdrcover",
        description="Minimal exposure-set selection for HDR capture",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="choose a minimal exposure set")
    _add_common(sel)
    src = sel.add_mutually_exclusive_group(required=True)
    src.add_argument("--stack-dir", metavar="DIR",
                     help="directory with a captured stack and manifest.json")
    src.add_argument("--simulate", metavar="SPEC",
                     help="synthetic scene: kind=log_gradient,width=192,"
                          "height=128,span=12,noise=on,k=auto")
    sel.add_argument("--dump-instance", action="store_true",
                     help="also write the covering instance as instance.txt")

    ben = sub.add_parser("benchmark", help="compare selection strategies")
    _add_common(ben)
    ben.add_argument("--simulate", metavar="SPEC", required=True,
                     help="synthetic scene spec (ground truth is needed)")
    ben.add_argument("--methods", default="setcover,bracket,extent,full_ladder",
                     help="comma-separated subset of "
                          "setcover,bracket,extent,full_ladder (empty: stats only)")
    ben.add_argument("--bracket-count", type=int, default=3)
    ben.add_argument("--bracket-step", type=float, default=3.0,
                     help="bracket spacing in stops")
    ben.add_argument("--bracket-center", type=int,
                     help="bracket center frame (default: most-covering frame)")
    ben.add_argument("--extent-pct", default="1:99",
                     help="percentile pair lo:hi for the extent baseline")
    return parser


def _bounds_from_args(args: argparse.Namespace) -> BoundsSpec:
    def level(text: str, name: str) -> int | None:
        if text == "auto":
            return None
        try:
            value = int(text)
        except ValueError as exc:
            raise ConfigError(f"--{name} must be an integer or 'auto'") from exc
        if not 0 <= value <= 255:
            raise ConfigError(f"--{name} must lie in 0..255")
        return value

    return BoundsSpec(
        imin=level(args.imin, "imin"),
        imax=level(args.imax, "imax"),
        snr_threshold_db=args.snr_db,
        imax_epsilon=args.imax_epsilon,
    )


def _profile_from_args(args: argparse.Namespace) -> CameraProfile:
    if args.profile is None:
        return default_profile()
    return load_profile(args.profile)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cost_mode = "unit" if args.cost_mode == "unit" else "capture_time"
    profile = _profile_from_args(args)
    if args.ladder is not None:
        ladder = parse_ladder_spec(args.ladder, cost_mode=cost_mode)
    else:
        ladder = default_ladder(cost_mode=cost_mode)

    sim = None
    stack_dir = getattr(args, "stack_dir", None)
    if getattr(args, "simulate", None) is not None:
        sim = parse_sim_spec(args.simulate)
    kwargs = dict(
        profile=profile,
        sim=sim,
        stack_dir=stack_dir,
        bounds=_bounds_from_args(args),
        seed=args.seed,
        out_dir=args.out,
        figures=not args.no_figures,
        bins=args.bins,
        dump_instance=getattr(args, "dump_instance", False),
    )
    if stack_dir is not None and args.ladder is None:
        kwargs["ladder"] = None  # derive from the stack's manifest
    else:
        kwargs["ladder"] = ladder
    if args.command == "benchmark":
        kwargs["bracket_count"] = args.bracket_count
        kwargs["bracket_step_stops"] = args.bracket_step
        kwargs["bracket_center"] = args.bracket_center
        try:
            lo_text, hi_text = args.extent_pct.split(":")
            kwargs["extent_percentiles"] = (float(lo_text), float(hi_text))
        except ValueError as exc:
            raise ConfigError(f"bad --extent-pct {args.extent_pct!r}; "
                              f"expected lo:hi") from exc
    return RunConfig(**kwargs)


def _print_select_summary(doc: dict) -> None:
    sel = doc["selection"]
    cls = doc["classification"]
    print(f"frames: {sel['count']} of {cls['n']} selected, "
          f"cost {sel['total_cost']:g} ({doc['ladder']['cost_mode']})")
    print(f"columns: {sel['columns']}")
    print(f"shutters: {['%g' % t for t in sel['shutters']]}")
    print(f"pixels: {cls['pixel_total']} total, {cls['uncoverable']} uncoverable, "
          f"{cls['repaired']} repaired")


def _print_benchmark_summary(doc: dict) -> None:
    cls = doc["classification"]
    print(f"instance: {cls['distinct_rows']} distinct rows over {cls['n']} frames, "
          f"{cls['uncoverable']} uncoverable pixels")
    for method, entry in doc["methods"].items():
        print(f"{method:>12}: count {entry['count']:3d}  "
              f"cost {entry['total_cost']:8.3f}  log_mse {entry['log_mse']:.6g}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "select":
            doc = run_select(cfg)
            _print_select_summary(doc)
        else:
            methods = tuple(m for m in args.methods.split(",") if m.strip())
            doc = run_benchmark(cfg, methods=methods)
            _print_benchmark_summary(doc)
        return EXIT_OK
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
