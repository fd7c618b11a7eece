"""Command-line front door: ``run``, ``preset``, and ``list`` subcommands."""

from __future__ import annotations

import argparse
import sys

from .experiment import list_presets, run, run_preset


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cltlab",
        description=(
            "Run shift-space CLT experiments: operator-side variance routes, "
            "hypothesis checks, and Monte Carlo verdicts, written as a "
            "report bundle."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config file")
    run_p.add_argument("--config", required=True, help="path to the config file")
    run_p.add_argument("--out", required=True, help="output directory for the bundle")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument(
        "--workers", type=int, default=None, help="parallel orbit batches (wall time only)"
    )
    run_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    preset_p = sub.add_parser("preset", help="run a built-in preset")
    preset_p.add_argument("--name", required=True, help="preset name (see `cltlab list`)")
    preset_p.add_argument("--out", required=True, help="output directory for the bundle")
    preset_p.add_argument("--seed", type=int, default=None, help="override the preset seed")
    preset_p.add_argument(
        "--workers", type=int, default=None, help="parallel orbit batches (wall time only)"
    )
    preset_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    sub.add_parser("list", help="list the built-in presets")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        print(list_presets())
        return 0
    if args.command == "run":
        return run(
            args.config,
            args.out,
            seed=args.seed,
            workers=args.workers,
            render_figures=not args.no_figures,
        )
    return run_preset(
        args.name,
        args.out,
        seed=args.seed,
        workers=args.workers,
        render_figures=not args.no_figures,
    )


if __name__ == "__main__":
    sys.exit(main())
