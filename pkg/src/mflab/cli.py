"""Command-line entry point.

Subcommands map onto the experiment runners plus a few lower-level tools;
every run reads one TOML config, writes CSV artifacts and a summary.json
with verdicts into the output directory.  Exit codes: 0 when every verdict
passes, 1 when any fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .experiments import (
    RUNNERS,
    run_couple,
    run_graph_stats,
    run_simulate,
)

SUBCOMMANDS = {
    "graph-stats": run_graph_stats,
    "simulate": run_simulate,
    "fokker-planck": RUNNERS["fp_rates"],
    "couple": run_couple,
    "escape": RUNNERS["escape"],
    "two-clique": RUNNERS["two_clique"],
    "proximity": RUNNERS["proximity_sweep"],
    "degree-tails": RUNNERS["degree_tails"],
}

# subcommands whose config must declare the matching experiment kind
_KIND_OF = {
    "escape": "escape",
    "two-clique": "two_clique",
    "proximity": "proximity_sweep",
    "degree-tails": "degree_tails",
    "fokker-planck": "fp_rates",
}


def _parse_seed_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    else:
        seeds = [int(t) for t in text.split(",") if t]
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed range")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mflab",
        description="interacting diffusions on graphs vs their mean-field limit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, type=Path,
                         help="TOML experiment configuration")
        cmd.add_argument("--out", type=Path, default=None,
                         help="output directory (default: [output] dir)")
        cmd.add_argument("--seeds", type=_parse_seed_range, default=None,
                         help="seed range a..b or comma list, overrides config")
        cmd.add_argument("--workers", type=int, default=None,
                         help="parallel seed jobs (results are identical "
                              "for any worker count)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        expected_kind = _KIND_OF.get(args.command)
        if expected_kind is not None and cfg.kind != expected_kind:
            raise ConfigError(f"subcommand {args.command} needs "
                              f"experiment = \"{expected_kind}\", "
                              f"config declares {cfg.kind!r}")
        if args.seeds is not None:
            sections = dict(cfg.sections)
            sections["seeds"] = {"list": args.seeds}
            cfg = ExperimentConfig(cfg.kind, sections, cfg.sha256, cfg.source)
        out_dir = args.out if args.out is not None else cfg.out_dir()
        report = SUBCOMMANDS[args.command](cfg, out_dir, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for name, verdict in report.verdicts.items():
        state = "PASS" if verdict else "skip" if verdict is None else "FAIL"
        print(f"{state}  {name}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
