"""Command line: simulate, replay, metrics.

Exit codes: 0 success, 1 parse/config error, 2 replay hash mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .metrics import load_tvl_csv, series_stats
from .protocol import canonical_json
from .runner import run
from .scenario import ScenarioError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MISMATCH = 2


def _write(path: str, data: bytes) -> None:
    Path(path).write_bytes(data + b"\n")


def _load(args):
    config = load_config(args.config)
    return run(Path(args.scenario).read_text(), config, seed=args.seed)


def cmd_simulate(args) -> int:
    result = _load(args)
    _write(args.report, result.report_bytes())
    if args.snapshot:
        _write(args.snapshot, result.snapshot_bytes())
    print(result.state_hash)
    return EXIT_OK


def cmd_replay(args) -> int:
    result = _load(args)
    expected = args.expect.strip().lower()
    if result.state_hash != expected:
        print(f"MISMATCH expected {expected} got {result.state_hash}", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"OK {result.state_hash}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        stats = series_stats(load_tvl_csv(args.tvl_csv))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _write(args.report, canonical_json(stats.to_dict()))
    print(json.dumps(stats.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="makersim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write the report")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--report", required=True)
    sim.add_argument("--snapshot")
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("replay", help="rerun a scenario and compare the final state hash")
    rep.add_argument("--scenario", required=True)
    rep.add_argument("--config", required=True)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--expect", required=True)
    rep.set_defaults(func=cmd_replay)

    met = sub.add_parser("metrics", help="peak, trough and drawdown of a TVL CSV")
    met.add_argument("--tvl-csv", required=True)
    met.add_argument("--report", required=True)
    met.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
