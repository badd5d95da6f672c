"""Command line entry point: ``polardimer <command> --config run.yaml [--out DIR] [--workers N]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from polardimer.config import load_config
from polardimer.pipeline import COMMANDS, EXIT_VALIDATION, run

log = logging.getLogger("polardimer")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polardimer",
                                description="Field-dressed rovibrational states, association cross sections "
                                            "and radiative cascades of polar diatomics.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path, help="YAML run file")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
    p.add_argument("--workers", type=int, default=None, help="worker processes (overrides workers)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.config.is_file():
        print(f"config: file not found: {args.config}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.workers is not None and args.workers < 1:
        print("workers: must be an integer >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    cfg = load_config(args.config)
    result = run(cfg, args.command, args.out, args.workers)
    for msg in result.diagnostics:
        print(msg, file=sys.stderr)
    for name in result.outputs:
        log.info("wrote %s", name)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
