"""Main entry point for the ``reln`` command line."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

# Allow ``python cli/main.py`` from a checkout
sys.path.insert(0, str(Path(__file__).parent.parent))

from cli.arguments import positive_int
from cli.commands import audit, evaluate, gen_data, gradcheck, info, train
from config import settings
from errors import FileFormatError, IncompatibleError, SpecError
from utils.formatting import format_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

COMMANDS = [gen_data, train, evaluate, audit, gradcheck, info]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reln", description="Reductive Lie neurons: data, training and audits")
    parser.add_argument("--log-level", default=settings.log_level, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--threads", type=positive_int, default=settings.threads, help="worker threads for batches")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def resolved_flags(args: argparse.Namespace) -> dict[str, object]:
    return {key: value for key, value in vars(args).items() if key != "handler"}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    print(format_config(f"reln {args.command}", resolved_flags(args)))

    try:
        return args.handler(args)
    except (OSError, FileFormatError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except (ValidationError, SpecError, IncompatibleError) as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE
    except Exception:
        logger.exception(f"Command '{args.command}' failed")
        raise


if __name__ == "__main__":
    sys.exit(main())
