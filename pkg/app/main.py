"""
threat-kg command line.

    python -m app.main <command> [options]

Exit codes: 0 success, 1 domain error (validation, vocabulary, numerics),
2 input or usage error (missing file, malformed input, bad flags).
"""

from typing import List, Optional
import argparse
import logging
import sys

from dotenv import load_dotenv

from app.cli.commands import COMMANDS
from app.core.config import settings
from app.core.exceptions import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, ThreatKGError
from app.core.logging import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Cyber-threat-intelligence knowledge graph: ingest, train, evaluate, query.",
    )
    parser.add_argument("--log-level", default=None, help="overrides $LOG_LEVEL (default: INFO)")
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE_ERROR if e.code else 0

    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ThreatKGError as e:
        logger.error(e.detail)
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_USAGE_ERROR
    except Exception as e:
        logger.error(f"Command '{args.command}' failed: {e}", exc_info=True)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
