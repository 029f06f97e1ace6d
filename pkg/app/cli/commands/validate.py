import argparse

from app.cli.commands.ingest import add_corpus_arguments, print_report
from app.cli.common import load_schema
from app.core.exceptions import EXIT_OK
from app.services.ingest_service import ingest_files


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="dry run of 'ingest': report only, no store written")
    add_corpus_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    _, report = ingest_files(args.triples, args.classes, load_schema(args.schema))
    print_report(report, args.format)
    return EXIT_OK
