from pathlib import Path
import argparse
import logging

from app.cli.common import add_schema_argument, load_schema
from app.cli.output import JSON, add_format_argument, emit_json, render_table, say
from app.core.exceptions import EXIT_OK
from app.schemas.report import IngestReport
from app.services.ingest_service import ingest_files
from app.services.kg_store import save_store

logger = logging.getLogger(__name__)


def add_corpus_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("triples", type=Path, nargs="+", help="triple TSV files, merged in order")
    parser.add_argument("--classes", type=Path, default=None, help="surface<TAB>class map")
    add_schema_argument(parser)
    add_format_argument(parser)


def register(subparsers) -> None:
    parser = subparsers.add_parser("ingest", help="validate triples against the ontology and build a store")
    add_corpus_arguments(parser)
    parser.add_argument("--out", type=Path, required=True, help="store JSON to write")
    parser.set_defaults(handler=run)


def print_report(report: IngestReport, output_format: str) -> None:
    if output_format == JSON:
        emit_json(report)
        return
    render_table(
        ["accepted", "rejected", "duplicates", "unchecked", "class overrides"],
        [[report.accepted, len(report.rejected), report.duplicates, report.unchecked, report.class_overrides]],
        title="Ingest report",
    )
    if report.rejected:
        render_table(
            ["line", "triple", "verdict", "detail"],
            [
                [f"{r.source}:{r.line_no}" if r.source else r.line_no, r.raw, r.verdict.value, r.detail]
                for r in report.rejected
            ],
            title="Rejected triples",
        )


def run(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    store, report = ingest_files(args.triples, args.classes, schema)
    save_store(store, args.out)
    logger.info(f"Wrote store to {args.out}")
    print_report(report, args.format)
    if args.format != JSON:
        say(f"Store written to {args.out} (n_e={store.n_e}, n_r={store.n_r}, n_t={store.n_t})")
    return EXIT_OK
