from pathlib import Path
import argparse

from app.cli.common import add_checkpoint_argument, add_store_argument, open_model, open_store, read_triples
from app.cli.output import JSON, add_format_argument, emit_json, render_table
from app.core.config import settings
from app.core.exceptions import EXIT_OK
from app.schemas.report import EvalMode
from app.services.evaluation_service import evaluate


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="ranked-candidate evaluation: Hits@1/3/10, MR, MRR")
    add_store_argument(parser)
    add_checkpoint_argument(parser)
    parser.add_argument("--test", type=Path, default=None, help="test split TSV (default: whole store)")
    parser.add_argument(
        "--mode",
        choices=[m.value for m in EvalMode],
        default=EvalMode.FILTERED.value,
        help="filtered removes other known-true candidates (default: filtered)",
    )
    parser.add_argument("--by-relation", action="store_true", help="add per-relation metrics")
    parser.add_argument(
        "--workers",
        type=int,
        default=settings.EVAL_WORKERS,
        help="ranking threads (default: $EVAL_WORKERS or 1)",
    )
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    store = open_store(args.store)
    model, _ = open_model(store, args.checkpoint)
    report = evaluate(
        model,
        read_triples(store, args.test),
        store,
        EvalMode(args.mode),
        group_by_relation=args.by_relation,
        workers=args.workers,
    )
    if args.format == JSON:
        emit_json(report)
        return EXIT_OK

    row = report.summary_row()
    render_table(
        ["Model", *row],
        [[model.kind.value, *row.values()]],
        title=f"Evaluation ({report.mode.value})",
        right_align=list(row),
    )
    if report.per_relation:
        render_table(
            ["Relation", "count", "Hits@1↑", "Hits@3↑", "Hits@10↑", "MR↓", "MRR↑"],
            [
                [name, s.count, f"{s.hits1:.1f}", f"{s.hits3:.1f}", f"{s.hits10:.1f}", f"{s.mr:.1f}", f"{s.mrr:.4f}"]
                for name, s in report.per_relation.items()
            ],
            title="Per relation",
        )
    return EXIT_OK
