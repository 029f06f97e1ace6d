from pathlib import Path
import argparse

from app.cli.common import add_checkpoint_argument, add_store_argument, open_model, open_store, read_triples
from app.cli.output import JSON, add_format_argument, emit_json, render_table
from app.core.exceptions import EXIT_OK, UsageError
from app.models.ontology import Position
from app.schemas.query import QueryResult
from app.services.query_service import complete, explain, make_query, to_supporting


def register(subparsers) -> None:
    parser = subparsers.add_parser("query", help="complete <entity, relation, ?> (or <?, relation, entity>)")
    add_store_argument(parser)
    add_checkpoint_argument(parser)
    parser.add_argument("entity", help="known entity surface, case-sensitive")
    parser.add_argument("relation", help="relation name")
    parser.add_argument("--head", action="store_true", help="predict the head: <?, relation, entity>")
    parser.add_argument("--k", type=int, default=10, help="number of predictions (default: 10)")
    parser.add_argument("--exclude-known", action="store_true", help="omit entities already linked in the store")
    parser.add_argument("--explain", action="store_true", help="list supporting training triples for the top-1")
    parser.add_argument("--train", type=Path, default=None, help="training split used by --explain (default: store)")
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.k < 1:
        raise UsageError("--k must be at least 1")
    store = open_store(args.store)
    model, _ = open_model(store, args.checkpoint)
    slot = Position.HEAD if args.head else Position.TAIL
    incomplete = make_query(store, args.entity, args.relation, slot)
    predictions = complete(model, store, incomplete, k=args.k, exclude_known=args.exclude_known)

    evidence = []
    if args.explain and predictions:
        evidence = to_supporting(store, explain(store, read_triples(store, args.train), incomplete, predictions[0]))

    label = f"<?, {args.relation}, {args.entity}>" if args.head else f"<{args.entity}, {args.relation}, ?>"
    if args.format == JSON:
        emit_json(QueryResult(query=label, model=model.kind.value, predictions=predictions, evidence=evidence))
        return EXIT_OK

    render_table(
        ["Rank", "Entity", "Class", "Confidence"],
        [[p.rank, p.surface, p.class_name or "-", f"{p.confidence:.4f}"] for p in predictions],
        title=label,
        right_align=("Rank", "Confidence"),
    )
    if args.explain:
        render_table(
            ["Head", "Relation", "Tail"],
            [[s.head, s.relation, s.tail] for s in evidence],
            title="Supporting training triples",
        )
    return EXIT_OK
