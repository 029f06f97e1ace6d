from pathlib import Path
import argparse
import logging

from app.cli.common import add_store_argument, open_store
from app.cli.output import JSON, add_format_argument, emit_json, render_table
from app.core.config import settings
from app.core.exceptions import EXIT_OK
from app.services.kg_store import DEFAULT_SPLIT, split, triples_to_tsv

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test")


def register(subparsers) -> None:
    parser = subparsers.add_parser("split", help="deterministic train/valid/test split into TSV files")
    add_store_argument(parser)
    parser.add_argument("--out-dir", type=Path, required=True, help="directory for train.tsv, valid.tsv, test.tsv")
    parser.add_argument(
        "--ratios",
        type=float,
        nargs=3,
        default=list(DEFAULT_SPLIT),
        metavar=("TRAIN", "VALID", "TEST"),
        help="split ratios (default: 0.70 0.15 0.15)",
    )
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="shuffle seed (default: 42)")
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    store = open_store(args.store)
    parts = split(store, tuple(args.ratios), seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, triples in zip(SPLIT_NAMES, parts):
        path = args.out_dir / f"{name}.tsv"
        path.write_text(triples_to_tsv(store, triples), encoding="utf-8")
        paths[name] = path
    logger.info(f"Wrote split files to {args.out_dir}")

    if args.format == JSON:
        emit_json({name: {"path": str(paths[name]), "size": len(part)} for name, part in zip(SPLIT_NAMES, parts)})
    else:
        render_table(
            ["split", "triples", "file"],
            [[name, len(part), paths[name]] for name, part in zip(SPLIT_NAMES, parts)],
            right_align=("triples",),
        )
    return EXIT_OK
