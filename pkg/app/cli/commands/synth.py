from pathlib import Path
import argparse

from app.cli.output import JSON, add_format_argument, emit_json, say
from app.core.config import settings
from app.core.exceptions import EXIT_OK, InvalidParameterError, UsageError
from app.services.kg_store import export_corpus, save_store
from app.services.synthetic import generate_block_kg


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="write a synthetic block-structured store for demos")
    parser.add_argument("--out", type=Path, required=True, help="store JSON to write")
    parser.add_argument("--corpus-dir", type=Path, default=None, help="also write triples.tsv and classes.tsv")
    parser.add_argument("--entities", type=int, default=100, help="(default: 100)")
    parser.add_argument("--blocks", type=int, default=4, help="(default: 4)")
    parser.add_argument("--relations", type=int, default=6, help="(default: 6)")
    parser.add_argument("--triples", type=int, default=600, help="(default: 600)")
    parser.add_argument("--skew", type=float, default=1.0, help="entity popularity exponent inside a block (default: 1.0)")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="(default: 42)")
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    try:
        store = generate_block_kg(
            n_entities=args.entities,
            n_blocks=args.blocks,
            n_relations=args.relations,
            n_triples=args.triples,
            skew=args.skew,
            seed=args.seed,
        )
    except InvalidParameterError as e:
        raise UsageError(e.detail)
    save_store(store, args.out)
    if args.corpus_dir is not None:
        args.corpus_dir.mkdir(parents=True, exist_ok=True)
        triples_tsv, classes_tsv = export_corpus(store)
        (args.corpus_dir / "triples.tsv").write_text(triples_tsv, encoding="utf-8")
        (args.corpus_dir / "classes.tsv").write_text(classes_tsv, encoding="utf-8")

    if args.format == JSON:
        emit_json({"store": str(args.out), "n_e": store.n_e, "n_r": store.n_r, "n_t": store.n_t})
    else:
        say(f"Store written to {args.out} (n_e={store.n_e}, n_r={store.n_r}, n_t={store.n_t})")
    return EXIT_OK
