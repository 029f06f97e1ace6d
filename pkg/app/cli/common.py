"""Argument helpers and loaders shared by the subcommands."""

from pathlib import Path
from typing import List, Optional, Tuple
import argparse

from app.models.graph import Triple, TripleStore
from app.models.ontology import OntologySchema
from app.services.checkpoint_service import Checkpoint, load_checkpoint, vocab_hash
from app.services.embedding import EmbeddingModel
from app.services.ingest_service import read_split_file
from app.services.kg_store import load_store
from app.services.ontology_service import OntologyService


def add_store_argument(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--store", type=Path, required=required, help="store JSON written by 'ingest'")


def add_checkpoint_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--checkpoint", type=Path, required=True, help="checkpoint written by 'train'")


def add_schema_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--schema",
        type=Path,
        default=None,
        help="ontology file (default: $SCHEMA_PATH or the shipped CTI schema)",
    )


def load_schema(path: Optional[Path]) -> OntologySchema:
    return OntologyService(path).schema


def open_store(path: Path) -> TripleStore:
    return load_store(path)


def open_model(store: TripleStore, path: Path) -> Tuple[EmbeddingModel, Checkpoint]:
    checkpoint = load_checkpoint(path, expected_vocab=vocab_hash(store))
    return EmbeddingModel(checkpoint.params), checkpoint


def read_triples(store: TripleStore, path: Optional[Path]) -> List[Triple]:
    """Split file onto store ids; without a file, the whole store."""
    if path is None:
        return store.sorted_triples()
    return read_split_file(store, path)
