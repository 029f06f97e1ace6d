from pathlib import Path

import numpy as np
import pytest

from app.models.graph import Entity
from app.services.ingest_service import ingest_files
from app.services.kg_store import build_store
from app.services.ontology_service import load_schema_file
from app.services.synthetic import generate_block_kg

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def schema():
    return load_schema_file()


@pytest.fixture
def dustman_store(schema):
    store, _ = ingest_files([FIXTURES / "dustman_triples.tsv"], FIXTURES / "dustman_classes.tsv", schema)
    return store


@pytest.fixture
def stealer_store(schema):
    store, _ = ingest_files([FIXTURES / "stealer_triples.tsv"], FIXTURES / "stealer_classes.tsv", schema)
    return store


@pytest.fixture(scope="session")
def block_store():
    return generate_block_kg(n_entities=100, n_blocks=4, n_relations=6, n_triples=600, seed=42)


@pytest.fixture
def make_random_store():
    """Factory for random stores: ``make_random_store(rng, n_e, n_r, n_t)``."""

    def make(rng: np.random.Generator, n_e: int, n_r: int, n_t: int):
        entities = [Entity(id=i, surface=f"ent{i}") for i in range(n_e)]
        relations = [f"rel{r}" for r in range(n_r)]
        triples = set()
        while len(triples) < n_t:
            h, r, t = int(rng.integers(n_e)), int(rng.integers(n_r)), int(rng.integers(n_e))
            triples.add((f"ent{h}", relations[r], f"ent{t}"))
        return build_store(entities, sorted(triples), relations=relations)

    return make
