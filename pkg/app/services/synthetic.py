"""
Synthetic block-structured knowledge graphs.

Entities are partitioned into latent blocks and every relation maps each
block onto one target block. Heads and tails are both drawn with a
popularity skew inside their block, so a few entities per block take part
in most of the links the way a handful of malware families dominate threat
reports. Heads come from a uniformly chosen block; tails come from the
block the relation maps it to. The structure is learnable, which makes
these graphs useful for training demos and for checking that the models
generalize.
"""

from typing import List, Tuple
import logging

import numpy as np

from app.core.exceptions import InvalidParameterError
from app.models.graph import Entity, TripleStore
from app.services.kg_store import build_store

logger = logging.getLogger(__name__)

MAX_DRAWS_PER_TRIPLE = 50


def block_of(entity_id: int, n_entities: int, n_blocks: int) -> int:
    return entity_id * n_blocks // n_entities


def generate_block_kg(
    n_entities: int = 100,
    n_blocks: int = 4,
    n_relations: int = 6,
    n_triples: int = 600,
    skew: float = 1.0,
    seed: int = 42,
) -> TripleStore:
    """
    Draw a random block-structured graph.

    Args:
        n_entities: Entity count, split into ``n_blocks`` near-equal blocks
        n_blocks: Number of latent blocks
        n_relations: Number of relations; each gets a random block permutation
        n_triples: Number of distinct triples to draw
        skew: Zipf exponent of entity popularity inside a block (0 = uniform)
        seed: Seed of the generator

    Returns:
        TripleStore with entities ``e000``.. in id order and relations ``rel0``..
    """
    if n_blocks < 1 or n_entities < n_blocks:
        raise InvalidParameterError("need at least one entity per block")
    if n_relations < 1 or n_triples < 1:
        raise InvalidParameterError("need at least one relation and one triple")
    capacity = n_entities * n_relations * (n_entities // n_blocks)
    if n_triples > capacity // 2:
        raise InvalidParameterError(f"{n_triples} triples is too dense for {n_entities} entities")

    rng = np.random.default_rng(seed)
    members: List[np.ndarray] = [
        np.array([e for e in range(n_entities) if block_of(e, n_entities, n_blocks) == b]) for b in range(n_blocks)
    ]
    weights = []
    for block in members:
        popularity = 1.0 / np.arange(1, len(block) + 1) ** skew
        weights.append(popularity[rng.permutation(len(block))] / popularity.sum())
    targets = [rng.permutation(n_blocks) for _ in range(n_relations)]

    triples = set()
    draws = 0
    while len(triples) < n_triples:
        draws += 1
        if draws > n_triples * MAX_DRAWS_PER_TRIPLE:
            raise InvalidParameterError(f"could only draw {len(triples)} distinct triples")
        source = int(rng.integers(n_blocks))
        head = int(rng.choice(members[source], p=weights[source]))
        relation = int(rng.integers(n_relations))
        block = targets[relation][source]
        tail = int(rng.choice(members[block], p=weights[block]))
        triples.add((head, relation, tail))

    width = len(str(n_entities - 1))
    surfaces = [f"e{i:0{max(width, 3)}d}" for i in range(n_entities)]
    relation_names = [f"rel{r}" for r in range(n_relations)]
    entities = [
        Entity(id=i, surface=s, class_name=f"Block{block_of(i, n_entities, n_blocks)}") for i, s in enumerate(surfaces)
    ]
    surface_triples: List[Tuple[str, str, str]] = [
        (surfaces[h], relation_names[r], surfaces[t]) for h, r, t in sorted(triples)
    ]
    store = build_store(entities, surface_triples, relations=relation_names)
    logger.info(
        f"Generated block KG: n_e={store.n_e}, n_r={store.n_r}, n_t={store.n_t}, blocks={n_blocks}, seed={seed}"
    )
    return store
