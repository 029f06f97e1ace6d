"""
Knowledge graph store service.

Builds the immutable ``TripleStore`` from declared entities and surface
triples, computes graph statistics, performs the deterministic
train/valid/test split and (de)serializes stores as JSON documents.

Store document layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "entities":  [{"id": 0, "surface": "DUSTMAN", "class_name": "Malware"}, ...],
      "relations": [{"id": 0, "name": "similarTo"}, ...],
      "triples":   [[0, 0, 1], ...]          # sorted (head, relation, tail) ids
    }
"""

from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple
import json
import logging
import math

import numpy as np

from app.core.exceptions import (
    DanglingReferenceError,
    EmptyStoreError,
    InvalidParameterError,
    ParseError,
    SplitError,
)
from app.core.files import read_text_file
from app.models.graph import (
    Entity,
    GraphStats,
    RawTriple,
    Relation,
    Triple,
    TripleStore,
    frozen_index,
)

logger = logging.getLogger(__name__)

STORE_SCHEMA_VERSION = 1
DEFAULT_SPLIT = (0.70, 0.15, 0.15)

SurfaceTriple = Tuple[str, str, str]


def declare_entities(
    triples: Iterable[SurfaceTriple],
    classes: Optional[Mapping[str, str]] = None,
) -> List[Entity]:
    """Entities of ``triples`` in first-seen order (head before tail)."""
    classes = classes or {}
    seen: Dict[str, Entity] = {}
    for triple in triples:
        for surface in (triple[0], triple[2]):
            if surface not in seen:
                seen[surface] = Entity(id=len(seen), surface=surface, class_name=classes.get(surface))
    return list(seen.values())


def build_store(
    entities: Sequence[Entity],
    triples: Iterable[SurfaceTriple],
    relations: Optional[Sequence[str]] = None,
) -> TripleStore:
    """
    Build an immutable store.

    Args:
        entities: Declared entities; ids must be 0..n-1 in order
        triples: Surface triples (head, relation, tail); duplicates collapse
        relations: Declared relation names. When omitted the relation
            vocabulary is assigned from ``triples`` in first-seen order.

    Returns:
        TripleStore with both adjacency indexes populated

    Raises:
        DanglingReferenceError: a triple names an undeclared entity or relation
    """
    entity_ids: Dict[str, int] = {}
    for position, entity in enumerate(entities):
        if entity.id != position:
            raise InvalidParameterError(f"Entity ids must be contiguous: got {entity.id} at position {position}")
        surface = entity.surface
        if not surface.strip():
            raise ParseError(f"entity {entity.id} has an empty surface")
        if surface in entity_ids:
            raise ParseError(f"entity surface '{surface}' declared twice")
        entity_ids[surface] = entity.id

    relation_ids: Dict[str, int] = {}
    fixed_relations = relations is not None
    for name in relations or ():
        if name not in relation_ids:
            relation_ids[name] = len(relation_ids)

    triple_set: Set[Triple] = set()
    duplicates = 0
    for raw in triples:
        head, relation, tail = raw[0], raw[1], raw[2]
        if head not in entity_ids:
            raise DanglingReferenceError((head, relation, tail), f"head entity '{head}'")
        if tail not in entity_ids:
            raise DanglingReferenceError((head, relation, tail), f"tail entity '{tail}'")
        if relation not in relation_ids:
            if fixed_relations:
                raise DanglingReferenceError((head, relation, tail), f"relation '{relation}'")
            relation_ids[relation] = len(relation_ids)
        triple = Triple(entity_ids[head], relation_ids[relation], entity_ids[tail])
        if triple in triple_set:
            duplicates += 1
        triple_set.add(triple)

    by_head_rel: Dict[Tuple[int, int], set] = defaultdict(set)
    by_rel_tail: Dict[Tuple[int, int], set] = defaultdict(set)
    for triple in triple_set:
        by_head_rel[(triple.head, triple.relation)].add(triple.tail)
        by_rel_tail[(triple.relation, triple.tail)].add(triple.head)

    store = TripleStore(
        entities=tuple(entities),
        relations=tuple(Relation(id=i, name=name) for name, i in relation_ids.items()),
        triples=frozenset(triple_set),
        by_head_rel=frozen_index(by_head_rel),
        by_rel_tail=frozen_index(by_rel_tail),
        _entity_ids=entity_ids,
        _relation_ids=dict(relation_ids),
    )
    if duplicates:
        logger.debug(f"Collapsed {duplicates} duplicate triples")
    logger.info(f"Built store: n_e={store.n_e}, n_r={store.n_r}, n_t={store.n_t}")
    return store


def compute_stats(store: TripleStore) -> GraphStats:
    return stats_from_counts(store.n_e, store.n_r, store.n_t)


def stats_from_counts(n_e: int, n_r: int, n_t: int) -> GraphStats:
    if n_e < 1:
        raise EmptyStoreError("Graph statistics need at least one entity")
    return GraphStats(
        n_e=n_e,
        n_r=n_r,
        n_t=n_t,
        avg_degree=n_t / n_e,
        density=n_t / (n_e * n_e),
    )


def _truncated_scientific(value: float, digits: int = 2) -> str:
    if value == 0:
        return f"{0:.{digits}f}e+00"
    exponent = math.floor(math.log10(abs(value)))
    mantissa = value / 10 ** exponent
    scale = 10 ** digits
    mantissa = math.floor(mantissa * scale + 1e-9) / scale
    return f"{mantissa:.{digits}f}e{exponent:+03d}"


def format_stats(stats: GraphStats) -> Dict[str, str]:
    """Display row: counts, avgDeg (4 d.p.), density fixed (5 d.p.) and scientific."""
    return {
        "n_e": f"{stats.n_e:,}",
        "n_r": f"{stats.n_r}",
        "n_t": f"{stats.n_t:,}",
        "avgDeg": f"{stats.avg_degree:.4f}",
        "density": f"{stats.density:.5f}",
        "density_sci": _truncated_scientific(stats.density),
    }


def split_sizes(n_t: int, ratios: Tuple[float, float, float] = DEFAULT_SPLIT) -> Tuple[int, int, int]:
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError(f"Split ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Split ratios must sum to 1, got {sum(ratios)}")
    if n_t < 3:
        raise SplitError(f"Cannot split {n_t} triples into three non-empty parts")
    n_valid = max(1, math.floor(ratios[1] * n_t + 1e-9))
    n_test = max(1, math.floor(ratios[2] * n_t + 1e-9))
    n_train = n_t - n_valid - n_test
    if n_train < 1:
        raise SplitError(f"Cannot split {n_t} triples into three non-empty parts")
    return n_train, n_valid, n_test


def split(
    store: TripleStore,
    ratios: Tuple[float, float, float] = DEFAULT_SPLIT,
    seed: int = 42,
) -> Tuple[List[Triple], List[Triple], List[Triple]]:
    """Deterministic shuffled split; the remainder of the floors goes to train."""
    n_train, n_valid, _ = split_sizes(store.n_t, ratios)
    ordered = store.sorted_triples()
    order = np.random.default_rng(seed).permutation(len(ordered))
    shuffled = [ordered[i] for i in order]
    train = shuffled[:n_train]
    valid = shuffled[n_train:n_train + n_valid]
    test = shuffled[n_train + n_valid:]
    logger.info(f"Split {store.n_t} triples into {len(train)}/{len(valid)}/{len(test)} (seed={seed})")
    return train, valid, test


def known_tails(store: TripleStore, head: int, relation: int) -> frozenset:
    return store.by_head_rel.get((head, relation), frozenset())


def known_heads(store: TripleStore, relation: int, tail: int) -> frozenset:
    return store.by_rel_tail.get((relation, tail), frozenset())


def store_to_dict(store: TripleStore) -> dict:
    return {
        "schema_version": STORE_SCHEMA_VERSION,
        "entities": [
            {"id": e.id, "surface": e.surface, "class_name": e.class_name} for e in store.entities
        ],
        "relations": [{"id": r.id, "name": r.name} for r in store.relations],
        "triples": [list(t) for t in store.sorted_triples()],
    }


def dumps_store(store: TripleStore) -> str:
    return json.dumps(store_to_dict(store), indent=2, ensure_ascii=False)


def loads_store(document: str) -> TripleStore:
    try:
        data = json.loads(document)
        version = data["schema_version"]
        entities = [
            Entity(id=int(e["id"]), surface=e["surface"], class_name=e.get("class_name"))
            for e in data["entities"]
        ]
        relation_names = [r["name"] for r in sorted(data["relations"], key=lambda r: r["id"])]
        raw = data["triples"]
    except (ValueError, KeyError, TypeError) as e:
        raise ParseError(f"Malformed store document: {e}")
    if version != STORE_SCHEMA_VERSION:
        raise ParseError(f"Unsupported store schema_version {version}")

    surfaces: List[SurfaceTriple] = []
    for item in raw:
        try:
            h, r, t = (int(x) for x in item)
            surfaces.append((entities[h].surface, relation_names[r], entities[t].surface))
        except (ValueError, IndexError, TypeError):
            raise ParseError(f"Store triple {item!r} references unknown ids")
    return build_store(entities, surfaces, relations=relation_names)


def save_store(store: TripleStore, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_store(store))


def load_store(path) -> TripleStore:
    return loads_store(read_text_file(path))


def triples_to_tsv(store: TripleStore, triples: Iterable[Triple]) -> str:
    lines = ["\t".join(store.surfaces(t)) for t in triples]
    return "\n".join(lines) + ("\n" if lines else "")


def resolve_triples(store: TripleStore, raw_triples: Iterable[RawTriple]) -> List[Triple]:
    """Map surface triples onto the ids of ``store``."""
    resolved = []
    for raw in raw_triples:
        head = store.entity_id(raw.head)
        relation = store.relation_id(raw.relation)
        tail = store.entity_id(raw.tail)
        if head is None:
            raise DanglingReferenceError(tuple(raw[:3]), f"head entity '{raw.head}'")
        if relation is None:
            raise DanglingReferenceError(tuple(raw[:3]), f"relation '{raw.relation}'")
        if tail is None:
            raise DanglingReferenceError(tuple(raw[:3]), f"tail entity '{raw.tail}'")
        resolved.append(Triple(head, relation, tail))
    return resolved


def first_seen_order(store: TripleStore) -> List[Triple]:
    """
    Order the triples so that reading them front to back meets entities in
    id order, head before tail. Re-ingesting a store exported in this order
    reproduces its ids.
    """
    incident: Dict[int, List[Triple]] = defaultdict(list)
    for triple in store.sorted_triples():
        incident[triple.head].append(triple)
        if triple.tail != triple.head:
            incident[triple.tail].append(triple)

    ordered: List[Triple] = []
    emitted: Set[Triple] = set()
    introduced = 0
    for entity in range(store.n_e):
        if entity < introduced:
            continue
        chosen = None
        for triple in incident[entity]:
            other = triple.tail if triple.head == entity else triple.head
            if other < entity or triple == Triple(entity, triple.relation, entity):
                chosen = triple
                break
        if chosen is None:
            for triple in incident[entity]:
                if triple.head == entity and triple.tail == entity + 1:
                    chosen = triple
                    break
        if chosen is None:
            logger.warning(f"Entity {entity} has no introducing triple; ids will not round-trip")
            introduced = entity + 1
            continue
        ordered.append(chosen)
        emitted.add(chosen)
        introduced = max(chosen.head, chosen.tail) + 1
    ordered.extend(t for t in store.sorted_triples() if t not in emitted)
    return ordered


def export_corpus(store: TripleStore) -> Tuple[str, str]:
    """(triple TSV, class-map TSV) that re-ingest into an identical store."""
    triples_tsv = triples_to_tsv(store, first_seen_order(store))
    class_lines = [f"{e.surface}\t{e.class_name}" for e in store.entities if e.class_name]
    return triples_tsv, "\n".join(class_lines) + ("\n" if class_lines else "")
