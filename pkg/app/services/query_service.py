"""
Analyst queries: complete an incomplete triple with a ranked,
confidence-scored entity list and surface the training evidence behind a
prediction.
"""

from typing import Iterable, List, Optional, Sequence
import logging

import numpy as np

from app.core.exceptions import InvalidParameterError, UnknownVocabularyError
from app.models.graph import Triple, TripleStore
from app.models.ontology import Position
from app.schemas.query import IncompleteTriple, Prediction, SupportingTriple
from app.services.embedding import EmbeddingModel
from app.services.evaluation_service import check_compatible
from app.services.kg_store import known_heads, known_tails

logger = logging.getLogger(__name__)

SUGGESTION_DISTANCE = 2


def edit_distance(a: str, b: str) -> int:
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def suggest(name: str, vocabulary: Iterable[str], max_distance: int = SUGGESTION_DISTANCE) -> List[str]:
    scored = sorted((edit_distance(name, v), v) for v in vocabulary)
    return [v for d, v in scored if d <= max_distance][:5]


def resolve_entity(store: TripleStore, surface: str) -> int:
    entity_id = store.entity_id(surface)
    if entity_id is None:
        raise UnknownVocabularyError("entity", surface, suggest(surface, (e.surface for e in store.entities)))
    return entity_id


def resolve_relation(store: TripleStore, name: str) -> int:
    relation_id = store.relation_id(name)
    if relation_id is None:
        raise UnknownVocabularyError("relation", name, suggest(name, (r.name for r in store.relations)))
    return relation_id


def make_query(store: TripleStore, entity: str, relation: str, missing_slot: Position = Position.TAIL) -> IncompleteTriple:
    return IncompleteTriple(
        known_entity=resolve_entity(store, entity),
        relation=resolve_relation(store, relation),
        missing_slot=missing_slot,
    )


def complete(
    model: EmbeddingModel,
    store: TripleStore,
    incomplete: IncompleteTriple,
    k: int = 10,
    exclude_known: bool = False,
) -> List[Prediction]:
    """
    Top-k candidates for the missing slot.

    Candidates are ordered by plausibility, descending, ties by entity id.
    With ``exclude_known`` entities already linked to the query entity by
    the query relation are left out.
    """
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    check_compatible(model, store)
    if not 0 <= incomplete.known_entity < store.n_e:
        raise UnknownVocabularyError("entity id", incomplete.known_entity)
    if not 0 <= incomplete.relation < store.n_r:
        raise UnknownVocabularyError("relation id", incomplete.relation)

    if incomplete.missing_slot == Position.TAIL:
        scores = model.score_tails(incomplete.known_entity, incomplete.relation)
        known = known_tails(store, incomplete.known_entity, incomplete.relation)
    else:
        scores = model.score_heads(incomplete.relation, incomplete.known_entity)
        known = known_heads(store, incomplete.relation, incomplete.known_entity)

    candidates = np.arange(store.n_e)
    if exclude_known and known:
        candidates = candidates[~np.isin(candidates, list(known))]
    # lexsort: last key is primary
    order = candidates[np.lexsort((candidates, -scores[candidates]))][:k]
    confidences = model.confidence(scores[order])

    predictions = []
    for rank, (entity_id, confidence) in enumerate(zip(order, confidences), start=1):
        entity = store.entities[int(entity_id)]
        predictions.append(
            Prediction(
                entity_id=int(entity_id),
                surface=entity.surface,
                class_name=entity.class_name,
                plausibility=float(scores[entity_id]),
                confidence=float(confidence),
                rank=rank,
            )
        )
    return predictions


def explain(
    store: TripleStore,
    train_triples: Sequence[Triple],
    incomplete: IncompleteTriple,
    prediction: Optional[Prediction] = None,
) -> List[Triple]:
    """
    Training triples an analyst would cite: every triple incident to the
    predicted entity, plus the query entity's triples under the query
    relation. Sorted by id.
    """
    predicted = prediction.entity_id if prediction is not None else None
    evidence = set()
    for triple in train_triples:
        triple = Triple(*triple)
        if predicted is not None and predicted in (triple.head, triple.tail):
            evidence.add(triple)
        if triple.relation != incomplete.relation:
            continue
        anchor = triple.head if incomplete.missing_slot == Position.TAIL else triple.tail
        if anchor == incomplete.known_entity:
            evidence.add(triple)
    return sorted(evidence)


def to_supporting(store: TripleStore, triples: Iterable[Triple]) -> List[SupportingTriple]:
    return [SupportingTriple(head=h, relation=r, tail=t) for h, r, t in (store.surfaces(x) for x in triples)]
