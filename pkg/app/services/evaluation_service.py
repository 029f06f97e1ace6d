"""
Ranked-candidate evaluation.

Every test triple is ranked twice, as a tail query (h, r, ?) and as a head
query (?, r, t), against all n_e candidate entities. Ties use the mean
policy::

    rank = 1 + #strictly better + round_half_up(#equal others / 2)

so a constant-score model ranks every target in the middle. In filtered mode
candidates other than the target that complete a triple already in the store
(train + valid + test) are removed before ranking.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.core.exceptions import InvalidParameterError, UnknownVocabularyError, VocabularyMismatchError
from app.models.graph import Triple, TripleStore
from app.schemas.report import Direction, EvalMode, MetricsReport, MetricsSummary, RankRecord
from app.services.embedding import EmbeddingModel
from app.services.kg_store import known_heads, known_tails

logger = logging.getLogger(__name__)

HITS_AT = (1, 3, 10)


def tie_rank(scores: np.ndarray, target: int, excluded: Iterable[int] = ()) -> int:
    """Mean-policy rank of ``target`` among ``scores`` minus ``excluded`` candidates."""
    keep = np.ones(scores.shape[0], dtype=bool)
    for entity in excluded:
        if entity != target:
            keep[entity] = False
    value = scores[target]
    survivors = scores[keep]
    better = int(np.sum(survivors > value))
    equal = int(np.sum(survivors == value)) - 1
    return 1 + better + (equal + 1) // 2


def check_compatible(model: EmbeddingModel, store: TripleStore) -> None:
    if model.n_entities != store.n_e or model.n_relations != store.n_r:
        raise VocabularyMismatchError(
            f"Model vocabulary ({model.n_entities} entities, {model.n_relations} relations) does not "
            f"match store ({store.n_e} entities, {store.n_r} relations)"
        )


def _check_triple(store: TripleStore, triple: Triple) -> None:
    for entity in (triple.head, triple.tail):
        if not 0 <= entity < store.n_e:
            raise UnknownVocabularyError("entity id", entity)
    if not 0 <= triple.relation < store.n_r:
        raise UnknownVocabularyError("relation id", triple.relation)


def rank_of_true_entity(
    model: EmbeddingModel,
    triple: Triple,
    direction: Direction,
    store: TripleStore,
    mode: EvalMode = EvalMode.FILTERED,
) -> int:
    """
    Rank of the true entity of ``triple`` for the query that hides it.

    Args:
        model: Trained scorer
        triple: Test triple; the entity in ``direction`` is the one ranked
        direction: ``tail`` ranks t for (h, r, ?), ``head`` ranks h for (?, r, t)
        store: Full graph used for filtering
        mode: raw or filtered

    Returns:
        Rank in 1..n_e
    """
    triple = Triple(*triple)
    _check_triple(store, triple)
    if Direction(direction) == Direction.TAIL:
        scores = model.score_tails(triple.head, triple.relation)
        target = triple.tail
        known = known_tails(store, triple.head, triple.relation)
    else:
        scores = model.score_heads(triple.relation, triple.tail)
        target = triple.head
        known = known_heads(store, triple.relation, triple.tail)
    excluded = known if EvalMode(mode) == EvalMode.FILTERED else ()
    return tie_rank(scores, target, excluded)


def summarize(ranks: Sequence[int]) -> MetricsSummary:
    if not ranks:
        raise InvalidParameterError("cannot summarize an empty rank list")
    count = len(ranks)
    hits = {n: 100.0 * sum(1 for rank in ranks if rank <= n) / count for n in HITS_AT}
    return MetricsSummary(
        count=count,
        hits1=hits[1],
        hits3=hits[3],
        hits10=hits[10],
        mr=sum(ranks) / count,
        mrr=sum(1.0 / rank for rank in ranks) / count,
    )


def evaluate(
    model: EmbeddingModel,
    test_triples: Sequence[Triple],
    store: TripleStore,
    mode: EvalMode = EvalMode.FILTERED,
    group_by_relation: bool = False,
    workers: int = 1,
) -> MetricsReport:
    """
    Pool tail and head ranks of every test triple into one report.

    Hits@n are percentages; MR and MRR are exact means over all ranks.
    """
    if not test_triples:
        raise InvalidParameterError("evaluation needs at least one test triple")
    check_compatible(model, store)
    mode = EvalMode(mode)
    triples = [Triple(*t) for t in test_triples]
    for triple in triples:
        _check_triple(store, triple)

    def rank_pair(triple: Triple) -> Tuple[int, int]:
        return (
            rank_of_true_entity(model, triple, Direction.TAIL, store, mode),
            rank_of_true_entity(model, triple, Direction.HEAD, store, mode),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(rank_pair, triples))
    else:
        pairs = [rank_pair(t) for t in triples]

    records: List[RankRecord] = []
    ranks: List[int] = []
    by_relation: Dict[str, List[int]] = {}
    for triple, (tail_rank, head_rank) in zip(triples, pairs):
        for direction, rank in ((Direction.TAIL, tail_rank), (Direction.HEAD, head_rank)):
            records.append(
                RankRecord(head=triple.head, relation=triple.relation, tail=triple.tail, direction=direction, rank=rank)
            )
            ranks.append(rank)
            if group_by_relation:
                by_relation.setdefault(store.relations[triple.relation].name, []).append(rank)

    summary = summarize(ranks)
    report = MetricsReport(
        mode=mode,
        hits1=summary.hits1,
        hits3=summary.hits3,
        hits10=summary.hits10,
        mr=summary.mr,
        mrr=summary.mrr,
        per_triple_ranks=records,
        per_relation={name: summarize(r) for name, r in sorted(by_relation.items())} if group_by_relation else None,
    )
    logger.info(
        f"Evaluated {len(triples)} triples ({mode.value}): Hits@1={report.hits1:.1f} "
        f"Hits@3={report.hits3:.1f} Hits@10={report.hits10:.1f} MR={report.mr:.1f} MRR={report.mrr:.4f}"
    )
    return report
