import math

import numpy as np
import pytest

from app.core.exceptions import InvalidParameterError, UnknownVocabularyError, VocabularyMismatchError
from app.models.graph import Entity, Triple
from app.models.params import ModelKind
from app.schemas.report import Direction, EvalMode
from app.services.embedding import EmbeddingModel, init_model
from app.services.evaluation_service import evaluate, rank_of_true_entity, summarize, tie_rank
from app.services.kg_store import build_store


class FixedScores:
    """Scorer returning the same candidate scores for every query."""

    def __init__(self, scores, n_relations=1):
        self.scores = np.asarray(scores, dtype=float)
        self.n_entities = len(self.scores)
        self.n_relations = n_relations

    def score_tails(self, head, relation):
        return self.scores

    def score_heads(self, relation, tail):
        return self.scores


def star_store(n_e=8):
    """Entity 0 links to 1..4 under ``r``; entity 5 links back to 0."""
    entities = [Entity(id=i, surface=f"e{i}") for i in range(n_e)]
    triples = [("e0", "r", f"e{t}") for t in range(1, 5)] + [("e5", "r", "e0")]
    return build_store(entities, triples, relations=["r"])


def oracle_rank(scores, target, excluded):
    """Sort the survivors and average the best and worst position of the target's score."""
    survivors = [(s, e) for e, s in enumerate(scores) if e == target or e not in excluded]
    ordered = sorted((s for s, _ in survivors), reverse=True)
    value = scores[target]
    positions = [i + 1 for i, s in enumerate(ordered) if s == value]
    return math.floor((positions[0] + positions[-1]) / 2 + 0.5)


def oracle_metrics(model, store, triples, mode):
    ranks = []
    for h, r, t in triples:
        for direction in (Direction.TAIL, Direction.HEAD):
            if direction == Direction.TAIL:
                scores, target = model.score_tails(h, r), t
                known = store.by_head_rel.get((h, r), frozenset())
            else:
                scores, target = model.score_heads(r, t), h
                known = store.by_rel_tail.get((r, t), frozenset())
            excluded = known if mode == EvalMode.FILTERED else frozenset()
            ranks.append(oracle_rank(list(scores), target, excluded))
    count = len(ranks)
    return ranks, {
        "hits1": 100.0 * sum(r <= 1 for r in ranks) / count,
        "hits3": 100.0 * sum(r <= 3 for r in ranks) / count,
        "hits10": 100.0 * sum(r <= 10 for r in ranks) / count,
        "mr": sum(ranks) / count,
        "mrr": sum(1.0 / r for r in ranks) / count,
    }


def test_strictly_best_target_ranks_first():
    assert tie_rank(np.array([0.1, 0.9, 0.3]), 1) == 1


def test_all_equal_scores_rank_in_the_middle():
    assert tie_rank(np.zeros(5), 2) == 3
    assert tie_rank(np.zeros(4), 0) == 3


def test_filtered_rank_drops_known_tails():
    store = star_store()
    # Known tails 1..3 outrank the target 4; 6 and 7 rank below it.
    model = FixedScores([0.0, 0.9, 0.8, 0.7, 0.5, 0.1, 0.05, 0.01])
    triple = Triple(0, 0, 4)
    raw = rank_of_true_entity(model, triple, Direction.TAIL, store, EvalMode.RAW)
    filtered = rank_of_true_entity(model, triple, Direction.TAIL, store, EvalMode.FILTERED)
    assert raw == 4
    assert filtered == raw - 3


def test_summarize_hand_example():
    summary = summarize([1, 3, 20])
    assert summary.hits1 == pytest.approx(33.333, abs=1e-3)
    assert summary.hits3 == pytest.approx(66.667, abs=1e-3)
    assert summary.hits10 == pytest.approx(66.667, abs=1e-3)
    assert summary.mr == pytest.approx(8.0)
    assert round(summary.mrr, 4) == 0.4611


def test_summarize_perfect_model():
    summary = summarize([1] * 7)
    assert (summary.hits1, summary.mr, summary.mrr) == (100.0, 1.0, 1.0)


def test_summarize_empty():
    with pytest.raises(InvalidParameterError):
        summarize([])


@pytest.mark.parametrize("k, n_e", [(4, 100), (9, 5741), (99, 50)])
def test_single_outlier_moves_mean_rank_not_mrr(k, n_e):
    base = summarize([1] * k)
    with_outlier = summarize([1] * k + [n_e])
    assert with_outlier.mr - base.mr == pytest.approx((n_e - 1) / (k + 1))
    assert base.mrr - with_outlier.mrr < 1 / (k + 1)


def test_oracle_equivalence_on_random_graphs(make_random_store):
    rng = np.random.default_rng(2024)
    for instance in range(200):
        n_e = int(rng.integers(2, 51))
        n_r = int(rng.integers(1, 4))
        n_t = int(rng.integers(1, min(60, n_e * n_e * n_r) + 1))
        store = make_random_store(rng, n_e, n_r, n_t)
        kind = ModelKind.TUCKER if instance % 2 else ModelKind.TRANSH
        model = EmbeddingModel(init_model(kind, n_e, n_r, 4, 3, seed=instance))
        test_triples = store.sorted_triples()[: int(rng.integers(1, 11))]
        for mode in EvalMode:
            report = evaluate(model, test_triples, store, mode)
            ranks, metrics = oracle_metrics(model, store, test_triples, mode)
            assert [r.rank for r in report.per_triple_ranks] == ranks
            for name, value in metrics.items():
                assert math.isclose(getattr(report, name), value, rel_tol=1e-12), (instance, mode, name)


def test_filtering_never_worsens_a_rank(make_random_store):
    rng = np.random.default_rng(7)
    for seed in range(20):
        store = make_random_store(rng, 15, 2, 40)
        model = EmbeddingModel(init_model(ModelKind.TUCKER, 15, 2, 4, 3, seed=seed))
        raw = evaluate(model, store.sorted_triples(), store, EvalMode.RAW)
        filtered = evaluate(model, store.sorted_triples(), store, EvalMode.FILTERED)
        for a, b in zip(filtered.per_triple_ranks, raw.per_triple_ranks):
            assert 1 <= a.rank <= b.rank <= store.n_e


def test_report_consistency(make_random_store):
    store = make_random_store(np.random.default_rng(3), 20, 3, 50)
    model = EmbeddingModel(init_model(ModelKind.TRANSH, 20, 3, 6, 6, seed=1))
    report = evaluate(model, store.sorted_triples(), store)
    assert report.mode == EvalMode.FILTERED
    assert report.hits1 <= report.hits3 <= report.hits10
    assert len(report.per_triple_ranks) == 2 * store.n_t
    assert report.mrr == pytest.approx(np.mean([1 / r.rank for r in report.per_triple_ranks]))


def test_concurrent_ranking_matches_sequential(make_random_store):
    store = make_random_store(np.random.default_rng(4), 25, 2, 60)
    model = EmbeddingModel(init_model(ModelKind.TUCKER, 25, 2, 4, 3, seed=9))
    sequential = evaluate(model, store.sorted_triples(), store, workers=1)
    concurrent = evaluate(model, store.sorted_triples(), store, workers=4)
    assert concurrent.model_dump_json() == sequential.model_dump_json()


def test_per_relation_breakdown(make_random_store):
    store = make_random_store(np.random.default_rng(5), 12, 3, 30)
    model = EmbeddingModel(init_model(ModelKind.TUCKER, 12, 3, 4, 3, seed=2))
    report = evaluate(model, store.sorted_triples(), store, group_by_relation=True)
    used = {store.relations[t.relation].name for t in store.triples}
    assert set(report.per_relation) == used
    assert sum(s.count for s in report.per_relation.values()) == 2 * store.n_t


def test_empty_test_set_rejected():
    store = star_store()
    with pytest.raises(InvalidParameterError):
        evaluate(FixedScores(np.zeros(8)), [], store)


def test_unknown_vocabulary_rejected():
    store = star_store()
    with pytest.raises(UnknownVocabularyError):
        evaluate(FixedScores(np.zeros(8)), [Triple(0, 0, 42)], store)
    with pytest.raises(UnknownVocabularyError):
        evaluate(FixedScores(np.zeros(8)), [Triple(0, 3, 1)], store)


def test_model_store_mismatch_rejected():
    with pytest.raises(VocabularyMismatchError):
        evaluate(FixedScores(np.zeros(5)), [Triple(0, 0, 1)], star_store())
