import numpy as np
import pytest

from app.core.exceptions import InvalidParameterError, UnknownVocabularyError
from app.models.graph import Triple
from app.models.ontology import Position
from app.models.params import ModelKind
from app.schemas.query import IncompleteTriple, Prediction
from app.schemas.report import Direction, EvalMode
from app.services.embedding import EmbeddingModel, init_model
from app.services.evaluation_service import rank_of_true_entity
from app.services.query_service import complete, edit_distance, explain, make_query, suggest, to_supporting


@pytest.fixture
def stealer_model(stealer_store):
    return EmbeddingModel(init_model(ModelKind.TUCKER, stealer_store.n_e, stealer_store.n_r, 6, 3, seed=4))


@pytest.fixture
def block_model(block_store):
    return EmbeddingModel(init_model(ModelKind.TRANSH, block_store.n_e, block_store.n_r, 8, 8, seed=2))


def test_predictions_are_ordered(block_store, block_model):
    query = IncompleteTriple(known_entity=0, relation=1)
    predictions = complete(block_model, block_store, query, k=10)
    assert [p.rank for p in predictions] == list(range(1, 11))
    confidences = [p.confidence for p in predictions]
    assert confidences == sorted(confidences, reverse=True)
    plausibility = [p.plausibility for p in predictions]
    assert plausibility == sorted(plausibility, reverse=True)


def test_k_larger_than_vocabulary(stealer_store, stealer_model):
    query = make_query(stealer_store, "intel-update[.]com", "indicates")
    predictions = complete(stealer_model, stealer_store, query, k=50)
    assert len(predictions) == stealer_store.n_e


def test_full_list_is_permutation_and_agrees_with_ranking(block_store, block_model):
    triple = block_store.sorted_triples()[0]
    query = IncompleteTriple(known_entity=triple.head, relation=triple.relation)
    predictions = complete(block_model, block_store, query, k=block_store.n_e)
    assert sorted(p.entity_id for p in predictions) == list(range(block_store.n_e))
    scores = block_model.score_tails(triple.head, triple.relation)
    assert predictions[0].entity_id == int(np.argmax(scores))
    position = next(p.rank for p in predictions if p.entity_id == triple.tail)
    raw_rank = rank_of_true_entity(block_model, triple, Direction.TAIL, block_store, EvalMode.RAW)
    assert abs(position - raw_rank) <= sum(scores == scores[triple.tail]) - 1


def test_exclude_known(stealer_store, stealer_model):
    query = make_query(stealer_store, "Saffron_Rose", "involvesMalware")
    stealer = stealer_store.entity_id("Stealer")
    everything = complete(stealer_model, stealer_store, query, k=stealer_store.n_e)
    new_only = complete(stealer_model, stealer_store, query, k=stealer_store.n_e, exclude_known=True)
    assert stealer in {p.entity_id for p in everything}
    assert stealer not in {p.entity_id for p in new_only}
    assert len(new_only) == stealer_store.n_e - 1
    assert [p.rank for p in new_only] == list(range(1, len(new_only) + 1))


def test_head_query(stealer_store, stealer_model):
    query = make_query(stealer_store, "Stealer", "involvesMalware", Position.HEAD)
    predictions = complete(stealer_model, stealer_store, query, k=3)
    scores = stealer_model.score_heads(query.relation, query.known_entity)
    assert predictions[0].entity_id == int(np.argmax(scores))


def test_deterministic_output(stealer_store, stealer_model):
    query = make_query(stealer_store, "intel-update[.]com", "indicates")
    assert complete(stealer_model, stealer_store, query) == complete(stealer_model, stealer_store, query)


def test_unknown_entity_suggests_spelling(stealer_store):
    with pytest.raises(UnknownVocabularyError) as info:
        make_query(stealer_store, "Steeler", "indicates")
    assert "Stealer" in info.value.suggestions
    assert "did you mean" in info.value.detail
    with pytest.raises(UnknownVocabularyError):
        make_query(stealer_store, "Stealer", "indicate")


def test_lookup_is_case_sensitive(stealer_store):
    with pytest.raises(UnknownVocabularyError) as info:
        make_query(stealer_store, "stealer", "indicates")
    assert info.value.suggestions == ["Stealer"]


def test_k_must_be_positive(stealer_store, stealer_model):
    with pytest.raises(InvalidParameterError):
        complete(stealer_model, stealer_store, IncompleteTriple(known_entity=0, relation=0), k=0)


def test_edit_distance():
    assert edit_distance("kitten", "sitting") == 3
    assert edit_distance("", "abc") == 3
    assert suggest("DUSTMEN", ["DUSTMAN", "ZeroCleare"]) == ["DUSTMAN"]


def prediction_for(store, surface):
    entity = store.entities[store.entity_id(surface)]
    return Prediction(entity_id=entity.id, surface=surface, plausibility=0.3, confidence=0.57, rank=1)


def test_explain_cites_stealer_training_triples(stealer_store):
    train = stealer_store.sorted_triples()
    query = make_query(stealer_store, "intel-update[.]com", "indicates")
    evidence = to_supporting(stealer_store, explain(stealer_store, train, query, prediction_for(stealer_store, "Stealer")))
    cited = {(s.head, s.relation, s.tail) for s in evidence}
    assert ("office.windowsessentials[.]tk", "indicates", "Stealer") in cited
    assert ("Saffron_Rose", "involvesMalware", "Stealer") in cited
    assert ("intel-update[.]com", "indicates", "Saffron_Rose") in cited
    assert ("Saffron_Rose", "targets", "Iran") not in cited


def test_explain_is_subset_of_training_split(stealer_store):
    train = stealer_store.sorted_triples()[:3]
    query = make_query(stealer_store, "Saffron_Rose", "targets")
    evidence = explain(stealer_store, train, query, prediction_for(stealer_store, "Iran"))
    assert set(evidence) <= set(train)


def test_explain_without_incident_triples(stealer_store):
    query = make_query(stealer_store, "Ajax_Security_Team", "indicates")
    train = [t for t in stealer_store.sorted_triples() if stealer_store.entity_id("Iran") not in (t.head, t.tail)]
    assert explain(stealer_store, train, query, prediction_for(stealer_store, "Iran")) == []
