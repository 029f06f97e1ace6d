import json

import numpy as np
import pytest

from app.core.exceptions import (
    DanglingReferenceError,
    EmptyStoreError,
    InvalidParameterError,
    ParseError,
    SplitError,
)
from app.models.graph import Entity, Triple
from app.services.ingest_service import ingest_corpus
from app.services.kg_store import (
    build_store,
    compute_stats,
    declare_entities,
    dumps_store,
    export_corpus,
    format_stats,
    known_heads,
    known_tails,
    load_store,
    loads_store,
    save_store,
    split,
    split_sizes,
    stats_from_counts,
    store_to_dict,
)
from app.services.synthetic import block_of, generate_block_kg


def test_dustman_store_shape(dustman_store):
    assert dustman_store.n_t == 7
    assert dustman_store.n_e == 7
    assert [r.name for r in dustman_store.relations] == ["similarTo", "involves", "drops"]


def test_entity_ids_are_first_seen(dustman_store):
    assert [e.surface for e in dustman_store.entities[:3]] == ["DUSTMAN", "ZeroCleare", "Turla Driver Loader(TDL)"]
    assert dustman_store.entities[0].class_name == "Malware"


def test_known_tails_and_heads(dustman_store):
    s = dustman_store
    tails = known_tails(s, s.entity_id("dustman.exe"), s.relation_id("drops"))
    assert {s.entities[t].surface for t in tails} == {"assistant.sys", "elrawdisk.sys", "agent.exe"}
    heads = known_heads(s, s.relation_id("involves"), s.entity_id("Turla Driver Loader(TDL)"))
    assert {s.entities[h].surface for h in heads} == {"DUSTMAN", "ZeroCleare"}
    assert known_tails(s, s.entity_id("agent.exe"), s.relation_id("drops")) == frozenset()


def test_empty_triples_with_declared_entities():
    entities = [Entity(id=i, surface=name) for i, name in enumerate(["a", "b", "c"])]
    store = build_store(entities, [])
    assert store.n_e == 3
    assert store.n_t == 0
    assert not store.by_head_rel and not store.by_rel_tail


def test_duplicate_triple_collapses():
    triples = [("a", "r", "b"), ("a", "r", "b")]
    store = build_store(declare_entities(triples), triples)
    assert store.n_t == 1


def test_dangling_reference_names_triple():
    entities = [Entity(id=0, surface="a")]
    with pytest.raises(DanglingReferenceError) as info:
        build_store(entities, [("a", "r", "ghost")])
    assert info.value.triple == ("a", "r", "ghost")

    with pytest.raises(DanglingReferenceError):
        build_store([Entity(id=0, surface="a")], [("a", "undeclared", "a")], relations=["r"])


def test_non_contiguous_ids_rejected():
    with pytest.raises(InvalidParameterError):
        build_store([Entity(id=1, surface="a")], [])


def test_reciprocal_relation_names(dustman_store):
    n_r = dustman_store.n_r
    assert dustman_store.relation_name(0) == "similarTo"
    assert dustman_store.relation_name(n_r) == "similarTo_reverse"
    reverse = dustman_store.reciprocal_relation(1)
    assert reverse.id == n_r + 1
    assert reverse.is_reciprocal


def test_stats_reproduce_dataset_table():
    small = format_stats(stats_from_counts(5741, 9, 3027))
    assert small["avgDeg"] == "0.5273"
    assert small["density"] == "0.00009"
    assert small["density_sci"] == "9.18e-05"

    large_stats = stats_from_counts(27354, 9, 40000)
    large = format_stats(large_stats)
    assert round(large_stats.avg_degree, 2) == 1.46
    assert large["avgDeg"] == "1.4623"
    assert large["density_sci"] == "5.34e-05"


def test_stats_of_edgeless_graph():
    stats = stats_from_counts(10, 0, 0)
    assert stats.avg_degree == 0
    assert stats.density == 0


def test_stats_need_entities():
    with pytest.raises(EmptyStoreError):
        stats_from_counts(0, 0, 0)


def test_compute_stats_matches_counts(dustman_store):
    stats = compute_stats(dustman_store)
    assert stats.avg_degree == pytest.approx(1.0)
    assert stats.density == pytest.approx(7 / 49)


@pytest.mark.parametrize(
    "n_t, expected",
    [(100, (70, 15, 15)), (10, (8, 1, 1)), (3, (1, 1, 1)), (7, (5, 1, 1))],
)
def test_split_sizes(n_t, expected):
    assert split_sizes(n_t) == expected


@pytest.mark.parametrize("n_t", [0, 1, 2])
def test_split_needs_three_triples(n_t):
    with pytest.raises(SplitError):
        split_sizes(n_t)


def test_split_rejects_bad_ratios():
    with pytest.raises(SplitError):
        split_sizes(100, (0.5, 0.5, 0.5))


def test_split_partition_and_determinism(make_random_store):
    rng = np.random.default_rng(0)
    for _ in range(100):
        n_t = int(rng.integers(3, 60))
        store = make_random_store(rng, 30, 4, n_t)
        seed = int(rng.integers(1000))
        train, valid, test = split(store, seed=seed)
        assert (len(train), len(valid), len(test)) == split_sizes(store.n_t)
        assert set(train) | set(valid) | set(test) == store.triples
        assert len(set(train) | set(valid) | set(test)) == store.n_t
        assert (train, valid, test) == split(store, seed=seed)


def test_split_of_hundred_triples(make_random_store):
    store = make_random_store(np.random.default_rng(1), 40, 3, 100)
    train, valid, test = split(store, (0.70, 0.15, 0.15), seed=42)
    assert (len(train), len(valid), len(test)) == (70, 15, 15)


def test_store_document_roundtrip(dustman_store):
    restored = loads_store(dumps_store(dustman_store))
    assert store_to_dict(restored) == store_to_dict(dustman_store)
    assert restored.entity_id("agent.exe") == dustman_store.entity_id("agent.exe")


def test_store_document_version_checked(dustman_store):
    document = store_to_dict(dustman_store)
    document["schema_version"] = 99
    with pytest.raises(ParseError):
        loads_store(json.dumps(document))
    with pytest.raises(ParseError):
        loads_store("{not json")


def test_exported_corpus_reingests_identically(dustman_store, schema):
    triples_tsv, classes_tsv = export_corpus(dustman_store)
    store, report = ingest_corpus([("export.tsv", triples_tsv)], classes_tsv, schema)
    assert report.accepted == 7
    assert store_to_dict(store) == store_to_dict(dustman_store)


def test_sorted_triples_are_ordered(dustman_store):
    triples = dustman_store.sorted_triples()
    assert triples == sorted(triples)
    assert all(isinstance(t, Triple) for t in triples)


# Properties over random stores


def random_stores(make_random_store, count=50, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n_e = int(rng.integers(1, 40))
        n_r = int(rng.integers(1, 6))
        n_t = int(rng.integers(0, min(n_e * n_e * n_r, 120) + 1))
        yield make_random_store(rng, n_e, n_r, n_t)


def test_indexes_agree_with_triples(make_random_store):
    for store in random_stores(make_random_store):
        for h, r, t in store.triples:
            assert t in known_tails(store, h, r)
            assert h in known_heads(store, r, t)
        assert sum(len(tails) for tails in store.by_head_rel.values()) == store.n_t
        assert sum(len(heads) for heads in store.by_rel_tail.values()) == store.n_t


def test_stats_identities(make_random_store):
    eps = np.finfo(float).eps
    for store in random_stores(make_random_store):
        stats = compute_stats(store)
        assert abs(stats.avg_degree * stats.n_e - stats.n_t) <= eps * stats.n_t
        assert abs(stats.density * stats.n_e ** 2 - stats.n_t) <= eps * stats.n_t


def test_store_documents_roundtrip_on_random_stores(make_random_store, tmp_path):
    path = tmp_path / "store.json"
    for store in random_stores(make_random_store, count=20):
        save_store(store, path)
        restored = load_store(path)
        assert store_to_dict(restored) == store_to_dict(store)
        assert restored.triples == store.triples


def test_store_file_encoding(dustman_store, tmp_path):
    path = tmp_path / "store.json"
    path.write_bytes(b"\xef\xbb\xbf" + dumps_store(dustman_store).encode("utf-8"))
    assert store_to_dict(load_store(path)) == store_to_dict(dustman_store)

    path.write_bytes(b'{"schema_version": 1, "entities": ["\xff"]}')
    with pytest.raises(ParseError) as info:
        load_store(path)
    assert info.value.source == str(path)


# Synthetic block graphs


def test_block_graph_maps_each_block_to_one_block(block_store):
    tail_blocks = {}
    for h, r, t in block_store.triples:
        tail_blocks.setdefault((r, block_of(h, 100, 4)), set()).add(block_of(t, 100, 4))
    assert all(len(blocks) == 1 for blocks in tail_blocks.values())
    assert block_store.n_t == 600


def test_block_graph_heads_and_tails_are_skewed(block_store):
    heads = np.bincount([t.head for t in block_store.triples], minlength=100).reshape(4, 25)
    tails = np.bincount([t.tail for t in block_store.triples], minlength=100).reshape(4, 25)
    # a block's most popular entity far outnumbers the block average on both ends
    assert np.all(heads.max(axis=1) >= 3 * heads.mean(axis=1))
    assert np.all(tails.max(axis=1) >= 3 * tails.mean(axis=1))


def test_uniform_block_graph_has_flat_heads():
    store = generate_block_kg(n_entities=100, n_blocks=4, n_relations=6, n_triples=600, skew=0.0, seed=42)
    heads = np.bincount([t.head for t in store.triples], minlength=100)
    assert heads.max() < 3 * heads.mean()
