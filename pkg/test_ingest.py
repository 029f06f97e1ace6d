import numpy as np
import pytest

from app.core.exceptions import DanglingReferenceError, ParseError
from app.models.ontology import Verdict
from app.services.ingest_service import (
    ingest_corpus,
    ingest_files,
    parse_class_map,
    parse_triple_file,
    read_split_file,
)
from app.services.kg_store import export_corpus, store_to_dict
from app.services.ontology_service import validate_triple

DUSTMAN_CLASSES = "DUSTMAN\tMalware\nZeroCleare\tMalware\nTroy\tLocation\n"


def test_parse_triple_line():
    triples = parse_triple_file("DUSTMAN\tsimilarTo\tZeroCleare\n")
    assert tuple(triples[0][:3]) == ("DUSTMAN", "similarTo", "ZeroCleare")
    assert triples[0].line_no == 1


def test_defanged_indicator_kept_verbatim():
    triples = parse_triple_file("intel-update[.]com\tindicates\tStealer\n")
    assert triples[0].head == "intel-update[.]com"


def test_comments_and_blank_lines_skipped():
    document = "# header\n\nDUSTMAN\tsimilarTo\tZeroCleare\n   \n# trailer\n"
    triples = parse_triple_file(document)
    assert len(triples) == 1
    assert triples[0].line_no == 3


def test_wrong_field_count_reports_line():
    with pytest.raises(ParseError) as info:
        parse_triple_file("DUSTMAN\tsimilarTo\tZeroCleare\na\tb\n", source="corpus.tsv")
    assert info.value.line_no == 2
    assert "corpus.tsv:2" in info.value.detail


def test_empty_field_rejected():
    with pytest.raises(ParseError):
        parse_triple_file("DUSTMAN\t \tZeroCleare\n")


def test_class_map():
    assert parse_class_map("DUSTMAN\tMalware\n") == {"DUSTMAN": "Malware"}
    assert parse_class_map("") == {}


def test_class_map_last_entry_wins(caplog):
    overrides = []
    classes = parse_class_map("Stealer\tSoftware\nStealer\tMalware\n", overrides)
    assert classes == {"Stealer": "Malware"}
    assert overrides == [(2, "Stealer", "Software", "Malware")]
    assert "reclassified" in caplog.text


def test_dustman_corpus_fully_accepted(schema, fixtures_dir):
    store, report = ingest_files(
        [fixtures_dir / "dustman_triples.tsv"], fixtures_dir / "dustman_classes.tsv", schema
    )
    assert report.accepted == 7
    assert report.rejected == []
    assert report.unchecked == 0
    assert store.n_t == 7


def test_malware_location_line_rejected(schema, fixtures_dir):
    store, report = ingest_files(
        [fixtures_dir / "dustman_triples.tsv", fixtures_dir / "prohibited_triples.tsv"],
        fixtures_dir / "dustman_classes.tsv",
        schema,
    )
    assert report.accepted == 7
    assert len(report.rejected) == 1
    rejected = report.rejected[0]
    assert rejected.verdict == Verdict.VIOLATES_RULE
    assert rejected.source == "prohibited_triples.tsv"
    assert rejected.line_no == 1
    assert store.entity_id("Saudi Arabia") is None


def test_rejection_with_inline_corpus(schema):
    document = "DUSTMAN\tsimilarTo\tZeroCleare\nDUSTMAN\tsimilarTo\tTroy\n"
    store, report = ingest_corpus([("c.tsv", document)], DUSTMAN_CLASSES, schema)
    assert report.accepted == 1
    assert [r.line_no for r in report.rejected] == [2]
    assert store.n_e == 2


def test_unknown_relation_rejected_even_without_classes(schema):
    _, report = ingest_corpus([("c.tsv", "x\tfrobnicates\ty\n")], "", schema)
    assert report.rejected[0].verdict == Verdict.UNKNOWN_RELATION


def test_unlabeled_entities_are_unchecked(schema):
    store, report = ingest_corpus([("c.tsv", "DUSTMAN\tinvolves\tmystery.bin\n")], DUSTMAN_CLASSES, schema)
    assert report.accepted == 1
    assert report.unchecked == 1
    assert store.entities[store.entity_id("mystery.bin")].class_name is None


def test_duplicates_counted(schema):
    document = "DUSTMAN\tsimilarTo\tZeroCleare\nDUSTMAN\tsimilarTo\tZeroCleare\n"
    store, report = ingest_corpus([("c.tsv", document)], DUSTMAN_CLASSES, schema)
    assert report.duplicates == 1
    assert report.total == 2
    assert store.n_t == 1


def test_comment_only_file_gives_empty_store(schema):
    store, report = ingest_corpus([("c.tsv", "# nothing here\n")], "", schema)
    assert report.accepted == 0
    assert store.n_t == 0


def test_read_split_file(dustman_store, tmp_path):
    path = tmp_path / "test.tsv"
    path.write_text("dustman.exe\tdrops\tagent.exe\n")
    triples = read_split_file(dustman_store, path)
    assert dustman_store.surfaces(triples[0]) == ("dustman.exe", "drops", "agent.exe")

    path.write_text("dustman.exe\tdrops\tnew.dll\n")
    with pytest.raises(DanglingReferenceError):
        read_split_file(dustman_store, path)


def test_read_split_file_needs_utf8(dustman_store, tmp_path):
    path = tmp_path / "test.tsv"
    path.write_bytes(b"dustman.exe\tdrops\tagent\xff.exe\n")
    with pytest.raises(ParseError) as info:
        read_split_file(dustman_store, path)
    assert info.value.source == str(path)


def test_read_split_file_strips_byte_order_mark(dustman_store, tmp_path):
    path = tmp_path / "test.tsv"
    path.write_bytes("\ufeffdustman.exe\tdrops\tagent.exe\n".encode("utf-8"))
    triples = read_split_file(dustman_store, path)
    assert dustman_store.surfaces(triples[0]) == ("dustman.exe", "drops", "agent.exe")


def random_corpus(rng, schema, n_lines=400):
    """Class map giving every schema class three surfaces, plus triples half drawn from the rules."""
    classes = sorted(schema.classes)
    class_of = {f"ent{i}": classes[i % len(classes)] for i in range(3 * len(classes))}
    by_class = {c: [s for s, k in class_of.items() if k == c] for c in classes}
    surfaces = sorted(class_of)
    relations = sorted(schema.rules) + ["unknownRelation"]
    lines = []
    for _ in range(n_lines):
        if rng.random() < 0.5:
            relation = sorted(schema.rules)[int(rng.integers(len(schema.rules)))]
            domain, range_ = sorted(schema.rules[relation])[int(rng.integers(len(schema.rules[relation])))]
            head = by_class[domain][int(rng.integers(3))]
            tail = by_class[range_][int(rng.integers(3))]
        else:
            relation = relations[int(rng.integers(len(relations)))]
            head = surfaces[int(rng.integers(len(surfaces)))]
            tail = surfaces[int(rng.integers(len(surfaces)))]
        lines.append((head, relation, tail))
    class_map = "".join(f"{s}\t{c}\n" for s, c in class_of.items())
    document = "".join("\t".join(line) + "\n" for line in lines)
    return class_of, lines, class_map, document


@pytest.mark.parametrize("seed", range(5))
def test_ingest_agrees_with_rule_engine(schema, seed):
    class_of, lines, class_map, document = random_corpus(np.random.default_rng(seed), schema)
    store, report = ingest_corpus([("random.tsv", document)], class_map, schema)

    def allowed(head, relation, tail):
        return validate_triple(schema, class_of[head], relation, class_of[tail]).is_valid

    for triple in store.triples:
        assert allowed(*store.surfaces(triple))
    for rejected in report.rejected:
        assert not allowed(*rejected.raw.split("\t"))
    assert {store.surfaces(t) for t in store.triples} == {line for line in lines if allowed(*line)}
    assert report.total == len(lines)
    assert report.unchecked == 0


@pytest.mark.parametrize("seed", range(5))
def test_reingesting_an_export_is_idempotent(schema, seed):
    _, _, class_map, document = random_corpus(np.random.default_rng(100 + seed), schema)
    store, _ = ingest_corpus([("random.tsv", document)], class_map, schema)
    triples_tsv, classes_tsv = export_corpus(store)
    again, report = ingest_corpus([("export.tsv", triples_tsv)], classes_tsv, schema)
    assert report.accepted == store.n_t
    assert report.rejected == []
    assert report.duplicates == 0
    assert store_to_dict(again) == store_to_dict(store)
