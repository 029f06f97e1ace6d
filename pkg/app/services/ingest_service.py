"""
Corpus ingestion.

Reads the tab-separated triple files and entity-class maps produced by an
upstream extraction pipeline, validates every triple against the ontology
and builds the store from the accepted ones.

Triple file: one ``head<TAB>relation<TAB>tail`` per line, ``#`` comments.
Class map:   one ``surface<TAB>class`` per line, ``#`` comments; a later
             entry for the same surface overrides an earlier one.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple
import logging

from app.core.exceptions import ParseError
from app.core.files import read_text_file
from app.models.graph import Entity, RawTriple, Triple, TripleStore
from app.models.ontology import OntologySchema, ValidationResult
from app.schemas.report import IngestReport, RejectedLine
from app.services.kg_store import build_store, resolve_triples
from app.services.ontology_service import validate_triple

logger = logging.getLogger(__name__)


def _content_lines(document: str):
    """Yield (line number, text) for lines that are neither blank nor comments."""
    for line_no, raw in enumerate(document.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        yield line_no, raw


def parse_triple_file(document: str, source: str = "") -> List[RawTriple]:
    """
    Parse a triple TSV document.

    Surfaces are trimmed of surrounding whitespace only; defanged indicators
    such as ``intel-update[.]com`` are kept verbatim.
    """
    triples = []
    for line_no, raw in _content_lines(document):
        fields = raw.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line_no, source or None)
        head, relation, tail = (f.strip() for f in fields)
        if not head or not relation or not tail:
            raise ParseError("empty field", line_no, source or None)
        triples.append(RawTriple(head, relation, tail, line_no, source))
    return triples


def parse_class_map(
    document: str,
    overrides: Optional[List[Tuple[int, str, str, str]]] = None,
    source: str = "",
) -> Dict[str, str]:
    """
    Parse a surface -> class map.

    Args:
        document: Class-map TSV text
        overrides: When given, receives (line, surface, old class, new class)
            for every entry that replaced an earlier one
        source: Name used in error messages

    Returns:
        Mapping from entity surface to class name
    """
    classes: Dict[str, str] = {}
    for line_no, raw in _content_lines(document):
        fields = raw.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", line_no, source or None)
        surface, class_name = (f.strip() for f in fields)
        if not surface or not class_name:
            raise ParseError("empty field", line_no, source or None)
        previous = classes.get(surface)
        if previous is not None and previous != class_name:
            logger.warning(f"Class map line {line_no}: '{surface}' reclassified {previous} -> {class_name}")
            if overrides is not None:
                overrides.append((line_no, surface, previous, class_name))
        classes[surface] = class_name
    return classes


def check_triple(
    raw: RawTriple,
    classes: Dict[str, str],
    schema: OntologySchema,
) -> Optional[ValidationResult]:
    """Validate one triple; ``None`` when a class label is missing (unchecked)."""
    head_class = classes.get(raw.head)
    tail_class = classes.get(raw.tail)
    if raw.relation not in schema.rules:
        return validate_triple(schema, head_class or "", raw.relation, tail_class or "")
    if head_class is None or tail_class is None:
        return None
    return validate_triple(schema, head_class, raw.relation, tail_class)


def ingest_triples(
    raw_triples: Iterable[RawTriple],
    classes: Dict[str, str],
    schema: OntologySchema,
    class_overrides: int = 0,
) -> Tuple[TripleStore, IngestReport]:
    report = IngestReport(class_overrides=class_overrides)
    accepted: List[RawTriple] = []
    seen: Set[Tuple[str, str, str]] = set()
    unchecked: Set[str] = set()

    for raw in raw_triples:
        key = (raw.head, raw.relation, raw.tail)
        result = check_triple(raw, classes, schema)
        if result is not None and not result.is_valid:
            report.rejected.append(
                RejectedLine(
                    source=raw.source,
                    line_no=raw.line_no,
                    raw="\t".join(key),
                    verdict=result.verdict,
                    detail=result.detail,
                )
            )
            logger.warning(f"Rejected {raw.source or 'line'}:{raw.line_no} {key}: {result.detail}")
            continue
        if key in seen:
            report.duplicates += 1
            continue
        seen.add(key)
        if result is None:
            unchecked.update(s for s in (raw.head, raw.tail) if s not in classes)
        accepted.append(raw)

    report.accepted = len(accepted)
    report.unchecked = len(unchecked)

    entities: Dict[str, Entity] = {}
    for raw in accepted:
        for surface in (raw.head, raw.tail):
            if surface not in entities:
                entities[surface] = Entity(id=len(entities), surface=surface, class_name=classes.get(surface))
    store = build_store(list(entities.values()), accepted)

    logger.info(
        f"Ingested {report.total} triples: accepted={report.accepted}, "
        f"rejected={len(report.rejected)}, duplicates={report.duplicates}, unchecked={report.unchecked}"
    )
    return store, report


def ingest_corpus(
    triples_documents: Sequence[Tuple[str, str]],
    class_map_document: str,
    schema: OntologySchema,
) -> Tuple[TripleStore, IngestReport]:
    """
    Ingest one or more triple documents.

    Args:
        triples_documents: (source name, text) pairs, merged in order
        class_map_document: Class-map TSV text
        schema: Ontology used for validation

    Returns:
        (store of accepted triples, report)
    """
    overrides: List[Tuple[int, str, str, str]] = []
    classes = parse_class_map(class_map_document, overrides)
    raw_triples: List[RawTriple] = []
    for source, text in triples_documents:
        raw_triples.extend(parse_triple_file(text, source))
    return ingest_triples(raw_triples, classes, schema, class_overrides=len(overrides))


def ingest_files(
    triples_paths: Sequence[Path],
    class_map_path: Optional[Path],
    schema: OntologySchema,
) -> Tuple[TripleStore, IngestReport]:
    documents = [(Path(p).name, read_text_file(p)) for p in triples_paths]
    class_map = read_text_file(class_map_path) if class_map_path else ""
    return ingest_corpus(documents, class_map, schema)


def read_split_file(store: TripleStore, path: Path) -> List[Triple]:
    """Read a split TSV written by ``split`` and map it onto ``store`` ids."""
    path = Path(path)
    raw = parse_triple_file(read_text_file(path), path.name)
    return resolve_triples(store, raw)
