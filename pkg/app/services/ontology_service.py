"""
Ontology rule engine.

Loads the class/relationship schema and answers two questions: may a
relationship connect a (head class, tail class) pair, and which of several
candidate classes should an entity take given the relationship it appears in.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple
import logging

from app.core.config import settings
from app.core.exceptions import ClassResolutionError, ParseError, SchemaError, UnknownRelationError
from app.core.files import read_text_file
from app.models.ontology import (
    ClassResolution,
    OntologySchema,
    Position,
    ValidationResult,
    Verdict,
)

logger = logging.getLogger(__name__)

_SECTIONS = ("[classes]", "[rules]")


def load_schema(document: str, source: str = "<schema>") -> OntologySchema:
    """
    Parse a schema document.

    Args:
        document: Text in the layout of ``app/data/cti_schema.txt``
        source: Name used in error messages

    Returns:
        OntologySchema with every rule class declared

    Raises:
        ParseError: malformed line
        SchemaError: rule naming an undeclared class
    """
    classes: Set[str] = set()
    rules: Dict[str, Set[Tuple[str, str]]] = {}
    version: Optional[str] = None
    section: Optional[str] = None

    for line_no, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() in _SECTIONS:
            section = line.lower()
            continue
        fields = line.split()
        if section is None:
            if len(fields) == 2 and fields[0] == "version":
                version = fields[1]
                continue
            raise ParseError("content before [classes] or [rules] section", line_no, source)
        if section == "[classes]":
            if len(fields) != 1:
                raise ParseError(f"class line must hold one name, got {len(fields)} fields", line_no, source)
            classes.add(fields[0])
        else:
            if len(fields) != 3:
                raise ParseError(
                    f"rule line must be '<relation> <domain> <range>', got {len(fields)} fields",
                    line_no,
                    source,
                )
            relation, domain, range_ = fields
            rules.setdefault(relation, set()).add((domain, range_))

    for relation, pairs in rules.items():
        for domain, range_ in pairs:
            for class_name in (domain, range_):
                if class_name not in classes:
                    raise SchemaError(f"{source}: rule '{relation}' names undeclared class '{class_name}'")

    schema = OntologySchema(
        classes=frozenset(classes),
        rules={relation: frozenset(pairs) for relation, pairs in rules.items()},
        version=version,
    )
    logger.info(f"Loaded ontology {source}: {len(classes)} classes, {len(rules)} relationships")
    return schema


def load_schema_file(path: Optional[Path] = None) -> OntologySchema:
    path = Path(path) if path else settings.default_schema_path
    return load_schema(read_text_file(path), source=str(path))


def validate_triple(
    schema: OntologySchema,
    head_class: str,
    relation_name: str,
    tail_class: str,
) -> ValidationResult:
    if relation_name not in schema.rules:
        return ValidationResult(Verdict.UNKNOWN_RELATION, f"relationship '{relation_name}' is not in the ontology")
    for class_name in (head_class, tail_class):
        if class_name not in schema.classes:
            return ValidationResult(Verdict.UNKNOWN_CLASS, f"class '{class_name}' is not in the ontology")
    if (head_class, tail_class) in schema.rules[relation_name]:
        return ValidationResult(Verdict.VALID, f"{head_class} -{relation_name}-> {tail_class} allowed")
    allowed = ", ".join(f"({d}, {r})" for d, r in sorted(schema.rules[relation_name]))
    return ValidationResult(
        Verdict.VIOLATES_RULE,
        f"rule '{relation_name}' does not allow ({head_class}, {tail_class}); allowed: {allowed}",
    )


def resolve_class(
    candidates: Sequence[Tuple[str, float]],
    relation_name: str,
    position: Position,
    schema: OntologySchema,
) -> ClassResolution:
    """
    Pick the class of an entity from NER candidates.

    Candidates inadmissible at ``position`` of ``relation_name`` are dropped;
    the most confident survivor wins, an exact tie at the top is ambiguous.
    """
    if not candidates:
        raise SchemaError("resolve_class needs at least one candidate")
    for name, confidence in candidates:
        if not 0.0 <= confidence <= 1.0:
            raise SchemaError(f"confidence {confidence} for '{name}' outside [0, 1]")
    if relation_name not in schema.rules:
        raise UnknownRelationError(relation_name)

    admissible = schema.admissible_classes(relation_name, Position(position))
    survivors: List[Tuple[str, float]] = [(n, c) for n, c in candidates if n in admissible]
    if not survivors:
        raise ClassResolutionError(relation_name, Position(position).value, candidates)

    best = max(confidence for _, confidence in survivors)
    top = sorted({name for name, confidence in survivors if confidence == best})
    if len(top) > 1:
        return ClassResolution(class_name=None, tied=tuple(top))
    return ClassResolution(class_name=top[0])


class OntologyService:
    """Holds the active schema for a run."""

    def __init__(self, schema_path: Optional[Path] = None):
        self.schema_path = schema_path
        self._schema: Optional[OntologySchema] = None

    @property
    def schema(self) -> OntologySchema:
        if self._schema is None:
            self._schema = load_schema_file(self.schema_path)
        return self._schema

    def validate(self, head_class: str, relation_name: str, tail_class: str) -> ValidationResult:
        return validate_triple(self.schema, head_class, relation_name, tail_class)
