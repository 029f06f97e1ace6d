"""
Domain errors.

Every error carries a human readable ``detail`` and the exit code the CLI
returns for it: 1 for domain errors (validation, vocabulary, numerics),
2 for input/usage errors.
"""

from typing import Any, List, Optional, Sequence, Tuple

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


class ThreatKGError(Exception):
    exit_code: int = EXIT_DOMAIN_ERROR

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ParseError(ThreatKGError):
    """Malformed line in a triple, class-map or schema document."""

    exit_code = EXIT_USAGE_ERROR

    def __init__(self, detail: str, line_no: Optional[int] = None, source: Optional[str] = None):
        location = ""
        if source:
            location += f"{source}:"
        if line_no is not None:
            location += f"{line_no}: "
        elif location:
            location += " "
        super().__init__(f"{location}{detail}")
        self.line_no = line_no
        self.source = source


class UsageError(ThreatKGError):
    """Command-line flags that conflict or fall outside their range."""

    exit_code = EXIT_USAGE_ERROR


class DanglingReferenceError(ThreatKGError):
    def __init__(self, triple: Tuple[str, str, str], missing: str):
        super().__init__(f"Triple {triple!r} references unknown {missing}")
        self.triple = triple
        self.missing = missing


class EmptyStoreError(ThreatKGError):
    pass


class SplitError(ThreatKGError):
    pass


class SchemaError(ThreatKGError):
    pass


class UnknownRelationError(ThreatKGError):
    def __init__(self, relation: str):
        super().__init__(f"Relation '{relation}' is not declared in the ontology")
        self.relation = relation


class ClassResolutionError(ThreatKGError):
    def __init__(self, relation: str, position: str, rejected: Sequence[Tuple[str, float]]):
        names = ", ".join(f"{name} ({conf:.4f})" for name, conf in rejected)
        super().__init__(
            f"No candidate class is admissible at the {position} of '{relation}'; rejected: {names}"
        )
        self.relation = relation
        self.position = position
        self.rejected = list(rejected)


class UnknownVocabularyError(ThreatKGError):
    def __init__(self, kind: str, name: Any, suggestions: Optional[List[str]] = None):
        message = f"Unknown {kind} '{name}'"
        if suggestions:
            message += f"; did you mean: {', '.join(repr(s) for s in suggestions)}?"
        super().__init__(message)
        self.kind = kind
        self.name = name
        self.suggestions = suggestions or []


class InvalidParameterError(ThreatKGError):
    pass


class NonFiniteError(ThreatKGError):
    def __init__(self, tensor: str, iteration: Optional[int] = None, batch: Optional[int] = None):
        where = ""
        if iteration is not None:
            where += f" at iteration {iteration}"
        if batch is not None:
            where += f", batch {batch}"
        super().__init__(f"Non-finite values in '{tensor}'{where}")
        self.tensor = tensor
        self.iteration = iteration
        self.batch = batch


class CheckpointError(ThreatKGError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class VocabularyMismatchError(CheckpointError):
    pass


class CorruptCheckpointError(CheckpointError):
    pass
