from dataclasses import dataclass
from typing import FrozenSet, Mapping, Optional, Tuple
import enum


class Verdict(str, enum.Enum):
    VALID = "valid"
    VIOLATES_RULE = "violates_rule"
    UNKNOWN_RELATION = "unknown_relation"
    UNKNOWN_CLASS = "unknown_class"


class Position(str, enum.Enum):
    HEAD = "head"
    TAIL = "tail"


@dataclass(frozen=True)
class OntologySchema:
    classes: FrozenSet[str]
    rules: Mapping[str, FrozenSet[Tuple[str, str]]]
    version: Optional[str] = None

    def admissible_classes(self, relation_name: str, position: Position) -> FrozenSet[str]:
        pairs = self.rules.get(relation_name, frozenset())
        index = 0 if position == Position.HEAD else 1
        return frozenset(pair[index] for pair in pairs)


@dataclass(frozen=True)
class ValidationResult:
    verdict: Verdict
    detail: str

    @property
    def is_valid(self) -> bool:
        return self.verdict == Verdict.VALID


@dataclass(frozen=True)
class ClassResolution:
    """Outcome of class disambiguation: a single class, or a tie."""

    class_name: Optional[str]
    tied: Tuple[str, ...] = ()

    @property
    def ambiguous(self) -> bool:
        return self.class_name is None
