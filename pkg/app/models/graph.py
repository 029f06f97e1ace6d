from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Tuple

RECIPROCAL_SUFFIX = "_reverse"


@dataclass(frozen=True)
class Entity:
    id: int
    surface: str
    class_name: Optional[str] = None


@dataclass(frozen=True)
class Relation:
    id: int
    name: str
    is_reciprocal: bool = False


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class RawTriple(NamedTuple):
    """Surface-level triple as read from a corpus file."""

    head: str
    relation: str
    tail: str
    line_no: int = 0
    source: str = ""


@dataclass(frozen=True)
class GraphStats:
    n_e: int
    n_r: int
    n_t: int
    avg_degree: float
    density: float


@dataclass(frozen=True)
class TripleStore:
    """
    Immutable CTI knowledge graph.

    Relations hold base relations only (ids 0..n_r-1); reciprocal ids
    n_r..2n_r-1 are synthesized on demand by ``reciprocal_relation``.
    """

    entities: Tuple[Entity, ...]
    relations: Tuple[Relation, ...]
    triples: FrozenSet[Triple]
    by_head_rel: Mapping[Tuple[int, int], FrozenSet[int]]
    by_rel_tail: Mapping[Tuple[int, int], FrozenSet[int]]
    _entity_ids: Mapping[str, int] = field(repr=False, compare=False, default_factory=dict)
    _relation_ids: Mapping[str, int] = field(repr=False, compare=False, default_factory=dict)

    @property
    def n_e(self) -> int:
        return len(self.entities)

    @property
    def n_r(self) -> int:
        return len(self.relations)

    @property
    def n_t(self) -> int:
        return len(self.triples)

    def entity_id(self, surface: str) -> Optional[int]:
        return self._entity_ids.get(surface)

    def relation_id(self, name: str) -> Optional[int]:
        return self._relation_ids.get(name)

    def reciprocal_relation(self, relation_id: int) -> Relation:
        base = self.relations[relation_id % self.n_r]
        if relation_id >= self.n_r:
            return base
        return Relation(id=relation_id + self.n_r, name=f"{base.name}{RECIPROCAL_SUFFIX}", is_reciprocal=True)

    def relation_name(self, relation_id: int) -> str:
        if relation_id < self.n_r:
            return self.relations[relation_id].name
        return self.relations[relation_id - self.n_r].name + RECIPROCAL_SUFFIX

    def sorted_triples(self) -> List[Triple]:
        return sorted(self.triples)

    def surfaces(self, triple: Triple) -> Tuple[str, str, str]:
        return (
            self.entities[triple.head].surface,
            self.relations[triple.relation].name,
            self.entities[triple.tail].surface,
        )


def frozen_index(index: Dict[Tuple[int, int], set]) -> Mapping[Tuple[int, int], FrozenSet[int]]:
    return MappingProxyType({key: frozenset(values) for key, values in index.items()})
