from app.models.graph import Entity, GraphStats, RawTriple, Relation, Triple, TripleStore
from app.models.ontology import ClassResolution, OntologySchema, Position, ValidationResult, Verdict
from app.models.params import BatchNormState, Gradients, ModelKind, TransHParams, TuckERParams

__all__ = [
    "Entity",
    "Relation",
    "Triple",
    "RawTriple",
    "TripleStore",
    "GraphStats",
    "OntologySchema",
    "Verdict",
    "Position",
    "ValidationResult",
    "ClassResolution",
    "ModelKind",
    "BatchNormState",
    "TransHParams",
    "TuckERParams",
    "Gradients",
]
