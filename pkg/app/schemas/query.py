from pydantic import BaseModel, Field
from typing import List, Optional

from app.models.ontology import Position


class IncompleteTriple(BaseModel):
    known_entity: int
    relation: int
    missing_slot: Position = Position.TAIL


class Prediction(BaseModel):
    entity_id: int
    surface: str
    class_name: Optional[str] = None
    plausibility: float
    confidence: float = Field(..., ge=0.0, le=1.0)
    rank: int = Field(..., ge=1)


class SupportingTriple(BaseModel):
    head: str
    relation: str
    tail: str


class QueryResult(BaseModel):
    schema_version: int = 1
    query: str
    model: str
    predictions: List[Prediction] = []
    evidence: List[SupportingTriple] = []
