from pydantic import BaseModel, Field
from typing import Dict, List, Optional
import enum

from app.models.ontology import Verdict


class RejectedLine(BaseModel):
    source: str = ""
    line_no: int
    raw: str
    verdict: Verdict
    detail: str


class IngestReport(BaseModel):
    schema_version: int = 1
    accepted: int = 0
    rejected: List[RejectedLine] = []
    duplicates: int = 0
    unchecked: int = 0
    class_overrides: int = 0

    @property
    def total(self) -> int:
        return self.accepted + len(self.rejected) + self.duplicates


class EvalMode(str, enum.Enum):
    RAW = "raw"
    FILTERED = "filtered"


class Direction(str, enum.Enum):
    HEAD = "head"
    TAIL = "tail"


class RankRecord(BaseModel):
    head: int
    relation: int
    tail: int
    direction: Direction
    rank: int = Field(..., ge=1)


class MetricsSummary(BaseModel):
    count: int
    hits1: float
    hits3: float
    hits10: float
    mr: float
    mrr: float


class MetricsReport(BaseModel):
    schema_version: int = 1
    mode: EvalMode
    hits1: float
    hits3: float
    hits10: float
    mr: float
    mrr: float
    per_triple_ranks: List[RankRecord] = []
    per_relation: Optional[Dict[str, MetricsSummary]] = None

    def summary_row(self) -> Dict[str, str]:
        return {
            "Hits@1↑": f"{self.hits1:.1f}",
            "Hits@3↑": f"{self.hits3:.1f}",
            "Hits@10↑": f"{self.hits10:.1f}",
            "MR↓": f"{self.mr:.1f}",
            "MRR↑": f"{self.mrr:.4f}",
        }
