from pydantic import BaseModel, Field, field_validator
from typing import List, Optional, Tuple

from app.models.params import ModelKind


class TrainConfig(BaseModel):
    """Hyper-parameters of one training run."""

    model: ModelKind = ModelKind.TUCKER
    d_e: int = Field(200, ge=1)
    d_r: int = Field(30, ge=1)
    learning_rate: float = Field(0.0005, gt=0)
    batch_size: int = Field(128, ge=1)
    iterations: int = Field(500, ge=1, description="Full passes over the training set")
    label_smoothing: float = Field(0.0, ge=0, lt=1)
    margin: float = Field(1.0, gt=0, description="TransH hinge margin")
    negatives_per_positive: int = Field(1, ge=1)
    dropout: Tuple[float, float, float] = (0.3, 0.4, 0.5)
    batch_norm: bool = True
    bn_momentum: float = Field(0.1, gt=0, le=1)
    seed: int = 42
    deterministic: bool = True
    validation_every: int = Field(0, ge=0, description="0 disables validation")
    early_stopping: Optional[int] = Field(None, ge=1, description="Patience in validations")

    @field_validator("dropout")
    @classmethod
    def check_dropout(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        for rate in value:
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"dropout rate {rate} outside [0, 1)")
        return value


class HistoryRecord(BaseModel):
    iteration: int
    loss: float
    valid_mrr: Optional[float] = None
    valid_hits10: Optional[float] = None
    wall_clock: float = 0.0


class TrainHistory(BaseModel):
    records: List[HistoryRecord] = []
    negative_fallbacks: int = 0
    stopped_early: bool = False

    def append(self, record: HistoryRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("history iterations must be strictly increasing")
        self.records.append(record)

    @property
    def losses(self) -> List[float]:
        return [record.loss for record in self.records]
