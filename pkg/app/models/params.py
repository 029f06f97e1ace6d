from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple
import enum

import numpy as np


class ModelKind(str, enum.Enum):
    TRANSH = "transh"
    TUCKER = "tucker"


class Mode(str, enum.Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass
class BatchNormState:
    """Learned scale/shift plus running statistics of one batch-norm layer."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, dim: int, momentum: float = 0.1, eps: float = 1e-5) -> "BatchNormState":
        return cls(
            gamma=np.ones(dim),
            beta=np.zeros(dim),
            running_mean=np.zeros(dim),
            running_var=np.ones(dim),
            momentum=momentum,
            eps=eps,
        )

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    def copy(self) -> "BatchNormState":
        return BatchNormState(
            gamma=self.gamma.copy(),
            beta=self.beta.copy(),
            running_mean=self.running_mean.copy(),
            running_var=self.running_var.copy(),
            momentum=self.momentum,
            eps=self.eps,
        )


@dataclass
class TransHParams:
    entity_emb: np.ndarray
    rel_translation: np.ndarray
    rel_normal: np.ndarray

    kind = ModelKind.TRANSH

    @property
    def n_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def n_relations(self) -> int:
        return self.rel_translation.shape[0]

    @property
    def dim(self) -> int:
        return self.entity_emb.shape[1]

    def trainable(self) -> Dict[str, np.ndarray]:
        """Live references to every learned tensor, keyed by name."""
        return {
            "entity_emb": self.entity_emb,
            "rel_translation": self.rel_translation,
            "rel_normal": self.rel_normal,
        }

    def copy(self) -> "TransHParams":
        return TransHParams(
            entity_emb=self.entity_emb.copy(),
            rel_translation=self.rel_translation.copy(),
            rel_normal=self.rel_normal.copy(),
        )


@dataclass
class TuckERParams:
    entity_emb: np.ndarray
    rel_emb: np.ndarray
    core: np.ndarray
    bn0: Optional[BatchNormState] = None
    bn1: Optional[BatchNormState] = None
    dropout_rates: Tuple[float, float, float] = (0.3, 0.4, 0.5)

    kind = ModelKind.TUCKER

    @property
    def n_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def n_relations(self) -> int:
        """Base relations; ``rel_emb`` holds twice as many rows."""
        return self.rel_emb.shape[0] // 2

    @property
    def d_e(self) -> int:
        return self.entity_emb.shape[1]

    @property
    def d_r(self) -> int:
        return self.rel_emb.shape[1]

    @property
    def batch_norm(self) -> bool:
        return self.bn0 is not None

    def trainable(self) -> Dict[str, np.ndarray]:
        arrays = {
            "entity_emb": self.entity_emb,
            "rel_emb": self.rel_emb,
            "core": self.core,
        }
        if self.bn0 is not None:
            arrays["bn0.gamma"] = self.bn0.gamma
            arrays["bn0.beta"] = self.bn0.beta
            arrays["bn1.gamma"] = self.bn1.gamma
            arrays["bn1.beta"] = self.bn1.beta
        return arrays

    def copy(self) -> "TuckERParams":
        return TuckERParams(
            entity_emb=self.entity_emb.copy(),
            rel_emb=self.rel_emb.copy(),
            core=self.core.copy(),
            bn0=self.bn0.copy() if self.bn0 is not None else None,
            bn1=self.bn1.copy() if self.bn1 is not None else None,
            dropout_rates=tuple(self.dropout_rates),
        )


@dataclass
class Gradients:
    """Loss value plus gradients keyed like ``params.trainable()``."""

    loss: float
    grads: Dict[str, np.ndarray] = field(default_factory=dict)

    def norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values())))
