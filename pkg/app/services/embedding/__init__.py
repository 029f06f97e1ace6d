"""
Embedding models.

``init_model``/``gradients``/``confidence`` dispatch on the parameter kind;
``EmbeddingModel`` wraps trained parameters behind the scoring interface the
evaluation and query services use (all candidates at once, higher is more
plausible).
"""

from typing import Optional, Union

import numpy as np

from app.core.exceptions import InvalidParameterError, NonFiniteError, UnknownVocabularyError
from app.models.params import Gradients, ModelKind, Mode, TransHParams, TuckERParams
from app.services.embedding import transh, tucker
from app.services.embedding.layers import batchnorm_forward
from app.services.embedding.transh import project_hyperplane, score_transh
from app.services.embedding.tucker import score_tucker, score_tucker_all_tails

Params = Union[TransHParams, TuckERParams]

__all__ = [
    "EmbeddingModel",
    "Params",
    "batchnorm_forward",
    "confidence",
    "gradients",
    "init_model",
    "project_hyperplane",
    "score_transh",
    "score_tucker",
    "score_tucker_all_tails",
]


def init_model(
    kind: ModelKind,
    n_e: int,
    n_r: int,
    d_e: int,
    d_r: int,
    seed: int,
    dropout=(0.3, 0.4, 0.5),
    batch_norm: bool = True,
    bn_momentum: float = 0.1,
) -> Params:
    """Fresh parameters; TransH ignores ``d_r`` and uses ``d_e`` for relations."""
    kind = ModelKind(kind)
    if kind == ModelKind.TRANSH:
        return transh.init_transh(n_e, n_r, d_e, seed)
    return tucker.init_tucker(n_e, n_r, d_e, d_r, seed, dropout, batch_norm, bn_momentum)


def confidence(value, kind: ModelKind):
    """Map plausibility into [0, 1]: sigmoid for TuckER, exp(-distance) for TransH."""
    value = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(value)):
        raise NonFiniteError("plausibility")
    if ModelKind(kind) == ModelKind.TRANSH:
        return transh.confidence(value)
    return tucker.confidence(value)


def gradients(
    params: Params,
    batch: np.ndarray,
    targets: np.ndarray,
    margin: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> Gradients:
    """
    Loss and analytic gradients for one batch.

    TransH: ``batch`` holds (N, 3) positive triples and ``targets`` the
    row-aligned (N, 3) corrupted triples; the loss is the mean hinge.
    TuckER: ``batch`` holds (N, 2) (head, relation) pairs and ``targets``
    the (N, n_e) multi-hot matrix; the loss is element-mean BCE.
    """
    for name, array in params.trainable().items():
        if not np.all(np.isfinite(array)):
            raise NonFiniteError(name)
    batch = np.asarray(batch, dtype=np.int64)
    if params.kind == ModelKind.TRANSH:
        return transh.margin_loss_and_gradients(params, batch, targets, margin)
    if batch.ndim != 2 or batch.shape[1] != 2:
        raise InvalidParameterError(f"TuckER batch must be (N, 2) pairs, got {batch.shape}")
    return tucker.loss_and_gradients(params, batch[:, 0], batch[:, 1], targets, rng)


class EmbeddingModel:
    """Eval-mode scorer over trained parameters."""

    def __init__(self, params: Params):
        self.params = params

    @property
    def kind(self) -> ModelKind:
        return self.params.kind

    @property
    def n_entities(self) -> int:
        return self.params.n_entities

    @property
    def n_relations(self) -> int:
        return self.params.n_relations

    def _check(self, entity: int, relation: int) -> None:
        if not 0 <= entity < self.n_entities:
            raise UnknownVocabularyError("entity id", entity)
        if not 0 <= relation < self.n_relations:
            raise UnknownVocabularyError("relation id", relation)

    def score_tails(self, head: int, relation: int) -> np.ndarray:
        self._check(head, relation)
        if self.kind == ModelKind.TRANSH:
            return transh.score_all_tails(self.params, head, relation)
        return tucker.score_tucker_all_tails(self.params, head, relation, Mode.EVAL)

    def score_heads(self, relation: int, tail: int) -> np.ndarray:
        self._check(tail, relation)
        if self.kind == ModelKind.TRANSH:
            return transh.score_all_heads(self.params, relation, tail)
        return tucker.score_tucker_all_heads(self.params, relation, tail)

    def score(self, head: int, relation: int, tail: int) -> float:
        if self.kind == ModelKind.TRANSH:
            return score_transh(self.params, head, relation, tail)
        return score_tucker(self.params, head, relation, tail, Mode.EVAL)

    def confidence(self, values) -> np.ndarray:
        return confidence(values, self.kind)
