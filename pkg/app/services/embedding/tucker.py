"""
TuckER: a triple scores as the Tucker contraction of a core tensor ``W``
(d_e x d_r x d_e) with head, relation and tail embeddings::

    phi(h, r, t) = sum_ijk W_ijk h_i r_j t_k

The forward pass over a batch of (head, relation) pairs, scored against all
entities at once, runs in this fixed order:

    input dropout(h) -> bn0 -> contraction with r and W -> hidden dropout 1
    -> bn1 -> hidden dropout 2 -> dot product with every entity embedding

Relation rows n_r..2n_r-1 are the reciprocal relations; a head query
``(?, r, t)`` is served as the tail query ``(t, r + n_r, ?)``.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import InvalidParameterError, NonFiniteError, UnknownVocabularyError
from app.models.params import BatchNormState, Gradients, Mode, TuckERParams
from app.services.embedding.layers import (
    apply_mask,
    batchnorm_backward,
    batchnorm_eval,
    batchnorm_train,
    bce_with_logits,
    dropout_mask,
    sigmoid,
)


def init_tucker(
    n_e: int,
    n_r: int,
    d_e: int,
    d_r: int,
    seed: int,
    dropout: Tuple[float, float, float] = (0.3, 0.4, 0.5),
    batch_norm: bool = True,
    bn_momentum: float = 0.1,
) -> TuckERParams:
    if n_e < 1 or n_r < 1 or d_e < 1 or d_r < 1:
        raise InvalidParameterError(
            f"TuckER needs positive sizes, got n_e={n_e}, n_r={n_r}, d_e={d_e}, d_r={d_r}"
        )
    rng = np.random.default_rng(seed)
    # Xavier-normal: std = sqrt(2 / (fan_in + fan_out))
    entity_emb = rng.normal(0.0, np.sqrt(2.0 / (n_e + d_e)), size=(n_e, d_e))
    rel_emb = rng.normal(0.0, np.sqrt(2.0 / (2 * n_r + d_r)), size=(2 * n_r, d_r))
    core = rng.uniform(-1.0, 1.0, size=(d_e, d_r, d_e))
    return TuckERParams(
        entity_emb=entity_emb,
        rel_emb=rel_emb,
        core=core,
        bn0=BatchNormState.fresh(d_e, momentum=bn_momentum) if batch_norm else None,
        bn1=BatchNormState.fresh(d_e, momentum=bn_momentum) if batch_norm else None,
        dropout_rates=tuple(dropout),
    )


def core_contraction(core: np.ndarray, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> float:
    """Bare ``W x1 h x2 r x3 t``."""
    return float(np.einsum("ijk,i,j,k->", core, h, r, t))


def relation_core(core: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Core contracted with a batch of relation vectors, shape (batch, d_e, d_e)."""
    d_e, d_r, _ = core.shape
    return (r @ core.transpose(1, 0, 2).reshape(d_r, d_e * d_e)).reshape(-1, d_e, d_e)


def _check_ids(params: TuckERParams, heads, relations) -> None:
    heads = np.atleast_1d(heads)
    relations = np.atleast_1d(relations)
    bad = heads[(heads < 0) | (heads >= params.n_entities)]
    if bad.size:
        raise UnknownVocabularyError("entity id", int(bad[0]))
    bad = relations[(relations < 0) | (relations >= params.rel_emb.shape[0])]
    if bad.size:
        raise UnknownVocabularyError("relation id", int(bad[0]))


@dataclass
class _ForwardCache:
    heads: np.ndarray
    rels: np.ndarray
    masks: Tuple[Optional[np.ndarray], Optional[np.ndarray], Optional[np.ndarray]]
    x2: np.ndarray
    r: np.ndarray
    w_r: np.ndarray
    x6: np.ndarray
    bn0: Optional[tuple]
    bn1: Optional[tuple]


def forward(
    params: TuckERParams,
    heads: np.ndarray,
    rels: np.ndarray,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, _ForwardCache]:
    """Logits of shape (batch, n_e) for every tail candidate."""
    heads = np.asarray(heads, dtype=np.int64).reshape(-1)
    rels = np.asarray(rels, dtype=np.int64).reshape(-1)
    _check_ids(params, heads, rels)
    train = Mode(mode) == Mode.TRAIN
    batch = heads.shape[0]
    d_e = params.d_e
    p_in, p_h1, p_h2 = params.dropout_rates if train else (0.0, 0.0, 0.0)

    m0 = dropout_mask((batch, d_e), p_in, rng)
    m1 = dropout_mask((batch, d_e), p_h1, rng)
    m2 = dropout_mask((batch, d_e), p_h2, rng)

    x = apply_mask(params.entity_emb[heads], m0)
    bn0_cache = bn1_cache = None
    if params.bn0 is not None:
        if train:
            x, bn0_cache = batchnorm_train(params.bn0, x)
        else:
            x = batchnorm_eval(params.bn0, x)
    x2 = x
    r = params.rel_emb[rels]
    w_r = relation_core(params.core, r)
    x = np.matmul(x2[:, None, :], w_r)[:, 0, :]
    x = apply_mask(x, m1)
    if params.bn1 is not None:
        if train:
            x, bn1_cache = batchnorm_train(params.bn1, x)
        else:
            x = batchnorm_eval(params.bn1, x)
    x6 = apply_mask(x, m2)
    logits = x6 @ params.entity_emb.T
    return logits, _ForwardCache(heads, rels, (m0, m1, m2), x2, r, w_r, x6, bn0_cache, bn1_cache)


def score_tucker(
    params: TuckERParams,
    h_id: int,
    r_id: int,
    t_id: int,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> float:
    if not 0 <= t_id < params.n_entities:
        raise UnknownVocabularyError("entity id", t_id)
    if Mode(mode) == Mode.TRAIN:
        return float(score_tucker_all_tails(params, h_id, r_id, mode, rng)[t_id])

    _check_ids(params, h_id, r_id)
    h = params.entity_emb[h_id]
    if params.bn0 is not None:
        h = batchnorm_eval(params.bn0, h[None, :])[0]
    hidden = np.einsum("i,ijk,j->k", h, params.core, params.rel_emb[r_id])
    if params.bn1 is not None:
        hidden = batchnorm_eval(params.bn1, hidden[None, :])[0]
    return float(np.dot(hidden, params.entity_emb[t_id]))


def score_tucker_all_tails(
    params: TuckERParams,
    h_id: int,
    r_id: int,
    mode: Mode = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    logits, _ = forward(params, np.array([h_id]), np.array([r_id]), mode, rng)
    return logits[0]


def score_tucker_all_heads(params: TuckERParams, r_id: int, t_id: int) -> np.ndarray:
    if not 0 <= r_id < params.n_relations:
        raise UnknownVocabularyError("relation id", r_id)
    return score_tucker_all_tails(params, t_id, r_id + params.n_relations)


def loss_and_gradients(
    params: TuckERParams,
    heads: np.ndarray,
    rels: np.ndarray,
    targets: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> Gradients:
    """
    1-N binary cross-entropy of a batch of (head, relation) pairs against
    their (batch, n_e) target matrix, with train-mode forward pass.

    Raises:
        NonFiniteError: the forward pass produced NaN/inf
    """
    logits, cache = forward(params, heads, rels, Mode.TRAIN, rng)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteError("logits")
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != logits.shape:
        raise InvalidParameterError(f"targets shape {targets.shape} != logits shape {logits.shape}")
    loss, dlogits = bce_with_logits(logits, targets)

    grads: Dict[str, np.ndarray] = {name: np.zeros_like(a) for name, a in params.trainable().items()}
    m0, m1, m2 = cache.masks

    grads["entity_emb"] += dlogits.T @ cache.x6
    dx = apply_mask(dlogits @ params.entity_emb, m2)
    if cache.bn1 is not None:
        dx, grads["bn1.gamma"], grads["bn1.beta"] = batchnorm_backward(dx, cache.bn1)
    dx3 = apply_mask(dx, m1)

    batch, d_e = cache.x2.shape
    d_r = cache.r.shape[1]
    head_rel = (cache.x2[:, :, None] * cache.r[:, None, :]).reshape(batch, d_e * d_r)
    grads["core"] = (head_rel.T @ dx3).reshape(d_e, d_r, d_e)
    head_out = (cache.x2[:, :, None] * dx3[:, None, :]).reshape(batch, d_e * d_e)
    dr = head_out @ params.core.transpose(0, 2, 1).reshape(d_e * d_e, d_r)
    np.add.at(grads["rel_emb"], cache.rels, dr)
    dx = np.matmul(cache.w_r, dx3[:, :, None])[:, :, 0]
    if cache.bn0 is not None:
        dx, grads["bn0.gamma"], grads["bn0.beta"] = batchnorm_backward(dx, cache.bn0)
    np.add.at(grads["entity_emb"], cache.heads, apply_mask(dx, m0))

    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(name)
    return Gradients(loss=loss, grads=grads)


def multi_hot(tail_sets: Sequence, n_e: int, label_smoothing: float = 0.0) -> np.ndarray:
    """Target matrix; smoothing maps y to (1 - eps) * y + eps / n_e."""
    targets = np.zeros((len(tail_sets), n_e))
    lengths = np.array([len(tails) for tails in tail_sets], dtype=np.int64)
    rows = np.repeat(np.arange(len(tail_sets)), lengths)
    cols = np.fromiter((t for tails in tail_sets for t in tails), dtype=np.int64, count=int(lengths.sum()))
    targets[rows, cols] = 1.0
    if label_smoothing > 0.0:
        targets = (1.0 - label_smoothing) * targets + label_smoothing / n_e
    return targets


def confidence(value):
    """Logistic sigmoid of the raw logit."""
    return sigmoid(value)
