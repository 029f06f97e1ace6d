"""
TransH: entities are projected onto a relation-specific hyperplane with unit
normal ``w_r`` and translated by ``d_r``::

    h_perp = h - (w_r . h) w_r
    f(h, r, t) = -|| h_perp + d_r - t_perp ||_2^2

Relation vectors share the entity dimension ``d`` (the hyperplane geometry
needs it); ``d_r`` of a run configuration does not apply to this model.
"""

import math

import numpy as np

from app.core.exceptions import InvalidParameterError, UnknownVocabularyError
from app.models.params import Gradients, TransHParams

UNIT_TOLERANCE = 1e-6


def init_transh(n_e: int, n_r: int, dim: int, seed: int) -> TransHParams:
    if n_e < 1 or n_r < 1 or dim < 1:
        raise InvalidParameterError(f"TransH needs positive sizes, got n_e={n_e}, n_r={n_r}, d={dim}")
    rng = np.random.default_rng(seed)
    bound = 6.0 / math.sqrt(dim)
    entity_emb = rng.uniform(-bound, bound, size=(n_e, dim))
    rel_translation = rng.uniform(-bound, bound, size=(n_r, dim))
    rel_normal = rng.uniform(-bound, bound, size=(n_r, dim))
    params = TransHParams(entity_emb=entity_emb, rel_translation=rel_translation, rel_normal=rel_normal)
    normalize_normals(params)
    return params


def normalize_normals(params: TransHParams) -> None:
    norms = np.linalg.norm(params.rel_normal, axis=1, keepdims=True)
    params.rel_normal /= np.where(norms > 0, norms, 1.0)


def clamp_entity_norms(params: TransHParams, max_norm: float = 1.0) -> None:
    norms = np.linalg.norm(params.entity_emb, axis=1, keepdims=True)
    params.entity_emb /= np.maximum(norms / max_norm, 1.0)


def project_hyperplane(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Project ``v`` onto the hyperplane with unit normal ``w``."""
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise InvalidParameterError(f"hyperplane normal must be unit length, |w| = {norm}")
    return v - np.dot(w, v) * w


def _check_ids(params: TransHParams, heads, relations, tails) -> None:
    for name, ids, bound in (
        ("entity", heads, params.n_entities),
        ("relation", relations, params.n_relations),
        ("entity", tails, params.n_entities),
    ):
        ids = np.atleast_1d(ids)
        bad = ids[(ids < 0) | (ids >= bound)]
        if bad.size:
            raise UnknownVocabularyError(f"{name} id", int(bad[0]))


def _project_rows(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    return e - np.sum(e * w, axis=-1, keepdims=True) * w


def distance(params: TransHParams, heads, relations, tails) -> np.ndarray:
    """Squared translation distance for aligned id arrays."""
    heads = np.asarray(heads)
    relations = np.asarray(relations)
    tails = np.asarray(tails)
    w = params.rel_normal[relations]
    diff = (
        _project_rows(params.entity_emb[heads], w)
        + params.rel_translation[relations]
        - _project_rows(params.entity_emb[tails], w)
    )
    return np.sum(diff * diff, axis=-1)


def score_transh(params: TransHParams, h_id: int, r_id: int, t_id: int) -> float:
    _check_ids(params, h_id, r_id, t_id)
    w = params.rel_normal[r_id]
    diff = (
        project_hyperplane(params.entity_emb[h_id], w)
        + params.rel_translation[r_id]
        - project_hyperplane(params.entity_emb[t_id], w)
    )
    return -float(np.dot(diff, diff))


def score_all_tails(params: TransHParams, h_id: int, r_id: int) -> np.ndarray:
    _check_ids(params, h_id, r_id, 0)
    w = params.rel_normal[r_id]
    source = _project_rows(params.entity_emb[h_id], w) + params.rel_translation[r_id]
    diff = source[None, :] - _project_rows(params.entity_emb, w[None, :])
    return -np.sum(diff * diff, axis=1)


def score_all_heads(params: TransHParams, r_id: int, t_id: int) -> np.ndarray:
    _check_ids(params, 0, r_id, t_id)
    w = params.rel_normal[r_id]
    target = _project_rows(params.entity_emb[t_id], w) - params.rel_translation[r_id]
    diff = _project_rows(params.entity_emb, w[None, :]) - target[None, :]
    return -np.sum(diff * diff, axis=1)


def _distance_grads(params: TransHParams, heads, relations, tails, weight: np.ndarray, grads: dict) -> None:
    """Accumulate ``weight * d distance`` into ``grads`` for each row."""
    w = params.rel_normal[relations]
    h = params.entity_emb[heads]
    t = params.entity_emb[tails]
    u = h - t
    wu = np.sum(w * u, axis=1, keepdims=True)
    e = u - wu * w + params.rel_translation[relations]
    we = np.sum(w * e, axis=1, keepdims=True)
    coeff = 2.0 * weight[:, None]

    d_h = coeff * (e - we * w)
    np.add.at(grads["entity_emb"], heads, d_h)
    np.add.at(grads["entity_emb"], tails, -d_h)
    np.add.at(grads["rel_translation"], relations, coeff * e)
    np.add.at(grads["rel_normal"], relations, -coeff * (we * u + wu * e))


def margin_loss_and_gradients(
    params: TransHParams,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float,
) -> Gradients:
    """
    Mean hinge ``max(0, margin + d(pos) - d(neg))`` over aligned rows.

    Args:
        positives: (N, 3) id array of true triples
        negatives: (N, 3) id array of corrupted triples paired row-wise
        margin: Hinge margin

    Returns:
        Gradients keyed like ``params.trainable()``
    """
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(-1, 3)
    if positives.shape != negatives.shape:
        raise InvalidParameterError("positives and negatives must pair row-wise")
    n = positives.shape[0]
    d_pos = distance(params, positives[:, 0], positives[:, 1], positives[:, 2])
    d_neg = distance(params, negatives[:, 0], negatives[:, 1], negatives[:, 2])
    hinge = margin + d_pos - d_neg
    active = (hinge > 0).astype(np.float64)
    loss = float(np.sum(np.maximum(hinge, 0.0)) / n)

    grads = {name: np.zeros_like(array) for name, array in params.trainable().items()}
    weight = active / n
    _distance_grads(params, positives[:, 0], positives[:, 1], positives[:, 2], weight, grads)
    _distance_grads(params, negatives[:, 0], negatives[:, 1], negatives[:, 2], -weight, grads)
    return Gradients(loss=loss, grads=grads)


def confidence(value) -> np.ndarray:
    """exp(-distance), i.e. exp of the (non-positive) plausibility."""
    return np.exp(np.minimum(value, 0.0))

