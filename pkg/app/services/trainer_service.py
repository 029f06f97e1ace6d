"""
Training loops.

TransH trains on (positive, corrupted) pairs with the margin ranking loss and
re-normalizes hyperplane normals after every step. TuckER trains 1-N: every
(head, relation) pair of the training set, reciprocal pairs included, is
scored against all entities with binary cross-entropy against its multi-hot
tail vector. Both use Adam. One iteration is one full pass over the
training set.
"""

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple
import json
import logging
import time

import numpy as np
from tqdm import tqdm

from app.core.config import settings
from app.core.exceptions import InvalidParameterError, NonFiniteError
from app.models.graph import Triple, TripleStore
from app.models.params import ModelKind
from app.schemas.report import EvalMode
from app.schemas.training import HistoryRecord, TrainConfig, TrainHistory
from app.services.embedding import EmbeddingModel, Params, gradients, init_model
from app.services.embedding import transh, tucker
from app.services.evaluation_service import evaluate

logger = logging.getLogger(__name__)

NEGATIVE_RETRIES = 64


class AdamOptimizer:
    """Adam over a dict of named arrays, updated in place."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.step_count += 1
        correction1 = 1.0 - self.beta1 ** self.step_count
        correction2 = 1.0 - self.beta2 ** self.step_count
        for name, grad in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(grad)
                self.v[name] = np.zeros_like(grad)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def triple_keys(triples, n_e: int, n_r: int) -> np.ndarray:
    """Distinct int64 keys for (head, relation, tail) rows with ids below n_e and n_r."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    return (triples[:, 0] * n_r + triples[:, 1]) * n_e + triples[:, 2]


def sample_negatives(
    positives,
    n_e: int,
    n_r: int,
    rng: np.random.Generator,
    known_keys: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int]:
    """
    Corrupt the head or tail (fair coin) of every row with a different,
    uniformly drawn entity. Rows whose corruption is a known triple are
    redrawn, up to 64 times.

    Args:
        positives: (N, 3) array of id triples
        n_e: Entity count
        n_r: Relation count, used to key the rows
        rng: Random generator
        known_keys: ``triple_keys`` of the triples that must not be returned

    Returns:
        (corrupted rows, fallbacks) where ``fallbacks`` counts rows whose
        draws all hit known triples; those rows keep their last corruption
    """
    if n_e < 2:
        raise InvalidParameterError("negative sampling needs at least two entities")
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
    corrupted = positives.copy()
    pending = np.arange(len(positives))
    for _ in range(NEGATIVE_RETRIES):
        rows = positives[pending]
        index = np.arange(len(pending))
        column = np.where(rng.random(len(pending)) < 0.5, 0, 2)
        replacement = rng.integers(n_e - 1, size=len(pending))
        replacement += replacement >= rows[index, column]
        rows[index, column] = replacement
        corrupted[pending] = rows
        if known_keys is None or not known_keys.size:
            return corrupted, 0
        pending = pending[np.isin(triple_keys(rows, n_e, n_r), known_keys)]
        if not pending.size:
            return corrupted, 0
    return corrupted, int(pending.size)


def sample_negative(
    triple: Triple,
    n_e: int,
    rng: np.random.Generator,
    known: Optional[Set[Triple]] = None,
) -> Tuple[Triple, bool]:
    """
    Single-triple form of ``sample_negatives``.

    Returns:
        (corrupted triple, fell_back) where ``fell_back`` is True when 64
        draws all hit known triples and the last one was accepted anyway
    """
    triple = Triple(*triple)
    known_rows = np.array([tuple(t) for t in known or ()], dtype=np.int64).reshape(-1, 3)
    n_r = int(max(triple.relation, known_rows[:, 1].max(initial=0))) + 1
    corrupted, fallbacks = sample_negatives([triple], n_e, n_r, rng, triple_keys(known_rows, n_e, n_r))
    return Triple(*(int(i) for i in corrupted[0])), bool(fallbacks)


def tucker_training_pairs(triples: Sequence[Triple], n_r: int) -> Tuple[np.ndarray, List[Set[int]]]:
    """(head, relation) pairs with reciprocal relations, and their tail sets."""
    tails: Dict[Tuple[int, int], Set[int]] = defaultdict(set)
    for h, r, t in triples:
        tails[(h, r)].add(t)
        tails[(t, r + n_r)].add(h)
    keys = sorted(tails)
    return np.array(keys, dtype=np.int64).reshape(-1, 2), [tails[k] for k in keys]


class Trainer:
    def __init__(
        self,
        config: TrainConfig,
        store: TripleStore,
        history_path: Optional[Path] = None,
        progress: bool = True,
    ):
        self.config = config
        self.store = store
        self.history_path = Path(history_path) if history_path else None
        self.progress = progress
        self.rng = np.random.default_rng(config.seed)
        self.eval_workers = 1 if config.deterministic else settings.EVAL_WORKERS

    def init_params(self) -> Params:
        c = self.config
        return init_model(
            c.model,
            self.store.n_e,
            self.store.n_r,
            c.d_e,
            c.d_r,
            c.seed,
            dropout=c.dropout,
            batch_norm=c.batch_norm,
            bn_momentum=c.bn_momentum,
        )

    def _write_record(self, record: HistoryRecord) -> None:
        if self.history_path is None:
            return
        with open(self.history_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record.model_dump()) + "\n")

    def _tucker_epoch(self, params, optimizer: AdamOptimizer, pairs: np.ndarray, tail_sets, iteration: int) -> float:
        c = self.config
        order = self.rng.permutation(len(pairs))
        losses = []
        for batch_no, start in enumerate(range(0, len(order), c.batch_size)):
            idx = order[start:start + c.batch_size]
            targets = tucker.multi_hot([tail_sets[i] for i in idx], params.n_entities, c.label_smoothing)
            try:
                result = gradients(params, pairs[idx], targets, rng=self.rng)
            except NonFiniteError as e:
                raise NonFiniteError(e.tensor, iteration, batch_no)
            if not np.isfinite(result.loss):
                raise NonFiniteError("loss", iteration, batch_no)
            optimizer.step(params.trainable(), result.grads)
            losses.append(result.loss)
        return float(np.mean(losses))

    def _transh_epoch(self, params, optimizer: AdamOptimizer, train: np.ndarray, known_keys: np.ndarray, history: TrainHistory, iteration: int) -> float:
        c = self.config
        order = self.rng.permutation(len(train))
        losses = []
        for batch_no, start in enumerate(range(0, len(order), c.batch_size)):
            positives = np.repeat(train[order[start:start + c.batch_size]], c.negatives_per_positive, axis=0)
            negatives, fallbacks = sample_negatives(positives, params.n_entities, self.store.n_r, self.rng, known_keys)
            history.negative_fallbacks += fallbacks
            try:
                result = gradients(params, positives, negatives, margin=c.margin)
            except NonFiniteError as e:
                raise NonFiniteError(e.tensor, iteration, batch_no)
            if not np.isfinite(result.loss):
                raise NonFiniteError("loss", iteration, batch_no)
            optimizer.step(params.trainable(), result.grads)
            transh.normalize_normals(params)
            transh.clamp_entity_norms(params)
            losses.append(result.loss)
        return float(np.mean(losses))

    def train(self, train_triples: Sequence[Triple], valid_triples: Sequence[Triple] = ()) -> Tuple[Params, TrainHistory]:
        c = self.config
        if not train_triples:
            raise InvalidParameterError("training needs at least one triple")
        if c.model == ModelKind.TRANSH and self.store.n_e < 2:
            raise InvalidParameterError("TransH training needs at least two entities")
        if self.history_path is not None:
            self.history_path.write_text("", encoding="utf-8")

        params = self.init_params()
        optimizer = AdamOptimizer(c.learning_rate)
        history = TrainHistory()
        train = np.array([tuple(t) for t in train_triples], dtype=np.int64).reshape(-1, 3)
        if c.model == ModelKind.TUCKER:
            pairs, tail_sets = tucker_training_pairs([Triple(*t) for t in train], self.store.n_r)
        else:
            known_keys = np.unique(triple_keys(train, self.store.n_e, self.store.n_r))

        best_mrr = -1.0
        best_params = None
        stale = 0
        started = time.perf_counter()
        logger.info(
            f"Training {c.model.value} on {len(train)} triples: d_e={c.d_e}, d_r={c.d_r}, "
            f"lr={c.learning_rate}, batch={c.batch_size}, iterations={c.iterations}, seed={c.seed}"
        )

        epochs = tqdm(range(1, c.iterations + 1), desc=f"train {c.model.value}", disable=not self.progress)
        for iteration in epochs:
            if c.model == ModelKind.TUCKER:
                loss = self._tucker_epoch(params, optimizer, pairs, tail_sets, iteration)
            else:
                loss = self._transh_epoch(params, optimizer, train, known_keys, history, iteration)

            record = HistoryRecord(iteration=iteration, loss=loss, wall_clock=time.perf_counter() - started)
            validate = bool(c.validation_every and valid_triples and iteration % c.validation_every == 0)
            if validate:
                report = evaluate(
                    EmbeddingModel(params), valid_triples, self.store, EvalMode.FILTERED, workers=self.eval_workers
                )
                record.valid_mrr = report.mrr
                record.valid_hits10 = report.hits10
                if report.mrr > best_mrr:
                    best_mrr = report.mrr
                    best_params = params.copy()
                    stale = 0
                else:
                    stale += 1
            history.append(record)
            self._write_record(record)
            epochs.set_postfix(loss=f"{loss:.4f}")

            if validate and c.early_stopping and stale >= c.early_stopping:
                logger.info(f"Early stopping at iteration {iteration}; best validation MRR {best_mrr:.4f}")
                history.stopped_early = True
                params = best_params
                break

        if history.negative_fallbacks:
            logger.warning(f"{history.negative_fallbacks} negatives accepted after {NEGATIVE_RETRIES} retries")
        logger.info(f"Training finished: final loss {history.records[-1].loss:.6f}")
        return params, history


def train(
    config: TrainConfig,
    train_triples: Sequence[Triple],
    valid_triples: Sequence[Triple],
    store: TripleStore,
    history_path: Optional[Path] = None,
    progress: bool = False,
) -> Tuple[Params, TrainHistory]:
    return Trainer(config, store, history_path, progress).train(train_triples, valid_triples)
