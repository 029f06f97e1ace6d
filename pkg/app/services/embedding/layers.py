"""
Batch normalization, dropout and loss primitives with hand-written backward
passes. All arithmetic is float64.

Batch-norm momentum convention::

    running_mean = (1 - momentum) * running_mean + momentum * batch_mean
    running_var  = (1 - momentum) * running_var  + momentum * batch_var_unbiased

Train mode normalizes with the biased batch variance; a batch of one
normalizes to zero (variance 0 + eps) and updates the running variance with
the biased estimate.
"""

from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from app.core.exceptions import InvalidParameterError
from app.models.params import BatchNormState, Mode

BNCache = Tuple[np.ndarray, np.ndarray, np.ndarray]


def batchnorm_train(state: BatchNormState, x: np.ndarray) -> Tuple[np.ndarray, BNCache]:
    if x.ndim != 2 or x.shape[1] != state.dim:
        raise InvalidParameterError(f"batch norm expects (N, {state.dim}) input, got {x.shape}")
    n = x.shape[0]
    mean = x.mean(axis=0)
    var = x.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + state.eps)
    x_hat = (x - mean) * inv_std
    out = x_hat * state.gamma + state.beta

    unbiased = var * n / (n - 1) if n > 1 else var
    state.running_mean = (1.0 - state.momentum) * state.running_mean + state.momentum * mean
    state.running_var = (1.0 - state.momentum) * state.running_var + state.momentum * unbiased
    return out, (x_hat, inv_std, state.gamma.copy())


def batchnorm_eval(state: BatchNormState, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != state.dim:
        raise InvalidParameterError(f"batch norm expects (N, {state.dim}) input, got {x.shape}")
    return (x - state.running_mean) / np.sqrt(state.running_var + state.eps) * state.gamma + state.beta


def batchnorm_forward(state: BatchNormState, x: np.ndarray, mode: Mode) -> np.ndarray:
    if Mode(mode) == Mode.TRAIN:
        return batchnorm_train(state, x)[0]
    return batchnorm_eval(state, x)


def batchnorm_backward(dout: np.ndarray, cache: BNCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dgamma, dbeta) for the train-mode forward pass."""
    x_hat, inv_std, gamma = cache
    n = dout.shape[0]
    dbeta = dout.sum(axis=0)
    dgamma = (dout * x_hat).sum(axis=0)
    dx_hat = dout * gamma
    dx = inv_std / n * (n * dx_hat - dx_hat.sum(axis=0) - x_hat * (dx_hat * x_hat).sum(axis=0))
    return dx, dgamma, dbeta


def dropout_mask(shape, rate: float, rng: Optional[np.random.Generator]) -> Optional[np.ndarray]:
    """Inverted-dropout mask scaled by 1/(1-rate); ``None`` means identity."""
    if rate <= 0.0:
        return None
    if rng is None:
        raise InvalidParameterError("train-mode dropout needs a random generator")
    return (rng.random(shape) >= rate) / (1.0 - rate)


def apply_mask(x: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return x if mask is None else x * mask


def sigmoid(x):
    return expit(x)


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Element-mean binary cross-entropy and its gradient w.r.t. the logits."""
    loss = np.logaddexp(0.0, logits) - targets * logits
    grad = (expit(logits) - targets) / logits.size
    return float(loss.mean()), grad
