"""
Checkpoint container.

A checkpoint is a numpy ``.npz`` archive. Member ``meta`` holds UTF-8 JSON::

    {
      "format_version": 1,
      "kind": "tucker" | "transh",
      "dims": {"n_e": .., "n_r": .., "d_e": .., "d_r": ..},
      "vocab_hash": "<sha256 of entity surfaces and relation names>",
      "config": {...TrainConfig...},
      "history": {...TrainHistory...},
      "seed": 42,
      "batch_norm": {"bn0": {"momentum": .., "eps": ..}, "bn1": {...}} | null,
      "dropout_rates": [..]            # TuckER only
    }

Every other member is a float64 tensor: ``entity_emb``, ``rel_translation``,
``rel_normal`` (TransH) or ``entity_emb``, ``rel_emb``, ``core`` and
``bn{0,1}.{gamma,beta,running_mean,running_var}`` (TuckER).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional
import hashlib
import json
import logging
import os
import zipfile

import numpy as np

from app.core.exceptions import CheckpointVersionError, CorruptCheckpointError, VocabularyMismatchError
from app.models.graph import TripleStore
from app.models.params import BatchNormState, ModelKind, TransHParams, TuckERParams
from app.schemas.training import TrainConfig, TrainHistory
from app.services.embedding import Params

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    params: Params
    config: TrainConfig
    history: TrainHistory
    vocab_hash: str


def vocab_hash(store: TripleStore) -> str:
    payload = json.dumps(
        {"entities": [e.surface for e in store.entities], "relations": [r.name for r in store.relations]},
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _bn_arrays(prefix: str, state: BatchNormState) -> Dict[str, np.ndarray]:
    return {
        f"{prefix}.gamma": state.gamma,
        f"{prefix}.beta": state.beta,
        f"{prefix}.running_mean": state.running_mean,
        f"{prefix}.running_var": state.running_var,
    }


def save_checkpoint(params: Params, config: TrainConfig, history: TrainHistory, path, vocab: str) -> None:
    path = Path(path)
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": params.kind.value,
        "vocab_hash": vocab,
        "config": json.loads(config.model_dump_json()),
        "history": json.loads(history.model_dump_json()),
        "seed": config.seed,
    }
    if isinstance(params, TransHParams):
        arrays = dict(params.trainable())
        meta["dims"] = {"n_e": params.n_entities, "n_r": params.n_relations, "d_e": params.dim, "d_r": params.dim}
        meta["batch_norm"] = None
    else:
        arrays = {"entity_emb": params.entity_emb, "rel_emb": params.rel_emb, "core": params.core}
        meta["dims"] = {"n_e": params.n_entities, "n_r": params.n_relations, "d_e": params.d_e, "d_r": params.d_r}
        meta["dropout_rates"] = list(params.dropout_rates)
        if params.bn0 is not None:
            arrays.update(_bn_arrays("bn0", params.bn0))
            arrays.update(_bn_arrays("bn1", params.bn1))
            meta["batch_norm"] = {
                name: {"momentum": state.momentum, "eps": state.eps}
                for name, state in (("bn0", params.bn0), ("bn1", params.bn1))
            }
        else:
            meta["batch_norm"] = None

    arrays = {name: np.asarray(array, dtype=np.float64) for name, array in arrays.items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)

    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "wb") as f:
        np.savez(f, **arrays)
    os.replace(tmp_path, path)
    logger.info(f"Saved {params.kind.value} checkpoint to {path}")


def _load_bn(arrays, prefix: str, settings: dict) -> BatchNormState:
    return BatchNormState(
        gamma=arrays[f"{prefix}.gamma"],
        beta=arrays[f"{prefix}.beta"],
        running_mean=arrays[f"{prefix}.running_mean"],
        running_var=arrays[f"{prefix}.running_var"],
        momentum=float(settings["momentum"]),
        eps=float(settings["eps"]),
    )


def load_checkpoint(path, expected_vocab: Optional[str] = None) -> Checkpoint:
    """
    Load a checkpoint completely or not at all.

    Raises:
        CorruptCheckpointError: unreadable or truncated archive, missing members
        CheckpointVersionError: unknown ``format_version``
        VocabularyMismatchError: ``expected_vocab`` differs from the stored hash
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
        meta = json.loads(arrays.pop("meta").tobytes().decode("utf-8"))
        version = meta["format_version"]
    except FileNotFoundError:
        raise
    except (zipfile.BadZipFile, OSError, ValueError, KeyError, EOFError, UnicodeDecodeError) as e:
        raise CorruptCheckpointError(f"Cannot read checkpoint {path}: {e}")

    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"Checkpoint {path} has format_version {version}, expected {FORMAT_VERSION}")
    if expected_vocab is not None and meta.get("vocab_hash") != expected_vocab:
        raise VocabularyMismatchError(f"Checkpoint {path} was trained on a different store (vocabulary hash differs)")

    try:
        kind = ModelKind(meta["kind"])
        if kind == ModelKind.TRANSH:
            params = TransHParams(
                entity_emb=arrays["entity_emb"],
                rel_translation=arrays["rel_translation"],
                rel_normal=arrays["rel_normal"],
            )
        else:
            bn = meta.get("batch_norm")
            params = TuckERParams(
                entity_emb=arrays["entity_emb"],
                rel_emb=arrays["rel_emb"],
                core=arrays["core"],
                bn0=_load_bn(arrays, "bn0", bn["bn0"]) if bn else None,
                bn1=_load_bn(arrays, "bn1", bn["bn1"]) if bn else None,
                dropout_rates=tuple(meta["dropout_rates"]),
            )
        config = TrainConfig.model_validate(meta["config"])
        history = TrainHistory.model_validate(meta["history"])
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptCheckpointError(f"Checkpoint {path} is missing or has malformed members: {e}")

    dims = meta["dims"]
    if params.n_entities != dims["n_e"] or params.n_relations != dims["n_r"]:
        raise CorruptCheckpointError(f"Checkpoint {path} tensors disagree with recorded dims {dims}")
    logger.info(f"Loaded {kind.value} checkpoint {path} (n_e={dims['n_e']}, n_r={dims['n_r']})")
    return Checkpoint(params=params, config=config, history=history, vocab_hash=meta["vocab_hash"])
