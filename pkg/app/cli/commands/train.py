from pathlib import Path
import argparse
import logging

from app.cli.common import add_store_argument, open_store, read_triples
from app.cli.output import JSON, add_format_argument, emit_json, render_table
from app.core.config import settings
from app.core.exceptions import EXIT_OK, UsageError
from app.models.params import ModelKind
from app.schemas.training import TrainConfig
from app.services.checkpoint_service import save_checkpoint, vocab_hash
from app.services.trainer_service import Trainer

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    defaults = TrainConfig()
    parser = subparsers.add_parser("train", help="train a TransH or TuckER model and write a checkpoint")
    add_store_argument(parser)
    parser.add_argument("--train", type=Path, default=None, help="training split TSV (default: whole store)")
    parser.add_argument("--valid", type=Path, default=None, help="validation split TSV")
    parser.add_argument("--out", type=Path, required=True, help="checkpoint to write (.npz)")
    parser.add_argument("--history", type=Path, default=None, help="JSON-lines training history")
    parser.add_argument("--model", choices=[k.value for k in ModelKind], default=defaults.model.value)
    parser.add_argument("--d-e", type=int, default=defaults.d_e, help="entity dimension (default: 200)")
    parser.add_argument("--d-r", type=int, default=defaults.d_r, help="relation dimension, TuckER (default: 30)")
    parser.add_argument("--lr", type=float, default=defaults.learning_rate, help="Adam learning rate (default: 0.0005)")
    parser.add_argument("--batch", type=int, default=defaults.batch_size, help="mini-batch size (default: 128)")
    parser.add_argument("--iters", type=int, default=defaults.iterations, help="full passes over the data (default: 500)")
    parser.add_argument("--label-smoothing", type=float, default=defaults.label_smoothing, help="TuckER (default: 0.0)")
    parser.add_argument("--margin", type=float, default=defaults.margin, help="TransH hinge margin (default: 1.0)")
    parser.add_argument("--negatives", type=int, default=defaults.negatives_per_positive, help="TransH (default: 1)")
    parser.add_argument(
        "--dropout",
        type=float,
        nargs=3,
        default=list(defaults.dropout),
        metavar=("INPUT", "HIDDEN1", "HIDDEN2"),
        help="TuckER dropout rates (default: 0.3 0.4 0.5)",
    )
    parser.add_argument("--no-batch-norm", action="store_true", help="TuckER without batch normalization")
    parser.add_argument("--bn-momentum", type=float, default=defaults.bn_momentum, help="(default: 0.1)")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="(default: 42)")
    parser.add_argument(
        "--nondeterministic",
        action="store_true",
        help="allow concurrent validation ranking (EVAL_WORKERS)",
    )
    parser.add_argument("--validate-every", type=int, default=0, help="iterations between validations (0: off)")
    parser.add_argument("--early-stopping", type=int, default=None, help="patience in validations")
    parser.add_argument("--quiet", action="store_true", help="no progress bar")
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def config_from_args(args: argparse.Namespace) -> TrainConfig:
    try:
        return TrainConfig(
            model=ModelKind(args.model),
            d_e=args.d_e,
            d_r=args.d_r,
            learning_rate=args.lr,
            batch_size=args.batch,
            iterations=args.iters,
            label_smoothing=args.label_smoothing,
            margin=args.margin,
            negatives_per_positive=args.negatives,
            dropout=tuple(args.dropout),
            batch_norm=not args.no_batch_norm,
            bn_momentum=args.bn_momentum,
            seed=args.seed,
            deterministic=not args.nondeterministic,
            validation_every=args.validate_every,
            early_stopping=args.early_stopping,
        )
    except ValueError as e:
        raise UsageError(f"Invalid training configuration: {e}")


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if config.early_stopping and not (config.validation_every and args.valid):
        raise UsageError("--early-stopping needs --valid and --validate-every")
    store = open_store(args.store)
    train_triples = read_triples(store, args.train)
    valid_triples = read_triples(store, args.valid) if args.valid else []

    trainer = Trainer(config, store, history_path=args.history, progress=not args.quiet)
    params, history = trainer.train(train_triples, valid_triples)
    save_checkpoint(params, config, history, args.out, vocab_hash(store))

    last = history.records[-1]
    summary = {
        "model": config.model.value,
        "iterations": last.iteration,
        "initial_loss": history.records[0].loss,
        "final_loss": last.loss,
        "stopped_early": history.stopped_early,
        "negative_fallbacks": history.negative_fallbacks,
        "checkpoint": str(args.out),
    }
    if args.format == JSON:
        emit_json(summary)
    else:
        render_table(list(summary), [[str(v) for v in summary.values()]], title="Training run")
    return EXIT_OK
