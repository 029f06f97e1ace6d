"""Subcommands, in pipeline order. Each module exposes ``register(subparsers)``."""

from app.cli.commands import evaluate, ingest, query, split, stats, synth, train, validate

COMMANDS = (ingest, validate, stats, split, train, evaluate, query, synth)
