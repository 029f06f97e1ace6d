"""Rendering shared by the subcommands: rich tables or versioned JSON."""

from typing import Dict, Iterable, List, Optional, Sequence
import argparse
import json
import sys

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from app.core.config import settings

TABLE = "table"
JSON = "json"


def add_format_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=(TABLE, JSON),
        default=TABLE,
        help="human table (default) or structured JSON carrying schema_version",
    )


def console() -> Console:
    # Bound at call time so redirected stdout is honoured.
    return Console(file=sys.stdout, highlight=False, soft_wrap=True)


def emit_json(payload) -> None:
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        if isinstance(payload, dict):
            payload = {"schema_version": settings.OUTPUT_SCHEMA_VERSION, **payload}
        text = json.dumps(payload, indent=2, ensure_ascii=False)
    sys.stdout.write(text + "\n")


def render_table(
    columns: Sequence[str],
    rows: Iterable[Sequence[str]],
    title: Optional[str] = None,
    right_align: Sequence[str] = (),
) -> None:
    table = Table(title=title)
    for column in columns:
        table.add_column(column, justify="right" if column in right_align else "left")
    for row in rows:
        table.add_row(*[str(cell) for cell in row])
    console().print(table)


def render_mapping(mapping: Dict[str, str], title: Optional[str] = None) -> None:
    render_table(list(mapping), [list(mapping.values())], title=title, right_align=list(mapping))


def say(message: str) -> None:
    console().print(message)
