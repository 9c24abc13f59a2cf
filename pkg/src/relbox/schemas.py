"""Strict schemas for every CSV the tools emit. A file passes only if its
header matches the schema's column order exactly and every cell parses
under the column's type."""

from __future__ import annotations

import csv
from pathlib import Path


class SchemaError(ValueError):
    """CSV does not conform to its declared schema."""


def _int_cell(raw: str) -> int:
    return int(raw)


def _float_cell(raw: str) -> float:
    return float(raw)  # accepts nan/inf spellings


def _str_cell(raw: str) -> str:
    if raw == "":
        raise ValueError("empty string")
    return raw


SCHEMAS: dict[str, tuple[tuple[str, object], ...]] = {
    "metrics": (
        ("wall_time_s", _float_cell),
        ("env_steps", _int_cell),
        ("episodes", _int_cell),
        ("solve_rate", _float_cell),
        ("mean_return", _float_cell),
        ("loss", _float_cell),
        ("pg_loss", _float_cell),
        ("baseline_loss", _float_cell),
        ("entropy", _float_cell),
    ),
    "evals": (
        ("env_steps", _int_cell),
        ("mode", _str_cell),
        ("episodes", _int_cell),
        ("solve_rate", _float_cell),
        ("mean_return", _float_cell),
    ),
    "probe": (
        ("block", _int_cell),
        ("head", _int_cell),
        ("source_cell", _str_cell),
        ("source_object", _str_cell),
        ("target_cell", _str_cell),
        ("target_object", _str_cell),
        ("weight", _float_cell),
    ),
    "random_baseline": (
        ("solution_length", _int_cell),
        ("episodes", _int_cell),
        ("solved", _int_cell),
        ("solve_rate", _float_cell),
        ("mean_return", _float_cell),
    ),
    "generalization": (
        ("split", _str_cell),
        ("episodes", _int_cell),
        ("solve_rate", _float_cell),
        ("mean_return", _float_cell),
    ),
}


def check_csv(path, schema: str) -> list[dict]:
    """Validate `path` against the named schema; returns typed rows."""
    if schema not in SCHEMAS:
        raise KeyError(f"no such schema {schema!r}; known: {sorted(SCHEMAS)}")
    columns = SCHEMAS[schema]
    names = [name for name, _ in columns]
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != names:
            raise SchemaError(f"{path}: header {header} != schema {names}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise SchemaError(f"{path}:{line_no}: {len(row)} cells, want {len(names)}")
            typed = {}
            for (name, parse), cell in zip(columns, row):
                try:
                    typed[name] = parse(cell)
                except ValueError as exc:
                    raise SchemaError(f"{path}:{line_no}: column {name}: {exc}") from exc
            rows.append(typed)
    return rows
