"""Reader for the engine's CSV bundles.

A bundle file carries a ``# key = value`` preamble, one header line and
comma-separated data rows.  All coupling to the engine goes through
preamble keys and column names; nothing here knows how the numbers were
produced, and raw cell text is kept so labels can quote the file verbatim.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class RenderError(Exception):
    """Bad input bundle or bad render request."""


@dataclass(frozen=True)
class Feature:
    """One ``feature.*`` preamble line: a predicted scan landmark."""

    name: str
    raw: str
    values: tuple[float, ...]


@dataclass
class Table:
    path: Path
    preamble: list[tuple[str, str]]
    columns: list[str]
    cells: list[list[str]]

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise RenderError(
                f"{self.path.name}: schema mismatch, missing column(s) {', '.join(missing)}"
            )

    def column(self, name: str) -> np.ndarray:
        self.require(name)
        k = self.columns.index(name)
        try:
            return np.array([float(row[k]) for row in self.cells])
        except ValueError:
            raise RenderError(f"{self.path.name}: column {name!r} is not numeric") from None

    def raw_column(self, name: str) -> list[str]:
        self.require(name)
        k = self.columns.index(name)
        return [row[k] for row in self.cells]

    def ok_mask(self) -> np.ndarray:
        """Row filter from the status column; all rows when there is none."""
        if "status" not in self.columns:
            return np.ones(len(self.cells), dtype=bool)
        return np.array([s == "ok" for s in self.raw_column("status")])

    def param(self, key: str) -> str | None:
        for k, v in self.preamble:
            if k == key:
                return v
        return None

    def features(self) -> list[Feature]:
        feats = []
        for key, raw in self.preamble:
            if not key.startswith("feature."):
                continue
            try:
                values = tuple(float(tok) for tok in raw.split())
            except ValueError:
                continue
            feats.append(Feature(key[len("feature.") :], raw, values))
        return feats


def _split_row(line: str, width: int) -> list[str]:
    # status cells may carry commas inside an error message; fold any excess
    # splits back into the final field
    parts = line.split(",")
    if len(parts) > width:
        parts = parts[: width - 1] + [",".join(parts[width - 1 :])]
    return parts


def read_table(path: Path | str) -> Table:
    path = Path(path)
    if not path.is_file():
        raise RenderError(f"missing input file {path}")
    preamble: list[tuple[str, str]] = []
    columns: list[str] | None = None
    cells: list[list[str]] = []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    preamble.append((key.strip(), value.strip()))
                continue
            if columns is None:
                columns = [c.strip() for c in line.split(",")]
                continue
            cells.append(_split_row(line, len(columns)))
    if columns is None:
        raise RenderError(f"{path.name}: no header line")
    if not cells:
        raise RenderError(f"{path.name}: no data rows")
    for row in cells:
        if len(row) != len(columns):
            raise RenderError(
                f"{path.name}: row has {len(row)} fields, header has {len(columns)}"
            )
    return Table(path=path, preamble=preamble, columns=columns, cells=cells)
