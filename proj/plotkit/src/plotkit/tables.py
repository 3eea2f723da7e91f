# Copyright 2026 The qpinn-lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""CSV readers that validate headers against the qpinn output schemas."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NOT_REACHED = "not_reached"

METRICS = ("epoch", "L_pde", "L_t", "L_x", "L_bounds", "L_train", "L_val",
           "w_bounds", "w_pde", "lr", "mse", "resampled")
MEDIAN_CURVES = ("cell_id", "epoch", "median_mse")
EPOCH_RATIO = ("threshold", "q_epoch", "c_epoch", "epoch_ratio")
MSE_RATIO = ("epoch", "mse_q", "mse_c", "mse_ratio")
SUCCESS = ("family", "points", "kind", "successes", "total", "ratio", "threshold")
PROBE = ("t", "x", "i_0", "i_1", "i_2", "o_0", "o_1", "o_2")

# Columns kept as strings; everything else is numeric.
TEXT_COLUMNS = {"cell_id", "family", "kind"}

_THETA = re.compile(r"theta_\d+")


class SchemaError(ValueError):
    """A file does not match the schema expected for its figure kind."""


@dataclass
class Table:
    path: Path
    columns: tuple[str, ...]
    rows: list[dict[str, object]]

    def column(self, name: str) -> np.ndarray:
        values = [r[name] for r in self.rows]
        if name in TEXT_COLUMNS:
            return np.array(values, dtype=object)
        return np.array(values, dtype=float)

    def __len__(self) -> int:
        return len(self.rows)


def _number(text: str, path: Path, column: str, line: int) -> float:
    # Empty cells (unevaluated MSE) and "not_reached" both become NaN, so
    # they show up as gaps in line plots instead of as zeros.
    if text == "" or text == NOT_REACHED:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"{path}:{line}: column '{column}': not a number: {text!r}") from None


def _check_header(path: Path, header: list[str], expected: tuple[str, ...]) -> None:
    for name in header:
        if name not in expected:
            raise SchemaError(f"{path}: unknown column '{name}'")
    for name in expected:
        if name not in header:
            raise SchemaError(f"{path}: missing column '{name}'")
    if tuple(header) != expected:
        raise SchemaError(f"{path}: columns out of order: {','.join(header)}")


def _check_landscape(path: Path, header: list[str]) -> None:
    if len(header) != 3 or header[2] != "mse":
        bad = next((h for h in header if h != "mse" and not _THETA.fullmatch(h)), None)
        if bad is not None:
            raise SchemaError(f"{path}: unknown column '{bad}'")
        raise SchemaError(f"{path}: expected theta_<i>,theta_<j>,mse")
    for name in header[:2]:
        if not _THETA.fullmatch(name):
            raise SchemaError(f"{path}: unknown column '{name}'")


def _check_curve(path: Path, header: list[str]) -> None:
    if len(header) != 2 or header[0] != "epoch":
        raise SchemaError(f"{path}: expected a two-column epoch,<value> curve")


SCHEMAS = {
    "metrics": METRICS,
    "median_curves": MEDIAN_CURVES,
    "epoch_ratio": EPOCH_RATIO,
    "mse_ratio": MSE_RATIO,
    "success": SUCCESS,
    "probe": PROBE,
}


def read_table(path: str | Path, schema: str) -> Table:
    """Reads a CSV and validates its header against `schema`.

    `schema` is one of the SCHEMAS keys, "landscape" or "curve".
    """
    path = Path(path)
    with path.open(newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if schema == "landscape":
            _check_landscape(path, header)
        elif schema == "curve":
            _check_curve(path, header)
        elif schema in SCHEMAS:
            _check_header(path, header, SCHEMAS[schema])
        else:
            raise ValueError(f"unknown schema {schema!r}")
        rows = []
        for line, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise SchemaError(f"{path}:{line}: expected {len(header)} cells, got {len(cells)}")
            rows.append({
                name: cell if name in TEXT_COLUMNS else _number(cell, path, name, line)
                for name, cell in zip(header, cells)
            })
    return Table(path, tuple(header), rows)


def sniff_curve_schema(path: str | Path) -> str:
    """Picks the schema for an MSE-vs-epoch input from its header."""
    with Path(path).open(newline="") as f:
        header = next(csv.reader(f), [])
    if tuple(header) == METRICS:
        return "metrics"
    if tuple(header) == MEDIAN_CURVES:
        return "median_curves"
    if len(header) == 2 and header[0] == "epoch":
        return "curve"
    unknown = next((h for h in header if h not in METRICS + MEDIAN_CURVES + ("epoch",)), None)
    if unknown is not None:
        raise SchemaError(f"{path}: unknown column '{unknown}'")
    raise SchemaError(f"{path}: not a metrics log, median-curve table or epoch curve")


def curves(path: str | Path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Returns {label: (epochs, mse)} for any MSE-vs-epoch input.

    Metrics logs keep only evaluated epochs; median-curve tables yield one
    curve per cell.
    """
    path = Path(path)
    schema = sniff_curve_schema(path)
    table = read_table(path, schema)
    if schema == "metrics":
        e, m = table.column("epoch"), table.column("mse")
        keep = ~np.isnan(m)
        return {path.stem: (e[keep], m[keep])}
    if schema == "curve":
        return {path.stem: (table.column("epoch"), table.column(table.columns[1]))}
    out: dict[str, tuple[list, list]] = {}
    for r in table.rows:
        e, m = out.setdefault(str(r["cell_id"]), ([], []))
        e.append(r["epoch"])
        m.append(r["median_mse"])
    return {k: (np.array(e, float), np.array(m, float)) for k, (e, m) in out.items()}
