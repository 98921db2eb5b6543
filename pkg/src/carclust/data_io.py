"""CSV panel ingestion/serialization and min-max index scaling.

The file layout is one row per (unit, time)::

    unit,time,<var1>,...,<varJ>

Rows may come in any order; every unit must be observed at every time.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import (
    ConstantVariableError,
    DuplicateRowError,
    IncompletePanelError,
    PanelParseError,
)
from .panel import LongitudinalPanel

SUPPORTED_FORMATS = ("csv",)


def _parse_times(raw: list[str]):
    for conv in (int, float):
        try:
            return [conv(r) for r in raw]
        except ValueError:
            continue
    return list(raw)


def load_panel(path, format: str = "csv") -> LongitudinalPanel:
    if format not in SUPPORTED_FORMATS:
        raise ValueError(f"unsupported panel format {format!r}; expected one of {SUPPORTED_FORMATS}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelParseError(1, "file is empty, expected a header row", path) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or [h.lower() for h in header[:2]] != ["unit", "time"]:
            raise PanelParseError(1, "header must be 'unit,time,<var1>,...'", path)
        var_names = header[2:]
        if any(not v for v in var_names):
            raise PanelParseError(1, "empty variable name in header", path)
        if len(set(var_names)) != len(var_names):
            raise PanelParseError(1, "duplicate variable names in header", path)

        records = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise PanelParseError(line, f"expected {len(header)} fields, found {len(row)}", path)
            unit, time = row[0].strip(), row[1].strip()
            if not unit or not time:
                raise PanelParseError(line, "unit and time must not be empty", path)
            vals = []
            for name, cell in zip(var_names, row[2:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise PanelParseError(line, f"cannot parse {cell!r} for variable {name!r}", path) from None
                if not math.isfinite(v):
                    raise PanelParseError(line, f"missing or non-finite value for variable {name!r}", path)
                vals.append(v)
            records.append((line, unit, time, vals))

    if not records:
        raise PanelParseError(2, "no data rows", path)
    times = _parse_times([r[2] for r in records])
    units: dict[str, int] = {}
    cells: dict[tuple, list[float]] = {}
    for (line, unit, _, vals), t in zip(records, times):
        units.setdefault(unit, len(units))
        if (unit, t) in cells:
            raise DuplicateRowError(unit, t, line, path)
        cells[(unit, t)] = vals

    time_labels = sorted(set(times))
    missing = [(u, t) for u in units for t in time_labels if (u, t) not in cells]
    if missing:
        raise IncompletePanelError(missing, path)
    values = np.empty((len(units), len(var_names), len(time_labels)))
    for k, t in enumerate(time_labels):
        for u, i in units.items():
            values[i, :, k] = cells[(u, t)]
    return LongitudinalPanel(values, unit_ids=list(units), var_names=var_names, time_labels=time_labels)


def write_panel(panel: LongitudinalPanel, path) -> None:
    """Write the panel as CSV; floats use ``repr`` so reloading is bit-exact."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["unit", "time", *panel.var_names])
        vals = panel.values
        for i, unit in enumerate(panel.unit_ids):
            for k, t in enumerate(panel.time_labels):
                w.writerow([unit, t, *(repr(float(v)) for v in vals[i, :, k])])


def minmax_normalize(panel: LongitudinalPanel) -> LongitudinalPanel:
    """Rescale each variable to [0, 1] using its extrema over all units and times."""
    x = panel.values
    lo = x.min(axis=(0, 2))
    hi = x.max(axis=(0, 2))
    for j in range(panel.n_vars):
        if not hi[j] > lo[j]:
            raise ConstantVariableError(j, panel.var_names[j])
    scaled = (x - lo[None, :, None]) / (hi - lo)[None, :, None]
    return LongitudinalPanel(scaled, unit_ids=panel.unit_ids, var_names=panel.var_names,
                             time_labels=panel.time_labels)
