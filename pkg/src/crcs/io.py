"""CSV and JSON serialization for datasets, step functions and systems.

Floats are written with 17 significant digits so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .model import DataError, Dataset, StepFn, SubDistSystem, validate_dataset


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dataset_to_csv(d: Dataset) -> str:
    buf = io.StringIO()
    buf.write("time,status\n")
    for o in d.obs:
        buf.write(f"{fmt(o.time)},{o.status}\n")
    return buf.getvalue()


def dataset_from_csv(text: str, K: int) -> Dataset:
    """Parse ``time,status`` CSV text; errors carry the 1-based line number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty file") from None
    if [h.strip() for h in header] != ["time", "status"]:
        raise DataError(f"line 1: expected header 'time,status', got {','.join(header)!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            t = float(row[0])
            s = int(row[1].strip())
        except ValueError:
            raise DataError(f"line {lineno}: cannot parse {','.join(row)!r}") from None
        if not math.isfinite(t):
            raise DataError(f"line {lineno}: non-finite time")
        if not 0 <= s <= K:
            raise DataError(f"line {lineno}: status out of range: {s} not in 0..{K}")
        rows.append((t, s))
    return validate_dataset(rows, K)


def stepfn_to_dict(f: StepFn) -> dict:
    return {
        "baseline": float(f.baseline),
        "jumps": [{"t": float(t), "v": float(v)} for t, v in zip(f.jump_times, f.jump_values)],
        "tail_mass": float(f.tail_mass),
    }


def stepfn_from_dict(obj: dict) -> StepFn:
    jumps = obj.get("jumps", [])
    return StepFn(
        np.array([j["t"] for j in jumps], dtype=float),
        np.array([j["v"] for j in jumps], dtype=float),
        float(obj.get("baseline", 0.0)),
        float(obj.get("tail_mass", 0.0)),
    )


def system_to_dict(s: SubDistSystem) -> dict:
    return {"K": s.K, "components": [stepfn_to_dict(c) for c in s.components]}


def system_from_dict(obj: dict, sum_tolerance: float | None = 1e-10) -> SubDistSystem:
    comps = tuple(stepfn_from_dict(c) for c in obj["components"])
    if "K" in obj and obj["K"] != len(comps):
        raise ValueError(f"K={obj['K']} but {len(comps)} components given")
    return SubDistSystem(comps, sum_tolerance)


def _round(o):
    if isinstance(o, float):
        if math.isfinite(o):
            return float(fmt(o))
        return None
    if isinstance(o, (np.floating,)):
        return _round(float(o))
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, dict):
        return {k: _round(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, np.ndarray)):
        return [_round(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False, allow_nan=False) + "\n"
