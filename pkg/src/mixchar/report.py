"""Deterministic JSON and CSV serialization of reports."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

SCHEMA = "mixchar/1"
DIGITS = 12


def clean(obj):
    """Recursively convert to JSON-safe values with 12 significant digits.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{DIGITS}g}")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(doc: dict) -> str:
    body = {"schema": SCHEMA}
    body.update(doc)
    return json.dumps(clean(body), indent=2, allow_nan=False) + "\n"


def write_json(doc: dict, path: str) -> None:
    text = dumps(doc)
    if path == "-":
        print(text, end="")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def verification_doc(chain_summary: dict, suite: str, slack: float, seed: int, records) -> dict:
    """Report document for one verification run; records ordered by id."""
    ordered = sorted(records, key=lambda r: r.id)
    counts = {s: 0 for s in ("pass", "fail", "report-only", "diagnostic")}
    for r in ordered:
        counts[r.status] += 1
    return {
        "chain": chain_summary,
        "suite": suite,
        "config": {"slack": slack, "seed": seed},
        "summary": counts,
        "passed": counts["fail"] == 0,
        "records": [r.as_dict() for r in ordered],
    }


def write_csv(rows: list[dict], columns, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k)) for k in columns})


def _cell(v):
    v = clean(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v
