"""Machine-readable run records with stable key order and content digests.

Reports are plain dicts serialized with json.dumps; float repr gives
shortest-roundtrip formatting, so identical computations produce identical
bytes, which the golden-file and determinism tests rely on.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(obj[k]) for k in sorted(obj, key=str)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return {
            "__ndarray__": hashlib.sha256(np.ascontiguousarray(obj).tobytes()).hexdigest(),
            "shape": list(obj.shape),
            "dtype": str(obj.dtype),
        }
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, bytes):
        return {"__bytes__": hashlib.sha256(obj).hexdigest()}
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def stable_digest(obj) -> str:
    payload = json.dumps(_canonical(obj), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode("ascii")).hexdigest()


def decision_record(
    operation: str,
    inputs: dict,
    statistic: float,
    thresholds: tuple[float, float],
    verdict: str,
    bounds: dict | None = None,
) -> dict:
    """The structured record shape shared by every decision-style operation."""
    return {
        "operation": operation,
        "inputs_digest": stable_digest(inputs),
        "statistic": statistic,
        "thresholds": list(thresholds),
        "verdict": verdict,
        "bounds": dict(bounds or {}),
    }


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(render_report(report))
