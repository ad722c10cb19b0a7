"""JSON helpers shared across the toolkit.

All wire formats and files use plain JSON with one extension: IEEE
+infinity is encoded as the string ``"inf"`` (standard JSON has no
infinity literal, and the KL divergence legitimately produces it).
"""

from __future__ import annotations

import json
import math
from typing import Any

INF_TOKEN = "inf"


def to_jsonable(value: Any) -> Any:
    """Recursively convert a value into something json.dumps accepts.

    Maps +infinity to the "inf" token. NaN and -infinity are rejected:
    nothing in the toolkit produces them, so their appearance is a bug.
    """
    if isinstance(value, float):
        if math.isinf(value):
            if value < 0:
                raise ValueError("-infinity is not representable")
            return INF_TOKEN
        if math.isnan(value):
            raise ValueError("NaN is not representable")
        return value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def from_jsonable(value: Any) -> Any:
    """Inverse of to_jsonable: turns "inf" tokens back into floats."""
    if value == INF_TOKEN:
        return math.inf
    if isinstance(value, dict):
        return {k: from_jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [from_jsonable(v) for v in value]
    return value


def canonical_json(value: Any) -> str:
    """Serialize to the canonical comparison form: sorted keys, no spaces.

    Two structurally equal values always produce identical bytes, which
    is what the gateway-vs-offline determinism checks compare.
    """
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def pretty_json(value: Any) -> str:
    """Human-facing serialization for files; still byte-deterministic."""
    return json.dumps(to_jsonable(value), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
