"""Small numeric and hashing helpers shared across modules."""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np


def logsumexp(values) -> float:
    """Stable log(sum(exp(values))) for a 1-D array-like of log values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return float("-inf")
    m = np.max(arr)
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.sum(np.exp(arr - m))))


def logaddexp(a: float, b: float) -> float:
    if a == float("-inf"):
        return b
    if b == float("-inf"):
        return a
    m = a if a > b else b
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def canonical_json(obj) -> str:
    """Deterministic JSON encoding used for hashing and on-disk artifacts."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
