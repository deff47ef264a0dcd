"""Native recomputation of the grouped position maps.

The core library dumps these maps as JSON; the adapter recomputes them
in-process from the same formulas so model patching has no runtime
dependency on that package.  The JSON file boundary is the contract: the
test suite checks exact integer equality between these arrays and the
primary CLI's dumps.  Group sizes deliberately use scalar ``math.exp`` (the
same evaluation the primary uses) so parity is bit-exact; only the O(n)
repeat is vectorized.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import AdapterError

__all__ = [
    "logistic_group_size",
    "group_index_map",
    "query_positions",
    "assignment_arrays",
    "read_map_json",
    "read_assignment_json",
]


def logistic_group_size(capacity: int, rate: float, index: int) -> int:
    """Floored logistic size, saturating at the capacity."""
    x = -rate * index
    if x < -745.0:
        return capacity
    return int(capacity / (1.0 + (capacity - 1) * math.exp(x)))


def _size_fn(scheme: str, capacity: int | None, rate: float | None, group_size: int | None):
    if scheme == "self":
        if capacity == 1:
            return lambda j: 1
        return lambda j: logistic_group_size(capacity, rate, j)
    if scheme == "se":
        return lambda j: group_size
    raise AdapterError("invalid-config", f"scheme {scheme!r} has no grouping")


def group_index_map(
    n: int,
    scheme: str,
    capacity: int | None = None,
    rate: float | None = None,
    group_size: int | None = None,
) -> np.ndarray:
    """Token position -> group index for the first n positions."""
    size_of = _size_fn(scheme, capacity, rate, group_size)
    sizes: list[int] = []
    total = 0
    while total < n:
        s = size_of(len(sizes))
        sizes.append(s)
        total += s
    return np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)[:n]


def query_positions(key_map: np.ndarray, window: int) -> np.ndarray:
    """Query indices: exact inside the window, window + shifted group outside."""
    n = len(key_map)
    out = np.arange(n, dtype=np.int64)
    if n > window:
        out[window:] = window + key_map[: n - window]
    return out


def assignment_arrays(
    n: int,
    window: int,
    scheme: str,
    capacity: int | None = None,
    rate: float | None = None,
    group_size: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(key_pos, query_pos) for one sequence, bit-compatible with the core dumps."""
    key = group_index_map(n, scheme, capacity, rate, group_size)
    return key, query_positions(key, window)


def read_map_json(path) -> np.ndarray:
    with open(path) as fh:
        body = json.load(fh)
    entries = np.asarray(body["F"], dtype=np.int64)
    if len(entries) != body["n"]:
        raise AdapterError("invalid-input", f"map length {len(entries)} != n={body['n']}")
    return entries


def read_assignment_json(path) -> dict:
    with open(path) as fh:
        body = json.load(fh)
    for field in ("W", "L", "key_pos", "query_pos"):
        if field not in body:
            raise AdapterError("invalid-input", f"assignment JSON missing {field!r}")
    return {
        "window": body["W"],
        "train_len": body["L"],
        "key_pos": np.asarray(body["key_pos"], dtype=np.int64),
        "query_pos": np.asarray(body["query_pos"], dtype=np.int64),
    }
