"""Grouped key/query position assignment and context-capacity computation.

Keys are encoded at their group index; queries are encoded at
``window + group_of(p - window)`` so that the relative position of the pair
just outside the neighbor window is exactly the window width, stitching the
exact neighbor distances 0..window-1 and the grouped distances together
without a gap.  Inside the window the query index is irrelevant (every such
pair resolves through neighbor attention), so it is pinned to the position
itself for reproducible dumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RemapError
from .grouping import GroupIndexMap, GroupingFunction, build_map_parallel

__all__ = [
    "PositionAssignment",
    "assign_positions",
    "rel_pos",
    "rel_pos_matrix",
    "max_context_length",
    "CapacityReport",
    "capacity_report",
]


@dataclass(frozen=True)
class PositionAssignment:
    """Key and query position indices for one sequence."""

    window: int
    train_len: int
    key_pos: np.ndarray
    query_pos: np.ndarray
    map: GroupIndexMap

    def __post_init__(self):
        for name in ("key_pos", "query_pos"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.key_pos)

    def to_json_dict(self) -> dict:
        return {
            "W": self.window,
            "L": self.train_len,
            "key_pos": self.key_pos.tolist(),
            "query_pos": self.query_pos.tolist(),
            "map": self.map.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PositionAssignment":
        return cls(
            window=d["W"],
            train_len=d["L"],
            key_pos=np.asarray(d["key_pos"], dtype=np.int64),
            query_pos=np.asarray(d["query_pos"], dtype=np.int64),
            map=GroupIndexMap.from_json_dict(d["map"]),
        )


def _check_window(window: int, train_len: int) -> None:
    if train_len < 1:
        raise RemapError("invalid-config", f"train length {train_len} must be >= 1")
    if window < 0:
        raise RemapError("invalid-config", f"window {window} must be >= 0")
    if window >= train_len:
        raise RemapError(
            "window-exceeds-train-length",
            f"window {window} leaves no index budget within train length {train_len}",
        )


def assign_positions(
    n: int, window: int, train_len: int, fn: GroupingFunction
) -> PositionAssignment:
    """Build the key/query position indices for a sequence of length n."""
    _check_window(window, train_len)
    if n < 0:
        raise RemapError("invalid-config", f"sequence length {n} is negative")
    index_map = build_map_parallel(n, fn)
    key_pos = index_map.entries
    query_pos = np.arange(n, dtype=np.int64)
    if n > window:
        query_pos[window:] = window + key_pos[: n - window]
    return PositionAssignment(window, train_len, key_pos, query_pos, index_map)


def rel_pos(i: int, j: int, assignment: PositionAssignment) -> int:
    """Effective relative position between query i and key j.

    Pairs closer than the window use the exact distance; all others use the
    grouped distance.  The handoff pair (i, i-window) lands on the grouped
    branch, which yields exactly the window width by construction.
    """
    if j > i:
        raise RemapError("causality-violation", f"key {j} is after query {i}")
    if j < 0 or i >= assignment.n:
        raise RemapError(
            "invalid-config", f"pair ({i}, {j}) outside sequence of length {assignment.n}"
        )
    if i - j < assignment.window:
        return i - j
    return int(assignment.query_pos[i] - assignment.key_pos[j])


def rel_pos_matrix(assignment: PositionAssignment) -> np.ndarray:
    """All pairwise relative positions; upper triangle (j > i) is -1."""
    n = assignment.n
    idx = np.arange(n, dtype=np.int64)
    dist = idx[:, None] - idx[None, :]
    grouped = assignment.query_pos[:, None] - assignment.key_pos[None, :]
    out = np.where(dist < assignment.window, dist, grouped)
    out[dist < 0] = -1
    return out


def max_context_length(train_len: int, window: int, fn: GroupingFunction) -> int:
    """Largest sequence length whose relative positions all stay trained.

    The binding pair is (n-1, 0): its grouped distance is
    ``window + F[n-1-window]``, which stays <= train_len - 1 exactly while
    position n-1-window still falls in groups 0..train_len-1-window.  Hence
    the capacity is ``window`` plus the total size of those groups.
    """
    _check_window(window, train_len)
    return window + sum(fn.size_of_group(j) for j in range(train_len - window))


@dataclass(frozen=True)
class CapacityReport:
    """Operational capacity next to the original closed-form expression.

    ``capacity`` is the simulation-verified value from
    :func:`max_context_length`.  ``formula_value`` evaluates the original
    summation formula ``sum_{i=1}^{L + max(F) - W - F_W} f(i)`` with max(F)
    and F_W read off the map built at the operational capacity (the
    expression is circular in n, so some such choice is forced) and F_W
    taken one-based, the reading on which both values coincide for identity
    grouping.  It is documentation of the discrepancy, never an input to
    any computation path.
    """

    train_len: int
    window: int
    capacity: int
    formula_value: int
    difference: int

    def to_json_dict(self) -> dict:
        return {
            "train_len": self.train_len,
            "window": self.window,
            "capacity": self.capacity,
            "formula_value": self.formula_value,
            "difference": self.difference,
        }


def capacity_report(train_len: int, window: int, fn: GroupingFunction) -> CapacityReport:
    _check_window(window, train_len)
    if window < 1:
        raise RemapError(
            "invalid-config", "capacity report needs window >= 1 (it reads F at the window edge)"
        )
    capacity = max_context_length(train_len, window, fn)
    entries = build_map_parallel(capacity, fn).entries
    max_group = int(entries[-1])
    edge_group = int(entries[window - 1])
    upper = train_len + max_group - window - edge_group
    formula_value = sum(fn.size_of_group(i) for i in range(1, upper + 1))
    return CapacityReport(
        train_len=train_len,
        window=window,
        capacity=capacity,
        formula_value=formula_value,
        difference=formula_value - capacity,
    )
