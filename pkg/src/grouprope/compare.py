"""Structural comparison of constant-size vs logistic grouping schemes.

The quantity of interest is how many groups are still below the maximal
size at a given sequence length: growth schemes keep early relative
positions finer-grained exactly as long as such intermediate groups
dominate.  Group sizes here are the nominal per-index sizes; a final group
cut short by the sequence end still counts at its nominal size.
"""

from __future__ import annotations

from .grouping import ConstantSize, GroupingFunction, LogisticGrowth, build_map_parallel
from .posmap import assign_positions, max_context_length

__all__ = ["scheme_summary", "compare_schemes"]


def scheme_summary(
    label: str, fn: GroupingFunction, n: int, window: int, train_len: int
) -> dict:
    capacity = max_context_length(train_len, window, fn)
    entry: dict = {"scheme": label, "function": fn.to_json_dict(), "capacity": capacity}
    if n == 0:
        entry.update(
            max_rel_pos=0,
            total_groups=0,
            intermediate_groups=0,
            intermediate_fraction=0.0,
            group_size_histogram={},
        )
        return entry
    assignment = assign_positions(n, window, train_len, fn)
    if n - 1 >= window:
        # key_pos[0] = 0 and both maps are nondecreasing, so the pair
        # (n-1, 0) realizes the largest grouped distance.
        max_rel = int(assignment.query_pos[-1])
    else:
        max_rel = n - 1
    group_count = int(assignment.key_pos[-1]) + 1
    histogram: dict[int, int] = {}
    for j in range(group_count):
        size = fn.size_of_group(j)
        histogram[size] = histogram.get(size, 0) + 1
    intermediate = sum(c for size, c in histogram.items() if size < fn.max_size)
    entry.update(
        max_rel_pos=max_rel,
        total_groups=group_count,
        intermediate_groups=intermediate,
        intermediate_fraction=intermediate / group_count,
        group_size_histogram={str(size): histogram[size] for size in sorted(histogram)},
    )
    return entry


def compare_schemes(
    constant: ConstantSize,
    logistic: LogisticGrowth,
    n: int,
    window: int,
    train_len: int,
) -> dict:
    """Side-by-side report for a constant and a logistic scheme."""
    se = scheme_summary("se", constant, n, window, train_len)
    self_ = scheme_summary("self", logistic, n, window, train_len)
    report = {"n": n, "window": window, "train_len": train_len, "schemes": [se, self_]}
    if n > se["capacity"] and n > self_["capacity"]:
        report["warning"] = (
            f"sequence length {n} exceeds both capacities "
            f"({se['capacity']} and {self_['capacity']}); relative positions leave the trained range"
        )
    return report
