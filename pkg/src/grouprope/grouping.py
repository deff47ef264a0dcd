"""Group-size functions and the token-position -> group-index map.

A grouping function assigns a size to every group index j >= 0.  The induced
index map F places ``size_of_group(0)`` tokens in group 0, then
``size_of_group(1)`` tokens in group 1, and so on, so F is nondecreasing and
steps by at most one.  Two constructions of F are provided:

* :func:`build_map_sequential` - the naive O(n) reference that appends one
  group at a time.
* :func:`build_map_parallel` - a closed-form construction that partitions F
  into one contiguous section per group size and fills each section
  independently.  Sections share no data, so they may run concurrently; the
  output is bit-identical to the sequential construction either way.

:func:`locate` answers "which group holds token p" for a single position
without materializing F.

The logistic variant grows group sizes from 1 toward a capacity ``C``
following ``floor(C * e^(r*j) / (C + e^(r*j) - 1))``.  The double-precision
evaluation (including its saturation at exactly C once the exponential
dominates) is the definition all other operations must agree with, so it
uses the rearrangement ``C / (1 + (C-1) * e^(-r*j))``: algebraically
identical, overflow-free, and weakly monotone in j because each step is a
correctly-rounded monotone operation (the literal quotient of two rounded
ratios is not, and flickers across the floor boundary near saturation).
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import RemapError

__all__ = [
    "GroupingFunction",
    "LogisticGrowth",
    "ConstantSize",
    "TabulatedSizes",
    "logistic_growth",
    "GroupIndexMap",
    "build_map_sequential",
    "build_map_parallel",
    "locate",
    "grouping_from_json_dict",
]

# Below this exponent the decay factor e^(-r*j) underflows to zero and the
# group size has long saturated at the capacity.
_UNDERFLOW_EXPONENT = -745.0


class GroupingFunction:
    """Rule assigning a size to every group index.

    Sizes are positive integers, nondecreasing in the group index, and
    bounded by :attr:`max_size` (the bound is attained: from
    :meth:`first_index_at_max` on, every group has the maximal size).
    """

    def size_of_group(self, index: int) -> int:
        raise NotImplementedError

    @property
    def max_size(self) -> int:
        raise NotImplementedError

    def first_index_at_max(self) -> int:
        return self.smallest_index_of_size(self.max_size)

    def smallest_index_of_size(self, size: int) -> int:
        """First group index whose size reaches ``size``.

        Equals the smallest j with ``size_of_group(j) == size`` whenever some
        group has exactly that size.  Growth steeper than one size step per
        index can skip sizes entirely; for a skipped size the returned index
        is where that size class would begin (and the class is empty), which
        is the boundary :func:`build_map_parallel` and :func:`locate` need.
        """
        raise NotImplementedError

    def elements_in_size_class(self, size: int) -> int:
        """Number of token positions lying in groups of exactly this size.

        Only sizes below :attr:`max_size` form bounded classes; the maximal
        size repeats forever, so its class has no finite count.
        """
        if size < 1:
            raise RemapError("invalid-size", f"group size {size} is less than 1")
        if size >= self.max_size:
            raise RemapError(
                "unbounded-class",
                f"size class {size} never ends (maximal size {self.max_size})",
            )
        return size * (
            self.smallest_index_of_size(size + 1) - self.smallest_index_of_size(size)
        )

    def to_json_dict(self) -> dict:
        raise NotImplementedError

    # Token-count prefix sums per size class, shared by locate() and
    # build_map_parallel().  first_index[y-1] is smallest_index_of_size(y)
    # for y = 1..max_size; tokens_before[x] is the total token count of size
    # classes 1..x for x = 0..max_size-1.
    @cached_property
    def _class_table(self) -> tuple[list[int], list[int]]:
        m = self.max_size
        first_index = [self.smallest_index_of_size(y) for y in range(1, m + 1)]
        tokens_before = [0] * m
        for x in range(1, m):
            tokens_before[x] = tokens_before[x - 1] + x * (
                first_index[x] - first_index[x - 1]
            )
        return first_index, tokens_before


@dataclass(frozen=True)
class LogisticGrowth(GroupingFunction):
    """Group sizes following a floored logistic curve toward ``capacity``.

    ``capacity`` is the maximal group size (the curve's asymptote, reached
    at finite index once the double-precision evaluation saturates);
    ``growth_rate`` controls how fast sizes ramp up.  Group 0 always has
    size 1.  Growth steeper than one size per index skips sizes; rates at
    least ~1e-15 keep the evaluation weakly monotone (below that, adjacent
    indices collapse to the same floating-point decay anyway).
    """

    capacity: int
    growth_rate: float

    def __post_init__(self):
        if not isinstance(self.capacity, (int, np.integer)) or self.capacity < 2:
            raise RemapError(
                "invalid-config",
                f"logistic capacity must be an integer >= 2, got {self.capacity!r}",
            )
        rate = self.growth_rate
        if not isinstance(rate, (int, float, np.floating)) or not math.isfinite(rate) or rate <= 0:
            raise RemapError(
                "invalid-config", f"growth rate must be a positive real, got {rate!r}"
            )
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "growth_rate", float(rate))

    @property
    def max_size(self) -> int:
        return self.capacity

    def size_of_group(self, index: int) -> int:
        if index < 0:
            raise RemapError("invalid-config", f"group index {index} is negative")
        c = self.capacity
        try:
            x = -self.growth_rate * index
        except OverflowError:
            return c
        if x < _UNDERFLOW_EXPONENT:
            return c
        return int(c / (1.0 + (c - 1) * math.exp(x)))

    def smallest_index_of_size(self, size: int) -> int:
        c = self.capacity
        if size < 1 or size > c:
            raise RemapError("invalid-size", f"size {size} outside 1..{c}")
        if size == 1:
            return 0
        if size == c:
            return self._first_index_at_capacity
        # The real-valued curve crosses `size` at x* = ln(size*(C-1)/(C-size))/r,
        # so ceil(x*) seeds the answer; the walk corrects for rounding of both
        # x* and the floored size evaluation.
        x = (math.log(size * (c - 1)) - math.log(c - size)) / self.growth_rate
        j = max(0, math.ceil(x))
        while j > 0 and self.size_of_group(j - 1) >= size:
            j -= 1
        while self.size_of_group(j) < size:
            j += 1
        return j

    @cached_property
    def _first_index_at_capacity(self) -> int:
        # No real solution exists (the curve only approaches C), but the
        # floored double-precision evaluation reaches C at finite index.
        # Exponential search brackets that point, then bisection pins it.
        c = self.capacity
        lo = self.smallest_index_of_size(c - 1) if c > 2 else 0
        if self.size_of_group(lo) >= c:
            return lo
        hi = max(2 * lo, 1)
        while self.size_of_group(hi) < c:
            lo = hi
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.size_of_group(mid) < c:
                lo = mid
            else:
                hi = mid
        return hi

    def to_json_dict(self) -> dict:
        return {
            "variant": "logistic",
            "capacity": self.capacity,
            "growth_rate": self.growth_rate,
        }


@dataclass(frozen=True)
class ConstantSize(GroupingFunction):
    """Every group has the same fixed size (floor-based grouping)."""

    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or self.size < 1:
            raise RemapError(
                "invalid-config", f"constant size must be an integer >= 1, got {self.size!r}"
            )
        object.__setattr__(self, "size", int(self.size))

    @property
    def max_size(self) -> int:
        return self.size

    def size_of_group(self, index: int) -> int:
        if index < 0:
            raise RemapError("invalid-config", f"group index {index} is negative")
        return self.size

    def smallest_index_of_size(self, size: int) -> int:
        if size < 1 or size > self.size:
            raise RemapError("invalid-size", f"size {size} outside 1..{self.size}")
        return 0

    def to_json_dict(self) -> dict:
        return {"variant": "constant", "size": self.size}


@dataclass(frozen=True)
class TabulatedSizes(GroupingFunction):
    """Explicitly listed group sizes; the last size repeats forever."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise RemapError("invalid-config", "tabulated sizes must be nonempty")
        if any(s < 1 for s in sizes):
            raise RemapError("invalid-config", f"tabulated sizes must be >= 1, got {sizes}")
        if any(b < a for a, b in zip(sizes, sizes[1:])):
            raise RemapError(
                "invalid-config", f"tabulated sizes must be nondecreasing, got {sizes}"
            )
        object.__setattr__(self, "sizes", sizes)

    @property
    def max_size(self) -> int:
        return self.sizes[-1]

    def size_of_group(self, index: int) -> int:
        if index < 0:
            raise RemapError("invalid-config", f"group index {index} is negative")
        return self.sizes[min(index, len(self.sizes) - 1)]

    def smallest_index_of_size(self, size: int) -> int:
        if size < 1 or size > self.max_size:
            raise RemapError("invalid-size", f"size {size} outside 1..{self.max_size}")
        return bisect_left(self.sizes, size)

    def to_json_dict(self) -> dict:
        return {"variant": "tabulated", "sizes": list(self.sizes)}


def logistic_growth(capacity: int, growth_rate: float) -> GroupingFunction:
    """Build a logistic grouping, normalizing capacity 1 to identity grouping.

    Capacity 1 has no logistic form (its inverse would divide by ln 0) but
    means "every group holds one token", so it maps to ``ConstantSize(1)``.
    """
    if isinstance(capacity, (int, np.integer)) and capacity == 1:
        return ConstantSize(1)
    return LogisticGrowth(capacity, growth_rate)


def grouping_from_json_dict(d: dict) -> GroupingFunction:
    variant = d.get("variant")
    if variant == "logistic":
        return logistic_growth(d["capacity"], d["growth_rate"])
    if variant == "constant":
        return ConstantSize(d["size"])
    if variant == "tabulated":
        return TabulatedSizes(tuple(d["sizes"]))
    raise RemapError("invalid-config", f"unknown grouping variant {variant!r}")


@dataclass(frozen=True)
class GroupIndexMap:
    """The array F mapping token position -> group index for one sequence."""

    entries: np.ndarray
    source: GroupingFunction

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.int64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, position: int) -> int:
        return int(self.entries[position])

    def to_json_dict(self) -> dict:
        return {
            "n": len(self.entries),
            "function": self.source.to_json_dict(),
            "F": self.entries.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "GroupIndexMap":
        m = cls(np.asarray(d["F"], dtype=np.int64), grouping_from_json_dict(d["function"]))
        if len(m.entries) != d["n"]:
            raise RemapError(
                "invalid-config", f"map length {len(m.entries)} does not match n={d['n']}"
            )
        return m


def build_map_sequential(n: int, fn: GroupingFunction) -> GroupIndexMap:
    """Reference construction: append each group's positions in turn."""
    if n < 0:
        raise RemapError("invalid-config", f"sequence length {n} is negative")
    entries: list[int] = []
    j = 0
    while len(entries) < n:
        entries.extend([j] * fn.size_of_group(j))
        j += 1
    return GroupIndexMap(np.asarray(entries[:n] if entries else [], dtype=np.int64), fn)


def build_map_parallel(n: int, fn: GroupingFunction) -> GroupIndexMap:
    """Closed-form construction, section by size class.

    Size class k occupies a contiguous span of ``elements_in_size_class(k)``
    positions starting at the class's token-count prefix sum, and within the
    span the group index advances every k positions from
    ``smallest_index_of_size(k)``.  Each section depends only on those O(1)
    quantities, never on other sections, so the loop below may be
    parallelized freely; output is identical to the sequential construction.
    """
    if n < 0:
        raise RemapError("invalid-config", f"sequence length {n} is negative")
    out = np.empty(n, dtype=np.int64)
    first_index, tokens_before = fn._class_table
    m = fn.max_size
    for k in range(1, m):
        start = tokens_before[k - 1]
        if start >= n:
            break
        stop = min(tokens_before[k], n)
        if stop > start:
            out[start:stop] = first_index[k - 1] + np.arange(stop - start) // k
    # Unbounded tail: every group from first_index_at_max on has size m.
    tail = tokens_before[m - 1]
    if tail < n:
        out[tail:n] = first_index[m - 1] + np.arange(n - tail) // m
    return GroupIndexMap(out, fn)


def locate(position: int, fn: GroupingFunction) -> int:
    """Group index of one token position, in O(log max_size) time.

    Finds the size class whose token span contains the position via the
    class prefix sums, then applies the same in-section arithmetic as
    :func:`build_map_parallel`.  Positions past the last bounded class fall
    into the arithmetic run of maximal-size groups.
    """
    if position < 0:
        raise RemapError("invalid-config", f"token position {position} is negative")
    first_index, tokens_before = fn._class_table
    i = position + 1  # work in 1-based token counts against the prefix sums
    k = bisect_left(tokens_before, i) - 1  # largest class with all tokens before i
    s = tokens_before[k]
    cls = k + 1
    return (first_index[cls - 1] - 1) + -((s - i) // cls)
