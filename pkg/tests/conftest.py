"""Shared test helpers: independent references and random-case samplers.

``naive_group_map`` is the ground truth everything else is judged against:
it knows nothing about inverses, size classes, or closed forms, only "group
j contributes size_of(j) consecutive positions".
"""

from __future__ import annotations

import numpy as np

from grouprope import ConstantSize, LogisticGrowth, TabulatedSizes


def naive_group_map(n: int, size_of) -> list[int]:
    out: list[int] = []
    j = 0
    while len(out) < n:
        out.extend([j] * size_of(j))
        j += 1
    return out[:n]


def random_grouping(rng: np.random.Generator, max_capacity: int = 16):
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return ConstantSize(int(rng.integers(1, 9)))
    if kind == 1:
        capacity = int(rng.integers(2, max_capacity + 1))
        return LogisticGrowth(capacity, float(rng.uniform(0.01, 0.5)))
    steps = rng.integers(0, 3, size=int(rng.integers(1, 6)))
    sizes = tuple(int(s) for s in np.cumsum(steps) + 1)
    return TabulatedSizes(sizes)
