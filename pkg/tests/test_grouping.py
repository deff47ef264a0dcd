"""Group-size functions, index maps, and their closed-form construction."""

import math

import numpy as np
import pytest

from conftest import naive_group_map, random_grouping
from grouprope import (
    ConstantSize,
    GroupIndexMap,
    LogisticGrowth,
    RemapError,
    TabulatedSizes,
    build_map_parallel,
    build_map_sequential,
    grouping_from_json_dict,
    locate,
    logistic_growth,
)

EXAMPLE = TabulatedSizes((1, 2, 2, 3, 3))
EXAMPLE_MAP = [0, 1, 1, 2, 2, 3, 3, 3, 4, 4, 4]


class TestSizeOfGroup:
    def test_logistic_starts_at_one(self):
        assert LogisticGrowth(16, 0.02).size_of_group(0) == 1

    def test_logistic_known_step(self):
        # Independently checked by direct evaluation of the floored curve:
        # the first index of size 2 for capacity 16, rate 0.02 is 39.
        fn = LogisticGrowth(16, 0.02)
        assert fn.size_of_group(38) == 1
        assert fn.size_of_group(39) == 2

    def test_logistic_saturates_at_capacity(self):
        fn = LogisticGrowth(16, 0.02)
        assert fn.size_of_group(10**9) == 16
        assert fn.size_of_group(10**18) == 16

    def test_logistic_bounded_by_capacity(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            fn = LogisticGrowth(int(rng.integers(2, 129)), float(rng.uniform(0.005, 1.0)))
            sizes = [fn.size_of_group(j) for j in range(0, 3000, 7)]
            assert all(1 <= s <= fn.capacity for s in sizes)
            assert all(b >= a for a, b in zip(sizes, sizes[1:]))

    def test_constant_and_tabulated(self):
        assert ConstantSize(5).size_of_group(123) == 5
        assert EXAMPLE.size_of_group(1) == 2
        assert EXAMPLE.size_of_group(99) == 3  # tail repeats the last size

    def test_negative_index_rejected(self):
        with pytest.raises(RemapError):
            LogisticGrowth(16, 0.02).size_of_group(-1)


class TestSmallestIndexOfSize:
    def test_size_one_is_group_zero(self):
        assert LogisticGrowth(16, 0.02).smallest_index_of_size(1) == 0

    def test_matches_linear_scan(self):
        fn = LogisticGrowth(16, 0.02)
        j = 0
        while fn.size_of_group(j) != 2:
            j += 1
        assert fn.smallest_index_of_size(2) == j == 39

    def test_floored_seed_is_off_by_one(self):
        # The naive floored closed form lands one short of the true first
        # index when the real-valued crossing is fractional, which is why
        # the implementation seeds with ceil and corrects by search.
        c, r, y = 16, 0.02, 2
        floored = math.floor((math.log(c * y - y) - math.log(c - y)) / r)
        assert floored == 38
        assert LogisticGrowth(c, r).size_of_group(floored) == 1

    def test_tabulated_example(self):
        assert EXAMPLE.smallest_index_of_size(3) == 3
        assert EXAMPLE.smallest_index_of_size(2) == 1
        assert EXAMPLE.smallest_index_of_size(1) == 0

    def test_out_of_range_sizes_rejected(self):
        fn = LogisticGrowth(16, 0.02)
        for bad in (0, -1, 17):
            with pytest.raises(RemapError, match="invalid-size"):
                fn.smallest_index_of_size(bad)

    def test_capacity_size_reachable(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            fn = LogisticGrowth(int(rng.integers(2, 65)), float(rng.uniform(0.01, 0.8)))
            j = fn.smallest_index_of_size(fn.capacity)
            assert fn.size_of_group(j) == fn.capacity
            assert j == 0 or fn.size_of_group(j - 1) < fn.capacity

    def test_first_index_reaching_size_under_steep_growth(self):
        # Steep growth skips sizes entirely (e.g. capacity 128 at rate 1.0
        # jumps 1, 2, 7, ...); the inverse then marks where the empty class
        # would begin: minimal j with size >= y.
        fn = LogisticGrowth(128, 1.0)
        assert fn.size_of_group(1) == 2
        assert fn.size_of_group(2) == 7
        for y in (3, 4, 5, 6, 7):
            assert fn.smallest_index_of_size(y) == 2
        rng = np.random.default_rng(4)
        for _ in range(30):
            fn = LogisticGrowth(int(rng.integers(2, 129)), float(rng.uniform(0.005, 1.0)))
            for y in range(1, fn.capacity + 1):
                j = fn.smallest_index_of_size(y)
                assert fn.size_of_group(j) >= y
                assert j == 0 or fn.size_of_group(j - 1) < y


class TestElementsInSizeClass:
    def test_example_counts_match_enumeration(self):
        # Enumerate the infinite sequence far enough to cover all bounded
        # classes, then count positions per designed group size.
        entries = naive_group_map(50, EXAMPLE.size_of_group)
        counts = {}
        for g in entries:
            s = EXAMPLE.size_of_group(g)
            counts[s] = counts.get(s, 0) + 1
        assert EXAMPLE.elements_in_size_class(1) == counts[1] == 1
        assert EXAMPLE.elements_in_size_class(2) == counts[2] == 4

    def test_off_by_one_variant_overcounts(self):
        # The "+1" variant of the class count would claim one extra group
        # per class; for Example sizes it puts two positions in size-1
        # groups though only position 0 qualifies.
        inv = EXAMPLE.smallest_index_of_size
        assert 1 * (inv(2) - inv(1) + 1) == 2
        assert EXAMPLE.elements_in_size_class(1) == 1

    def test_maximal_class_is_unbounded(self):
        with pytest.raises(RemapError, match="unbounded-class"):
            EXAMPLE.elements_in_size_class(3)
        with pytest.raises(RemapError, match="unbounded-class"):
            ConstantSize(1).elements_in_size_class(1)

    def test_invalid_size(self):
        with pytest.raises(RemapError, match="invalid-size"):
            EXAMPLE.elements_in_size_class(0)

    def test_constant_below_max_is_empty(self):
        assert ConstantSize(5).elements_in_size_class(3) == 0


class TestBuildMaps:
    def test_example_golden(self):
        assert build_map_sequential(11, EXAMPLE).entries.tolist() == EXAMPLE_MAP
        assert build_map_parallel(11, EXAMPLE).entries.tolist() == EXAMPLE_MAP

    def test_empty_sequence(self):
        assert build_map_sequential(0, EXAMPLE).entries.tolist() == []
        assert build_map_parallel(0, ConstantSize(4)).entries.tolist() == []

    def test_constant_is_floor_division(self):
        assert build_map_sequential(5, ConstantSize(2)).entries.tolist() == [0, 0, 1, 1, 2]
        n = 137
        got = build_map_parallel(n, ConstantSize(5)).entries
        np.testing.assert_array_equal(got, np.arange(n) // 5)

    def test_shorter_than_first_group(self):
        fn = LogisticGrowth(64, 0.5)
        assert build_map_parallel(3, fn).entries.tolist() == \
            build_map_sequential(3, fn).entries.tolist()

    def test_parallel_matches_naive_reference(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            fn = random_grouping(rng)
            n = int(rng.integers(0, 400))
            expected = naive_group_map(n, fn.size_of_group)
            assert build_map_parallel(n, fn).entries.tolist() == expected
            assert build_map_sequential(n, fn).entries.tolist() == expected

    def test_monotone_steps_and_run_lengths(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            fn = random_grouping(rng)
            n = int(rng.integers(1, 500))
            f = build_map_parallel(n, fn).entries
            assert f[0] == 0
            steps = np.diff(f)
            assert set(np.unique(steps)).issubset({0, 1})
            # every fully contained group has exactly its designed size
            values, counts = np.unique(f, return_counts=True)
            for g, c in zip(values[:-1], counts[:-1]):
                assert c == fn.size_of_group(int(g))
            assert counts[-1] <= fn.size_of_group(int(values[-1]))

    def test_negative_length_rejected(self):
        with pytest.raises(RemapError):
            build_map_parallel(-1, EXAMPLE)


class TestLocate:
    def test_examples(self):
        assert locate(5, EXAMPLE) == 3
        assert locate(0, EXAMPLE) == 0
        assert locate(10, EXAMPLE) == 4

    def test_matches_sequential_map(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            fn = random_grouping(rng)
            n = int(rng.integers(1, 600))
            entries = build_map_sequential(n, fn).entries
            for p in rng.integers(0, n, size=20):
                assert locate(int(p), fn) == entries[p]

    def test_beyond_bounded_classes(self):
        fn = LogisticGrowth(4, 0.5)
        far = fn.smallest_index_of_size(4) * 4 + 1000
        entries = build_map_sequential(far + 1, fn).entries
        assert locate(far, fn) == entries[far]

    def test_negative_position_rejected(self):
        with pytest.raises(RemapError):
            locate(-1, EXAMPLE)


class TestConstruction:
    def test_capacity_one_normalizes_to_identity(self):
        fn = logistic_growth(1, 0.5)
        assert isinstance(fn, ConstantSize) and fn.size == 1
        assert build_map_parallel(6, fn).entries.tolist() == [0, 1, 2, 3, 4, 5]

    def test_invalid_parameters(self):
        with pytest.raises(RemapError, match="invalid-config"):
            LogisticGrowth(1, 0.5)
        with pytest.raises(RemapError, match="invalid-config"):
            LogisticGrowth(16, 0.0)
        with pytest.raises(RemapError, match="invalid-config"):
            LogisticGrowth(16, float("nan"))
        with pytest.raises(RemapError, match="invalid-config"):
            ConstantSize(0)
        with pytest.raises(RemapError, match="invalid-config"):
            TabulatedSizes(())
        with pytest.raises(RemapError, match="invalid-config"):
            TabulatedSizes((2, 1))
        with pytest.raises(RemapError, match="invalid-config"):
            TabulatedSizes((0, 1))


class TestJsonFormat:
    def test_key_order_and_content(self):
        m = build_map_parallel(11, EXAMPLE)
        d = m.to_json_dict()
        assert list(d) == ["n", "function", "F"]
        assert d["n"] == 11 and d["F"] == EXAMPLE_MAP
        assert list(d["function"]) == ["variant", "sizes"]

    def test_variant_fields(self):
        assert list(LogisticGrowth(16, 0.02).to_json_dict()) == [
            "variant", "capacity", "growth_rate",
        ]
        assert ConstantSize(3).to_json_dict() == {"variant": "constant", "size": 3}

    def test_round_trip(self):
        for fn in (LogisticGrowth(16, 0.02), ConstantSize(3), EXAMPLE):
            m = build_map_parallel(23, fn)
            again = GroupIndexMap.from_json_dict(m.to_json_dict())
            np.testing.assert_array_equal(again.entries, m.entries)
            assert again.source == fn

    def test_unknown_variant_rejected(self):
        with pytest.raises(RemapError):
            grouping_from_json_dict({"variant": "quadratic"})
