import math
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxrep.errors import InvariantViolation, ResourceLimitError, ValidationError
from maxrep.partitions import (
    Partition,
    StepFunction,
    area,
    dim_exact,
    enumerate_partitions,
    from_step_function,
    hook_lengths,
    hooks_from_steps,
    iter_partitions,
    partition_count,
    random_partition,
    to_step_function,
)


@lru_cache(maxsize=None)
def count_tableaux(parts):
    """Standard Young tableaux by removing the largest entry from a corner."""
    if sum(parts) == 0:
        return 1
    total = 0
    for i, p in enumerate(parts):
        below = parts[i + 1] if i + 1 < len(parts) else 0
        if p > below:
            smaller = list(parts)
            smaller[i] -= 1
            total += count_tableaux(tuple(x for x in smaller if x))
    return total


def naive_count(n, cap=None):
    cap = n if cap is None else cap
    if n == 0:
        return 1
    return sum(naive_count(n - p, p) for p in range(1, min(n, cap) + 1))


partitions_st = st.lists(st.integers(1, 9), min_size=0, max_size=9).map(
    lambda xs: Partition(tuple(sorted(xs, reverse=True)))
)


def test_enumeration_counts():
    assert enumerate_partitions(0) == 1
    assert list(iter_partitions(0)) == [Partition(())]
    assert enumerate_partitions(6) == 11 == naive_count(6)
    for n in range(1, 16):
        assert enumerate_partitions(n) == naive_count(n) == partition_count(n)


def test_partition_count_81():
    assert partition_count(81) == 18_004_327


def test_enumeration_reverse_lex_and_distinct():
    seen = [lam.parts for lam in iter_partitions(10)]
    assert seen == sorted(seen, reverse=True)
    assert len(set(seen)) == len(seen)
    assert all(sum(p) == 10 for p in seen)


def test_enumeration_ceiling():
    with pytest.raises(ResourceLimitError):
        enumerate_partitions(121)
    with pytest.raises(ResourceLimitError):
        enumerate_partitions(10, ceiling=9)


def test_partition_validation():
    with pytest.raises(ValidationError):
        Partition((1, 2))
    with pytest.raises(ValidationError):
        Partition((2, 0))
    assert Partition.parse("3,2") == Partition((3, 2))
    assert str(Partition((3, 2))) == "3,2"


def test_hook_examples():
    assert sorted(hook_lengths(Partition((1,)))) == [1]
    assert Counter(hook_lengths(Partition((2, 2)))) == Counter([3, 2, 2, 1])
    assert Counter(hook_lengths(Partition((3, 2)))) == Counter([4, 3, 1, 2, 1])


def test_dim_examples():
    assert dim_exact(Partition((1,))).exact == 1
    assert dim_exact(Partition((2, 2))).exact == 2
    assert dim_exact(Partition((3, 2))).exact == 5


def test_dim_matches_tableaux_count():
    for n in range(1, 11):
        for lam in iter_partitions(n):
            assert dim_exact(lam).exact == count_tableaux(lam.parts)


@pytest.mark.parametrize("N", range(0, 21))
def test_sum_of_squares_is_factorial(N):
    assert sum(dim_exact(lam).exact ** 2 for lam in iter_partitions(N)) == math.factorial(N)


@given(partitions_st)
def test_big_dim_log_consistent(lam):
    d = dim_exact(lam)
    assert abs(math.log(d.exact) - float(d.log_value)) <= 1e-12 * max(1.0, math.log(d.exact))


@given(partitions_st)
def test_dim_conjugation(lam):
    assert dim_exact(lam).exact == dim_exact(lam.conjugate()).exact
    assert lam.conjugate().conjugate() == lam


def test_step_function_examples():
    empty = to_step_function(Partition(()))
    assert empty.L == 0 and area(empty) == 0
    assert float(empty(3.5)) == 3.5
    one = to_step_function(Partition((1,)))
    assert list(one.heights()) == [1, 2, 1]
    assert float(one(0.5)) == 1.5 and float(one(-3)) == 3
    sq = to_step_function(Partition((2, 2)))
    assert str(sq) == "2:++--"
    assert area(sq) == 4
    ups = [x for x, s in zip(range(-sq.L, sq.L), sq.steps) if s > 0]
    assert ups == [-2, -1]


def test_step_function_invariants():
    with pytest.raises(InvariantViolation):
        StepFunction(1, (1, 1))  # does not return to |x|
    with pytest.raises(InvariantViolation):
        StepFunction(1, (-1,))
    with pytest.raises(ValidationError):
        StepFunction.parse("x:+-")
    f = StepFunction.parse("3:--+-++")
    assert str(f) == "3:--+-++"
    assert f.trimmed() == StepFunction.parse("1:+-")
    assert f.trimmed().extended(3) == f


def test_round_trip_examples():
    assert from_step_function(StepFunction(0, ())) == Partition(())
    assert from_step_function(to_step_function(Partition((3, 2)))) == Partition((3, 2))


def test_round_trip_exhaustive():
    for n in range(13):
        for lam in iter_partitions(n):
            f = to_step_function(lam)
            assert from_step_function(f) == lam
            assert from_step_function(f.extended(f.L + 3)) == lam
            assert Counter(hooks_from_steps(f)) == Counter(hook_lengths(lam))
            assert area(f) == n


def test_round_trip_random(rng):
    for _ in range(1000):
        lam = random_partition(int(rng.integers(0, 61)), rng)
        assert from_step_function(to_step_function(lam)) == lam


def test_hooks_random(rng):
    for _ in range(200):
        lam = random_partition(int(rng.integers(1, 31)), rng)
        assert Counter(hooks_from_steps(to_step_function(lam))) == Counter(hook_lengths(lam))


def test_hooks_from_steps_examples():
    assert hooks_from_steps(StepFunction(0, ())) == ()
    assert Counter(hooks_from_steps(to_step_function(Partition((2, 2))))) == Counter([1, 2, 2, 3])
    assert hooks_from_steps(to_step_function(Partition((1,)))) == (1,)
    assert area(to_step_function(Partition((2, 2, 1)))) == 5


def test_random_partition_uniform():
    rng = np.random.default_rng(5)
    counts = Counter(random_partition(5, rng).parts for _ in range(7000))
    assert len(counts) == 7
    assert max(counts.values()) - min(counts.values()) < 250
