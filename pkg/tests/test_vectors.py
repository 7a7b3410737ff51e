import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symsep.vectors import (
    CoordVector,
    add,
    basis,
    is_block_sequence,
    restrict,
    staircase_c0,
    strictly_before,
)

entries = st.dictionaries(
    st.integers(1, 20), st.floats(-5, 5, allow_nan=False, allow_infinity=False), max_size=8
)
vectors = entries.map(CoordVector)


def test_additive_inverse_gives_empty_support():
    e1 = basis(1)
    z = add(e1, -e1)
    assert z.is_zero()
    assert z.support() == ()


def test_disjoint_sum():
    assert add(basis(1), basis(2)) == CoordVector({1: 1.0, 2: 1.0})


def test_cancellation():
    assert add(add(-basis(2), basis(1)), basis(2)) == CoordVector({1: 1.0})


def test_restrict_examples():
    x = CoordVector({1: 1.0, 3: 2.0})
    assert restrict(x, (2, 3)) == CoordVector({3: 2.0})
    assert restrict(x, (1, x.max_index)) == x
    assert restrict(basis(5), (1, 4)).is_zero()


@pytest.mark.parametrize("bad", [(0, 3), (4, 2), (-1, 1)])
def test_restrict_rejects_bad_interval(bad):
    with pytest.raises(ValueError):
        restrict(basis(1), bad)


def test_staircase():
    assert staircase_c0(1) == CoordVector({1: 1.0, 2: -1.0})
    assert staircase_c0(3) == CoordVector({1: 1.0, 2: 1.0, 3: 1.0, 4: -1.0})
    for n in range(1, 20):
        assert np.max(np.abs(staircase_c0(n).to_dense())) == 1.0
    with pytest.raises(ValueError):
        staircase_c0(0)


def test_zero_dropping_is_exact():
    x = CoordVector({1: 1e-300, 2: 0.0})
    assert x.support() == (1,)


def test_json_roundtrip_and_rejection():
    x = CoordVector({2: -1.5, 7: 3.0})
    assert CoordVector.from_json(x.to_json()) == x
    assert CoordVector.from_json('{"2": -1.5, "7": 3}') == x
    for bad in ('{"0": 1}', '{"a": 1}', '{"1": 1, "1": 2}', '{"-2": 1}'):
        with pytest.raises(ValueError):
            CoordVector.from_json(bad)


def test_block_order():
    a, b, c = CoordVector({1: 1, 2: 1}), CoordVector({3: 1}), CoordVector({3: 1, 4: 2})
    assert strictly_before(a, b)
    assert not strictly_before(b, c)
    assert is_block_sequence([a, b])
    assert not is_block_sequence([a, b, c])


@given(vectors, vectors)
def test_support_of_sum(a, b):
    assert set(add(a, b).support()) <= set(a.support()) | set(b.support())


@given(vectors, vectors, vectors)
def test_strictly_before_transitive(a, b, c):
    if strictly_before(a, b) and strictly_before(b, c):
        assert strictly_before(a, c)


@given(st.integers(0, 6), st.integers(1, 4), st.integers(7, 12))
def test_strictly_before_transitive_on_blocks(shift, width, gap):
    a = CoordVector({1 + shift: 1.0, 1 + shift + width: 2.0})
    b = CoordVector({2 + shift + width: -1.0})
    c = CoordVector({gap + shift + width: 1.0})
    assert strictly_before(a, b) and strictly_before(b, c) and strictly_before(a, c)


@given(vectors, st.integers(1, 20), st.integers(0, 10))
def test_restrict_idempotent(x, lo, width):
    E = (lo, lo + width)
    once = restrict(x, E)
    assert restrict(once, E) == once
    assert all(lo <= i <= lo + width for i in once.support())


@given(vectors)
def test_dense_roundtrip(x):
    n = max(x.max_index, 1) if not x.is_zero() else 1
    assert CoordVector.from_dense(x.to_dense(n)) == x
