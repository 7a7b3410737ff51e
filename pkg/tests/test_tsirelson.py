import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symsep import _kernels
from symsep.norms import Tsirelson, dual_norm
from symsep.tsirelson import (
    ORACLE_MAX_SUPPORT,
    AdmissiblePartition,
    TsirelsonMemo,
    certificate_partition,
    l1_spreading_certificate,
    tsirelson_certificate,
    tsirelson_norm,
    tsirelson_norming_functional,
    tsirelson_oracle,
)
from symsep.vectors import CoordVector, basis

small = st.dictionaries(
    st.integers(1, 14), st.sampled_from([-2.0, -1.0, 1.0, 2.0]), min_size=1, max_size=8
).map(CoordVector)


def run_sum(k, m):
    return CoordVector({i: 1.0 for i in range(k, k + m)})


def test_examples():
    for n in (1, 2, 7, 40):
        assert tsirelson_norm(basis(n)) == 1.0
    assert tsirelson_norm(basis(2) + basis(3)) == 1.0
    assert tsirelson_oracle(basis(2) + basis(3)) == 1.0
    assert tsirelson_norm(run_sum(3, 3)) == 1.5
    assert tsirelson_oracle(run_sum(3, 3)) == 1.5
    assert tsirelson_oracle(basis(1)) == 1.0
    assert tsirelson_oracle(CoordVector()) == 0.0
    assert tsirelson_norm(CoordVector()) == 0.0
    x = run_sum(4, 4)
    assert tsirelson_oracle(x) == tsirelson_norm(x)


def test_oracle_support_limit():
    with pytest.raises(ValueError):
        tsirelson_oracle(run_sum(1, ORACLE_MAX_SUPPORT + 1))


def test_first_coordinate_is_sup_only():
    # min E_1 = 1 admits only a single set, so e_1 adds nothing beyond sup
    assert tsirelson_norm(basis(1) + basis(2)) == 1.0


def test_nested_split():
    # e_2 + ... : pairs at level 2 then halves again; compare with oracle
    x = CoordVector({i: 1.0 for i in (2, 3, 5, 6, 8, 9, 10)})
    assert tsirelson_norm(x) == tsirelson_oracle(x)


@given(small)
def test_oracle_equivalence(x):
    assert tsirelson_norm(x) == tsirelson_oracle(x)


@given(small, st.data())
def test_unconditional(x, data):
    flips = data.draw(st.lists(st.booleans(), min_size=len(x), max_size=len(x)))
    y = CoordVector({i: (-v if f else v) for (i, v), f in zip(x.items(), flips)})
    assert tsirelson_norm(y) == tsirelson_norm(x)


@given(small, st.integers(1, 14), st.floats(0.1, 3.0))
def test_monotone_in_coordinates(x, i, extra):
    bigger = CoordVector({**dict(x.items()), i: abs(x[i]) + extra})
    assert tsirelson_norm(bigger) >= tsirelson_norm(x.abs())


@pytest.mark.parametrize("k", range(1, 9))
def test_admissible_lower_bound(k):
    assert tsirelson_norm(run_sum(k, k)) >= k / 2
    rng = np.random.default_rng(k)
    for _ in range(10):
        signs = rng.choice([-1.0, 1.0], size=k)
        idx = np.sort(rng.choice(np.arange(k, k + 12), size=k, replace=False))
        v = CoordVector(zip(idx.tolist(), signs.tolist()))
        if v.min_index >= k:
            assert tsirelson_norm(v) >= k / 2


def test_spreading_examples():
    assert l1_spreading_certificate((3, 4, 5), (1, 1, 1), 0.5) == (True, 0.5)
    ok, val = l1_spreading_certificate((7,), (-1,), 1.0)
    assert ok and val == 1.0
    assert l1_spreading_certificate((3, 4, 5), (1, -1, 1), 0.5)[0]
    for bad in (((), ()), ((3, 3), (1, 1)), ((2, 3), (1,)), ((2, 3), (1, 0))):
        with pytest.raises(ValueError):
            l1_spreading_certificate(*bad, 0.5)


def test_admissible_partition_validation():
    assert AdmissiblePartition(((3, 3), (4, 6), (7, 7))).k == 3
    for bad in (((2, 2), (3, 3), (4, 4)), ((3, 4), (4, 5)), ((0, 1),), ()):
        with pytest.raises(ValueError):
            AdmissiblePartition(bad)


def _check_node(x, node):
    if node["kind"] == "sup":
        assert abs(x[node["index"]]) == pytest.approx(node["value"])
        return node["value"]
    part = certificate_partition(node)
    assert part is not None and part.k == node["k"] >= 2
    total = sum(_check_node(x, c) for c in node["children"])
    assert 0.5 * total == pytest.approx(node["value"], rel=1e-12)
    return node["value"]


@given(small)
def test_certificate_is_admissible_tree(x):
    cert = tsirelson_certificate(x)
    assert _check_node(x, cert) == pytest.approx(tsirelson_norm(x), rel=1e-12)


@given(small)
def test_norming_functional_from_certificate(x):
    f = tsirelson_norming_functional(x)
    assert f.dot(x) == pytest.approx(tsirelson_norm(x), rel=1e-12)
    assert dual_norm(f, Tsirelson()) == pytest.approx(1.0, abs=1e-6)


def test_history_levels_are_monotone():
    memo = TsirelsonMemo(run_sum(2, 9))
    roots = [memo.root(level) for level in range(memo.levels + 1)]
    assert roots == sorted(roots)
    assert memo.root() == tsirelson_norm(run_sum(2, 9))


@given(small)
def test_numba_matches_numpy(x):
    idx, vals = x.arrays()
    a = _kernels.tsirelson_history_py(idx, np.abs(vals))
    b = _kernels.tsirelson_history_nb(idx, np.abs(vals))
    assert a.shape == b.shape
    assert np.array_equal(a, b)
