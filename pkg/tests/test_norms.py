import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symsep.norms import (
    AuerbachRenorm,
    BiorthogonalSystem,
    ConvergenceError,
    Lp,
    MaxOf,
    PhiRenorm,
    Sup,
    Tsirelson,
    auerbach_renorm_nu,
    descriptor_from_json,
    descriptor_to_json,
    dual_norm,
    dual_norm_bracket,
    norm,
    norm_rows,
    norming_functional,
    parse_norm,
    phi,
)
from symsep.vectors import CoordVector, basis, staircase_c0

SYS4 = BiorthogonalSystem.canonical(4)
DESCRIPTORS = [
    Lp(1.0),
    Lp(1.5),
    Lp(2.0),
    Lp(3.0),
    Sup(),
    Tsirelson(),
    AuerbachRenorm(Lp(2.0), SYS4),
    PhiRenorm(Lp(2.0), SYS4, 0.25),
    MaxOf((Lp(2.0), Sup())),
]
ids = [type(d).__name__ + str(i) for i, d in enumerate(DESCRIPTORS)]

coeffs = st.lists(st.floats(-4, 4, allow_nan=False, allow_infinity=False), min_size=6, max_size=6)
vec = coeffs.map(lambda c: CoordVector.from_dense(np.array(c)))
nonzero = vec.filter(lambda x: not x.is_zero() and max(abs(v) for v in x.values()) > 1e-3)


def test_norm_examples():
    assert norm(basis(1) - basis(2), Lp(1)) == 2.0
    assert norm(staircase_c0(3), Sup()) == 1.0
    assert norm(basis(1) + basis(2), Lp(2)) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_lp_rejects_p_below_one():
    with pytest.raises(ValueError):
        Lp(0.5)


def test_norming_functional_examples():
    assert norming_functional(basis(1), Lp(2)).coefficients == basis(1)
    x = CoordVector({1: 3.0, 2: -4.0})
    f = norming_functional(x, Lp(1))
    assert f.coefficients == CoordVector({1: 1.0, 2: -1.0})
    assert f(x) == 7.0


def test_lp3_functional_matches_closed_form_and_fd():
    x = CoordVector({1: 1.0, 2: 2.0})
    nx = norm(x, Lp(3))
    f = norming_functional(x, Lp(3))
    want = {i: math.copysign(abs(v) ** 2 / nx**2, v) for i, v in x.items()}
    for i, v in want.items():
        assert f.coefficients[i] == pytest.approx(v, rel=1e-14)
    assert f(x) == pytest.approx(nx, rel=1e-14)
    # independent check: central differences of the norm itself
    h = 1e-6
    for i in (1, 2):
        e = basis(i, h)
        g = (norm(x + e, Lp(3)) - norm(x - e, Lp(3))) / (2 * h)
        assert g == pytest.approx(want[i], abs=1e-8)
    fn = norming_functional(x, Lp(3), method="numeric")
    assert fn(x) == pytest.approx(nx, rel=1e-9)


def test_auerbach_nu_examples():
    s = BiorthogonalSystem.canonical(3)
    x1, x2 = s.vectors[0], s.vectors[1]
    assert auerbach_renorm_nu(x1, s) == 1.0
    assert auerbach_renorm_nu(x1 - x2, s) == 2.0
    assert auerbach_renorm_nu(CoordVector(), s) == 0.0


def test_phi_examples():
    assert phi(1, 0, 0.5) == 1.0
    assert phi(1, 1, 0.5) == 1.5
    for eps in (0.1, 0.5, 0.9):
        assert phi(1, -1, eps) == 1.0
    with pytest.raises(ValueError):
        phi(1, 1, 1.0)


def test_dual_norm_examples():
    assert dual_norm(basis(1) + basis(2), Sup()) == 2.0
    assert dual_norm(basis(1), Lp(2)) == 1.0
    assert dual_norm(CoordVector({1: 1, 2: 1}), Lp(3)) == pytest.approx(2 ** (2 / 3), rel=1e-14)


def test_dual_norm_lp3_against_grid():
    # Hoelder value 2^(2/3) against brute maximization over the l3 circle
    t = np.linspace(0, 2 * np.pi, 200001)
    pts = np.stack([np.cos(t), np.sin(t)], axis=1)
    pts /= (np.abs(pts) ** 3).sum(axis=1, keepdims=True) ** (1 / 3)
    assert pts.sum(axis=1).max() == pytest.approx(2 ** (2 / 3), abs=1e-9)


def test_cutting_plane_dual_matches_closed_form():
    for d in (Lp(1.5), Lp(2.0), Sup(), Lp(1.0)):
        f = CoordVector({1: 0.3, 2: -1.2, 4: 0.7})
        lo, hi, ok = dual_norm_bracket(f, MaxOf((d,)))
        assert ok
        assert lo <= dual_norm(f, d) + 1e-9 and dual_norm(f, d) <= hi + 1e-9
        assert hi - lo < 1e-8


def test_tsirelson_dual():
    x = CoordVector({3: 1, 4: 1, 5: 1})
    f = norming_functional(x, Tsirelson())
    assert f(x) == pytest.approx(1.5)
    assert dual_norm(f.coefficients, Tsirelson()) == pytest.approx(1.0, abs=1e-9)


def test_renorm_requires_two_pairs():
    with pytest.raises(ValueError):
        AuerbachRenorm(Lp(2), BiorthogonalSystem.canonical(1))


def test_non_biorthogonal_rejected():
    with pytest.raises(ValueError):
        BiorthogonalSystem(((basis(1), basis(1)), (basis(2), basis(1))))


def test_auerbach_flag_checks_norms():
    bad = BiorthogonalSystem(((basis(1, 2.0), basis(1, 0.5)), (basis(2), basis(2))), auerbach=True)
    with pytest.raises(ValueError):
        AuerbachRenorm(Lp(2), bad)


@pytest.mark.parametrize("spec", ["lp:1", "lp:2.5", "sup", "tsirelson"])
def test_parse_norm_roundtrip(spec):
    d = parse_norm(spec)
    assert descriptor_from_json(json.loads(json.dumps(descriptor_to_json(d)))) == d


def test_parse_norm_system_file(tmp_path):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps({"base": "lp:2", "pairs": SYS4.to_json()["pairs"]}))
    a = parse_norm(f"auerbach:{p}")
    assert isinstance(a, AuerbachRenorm) and a.base == Lp(2.0)
    ph = parse_norm(f"phi:{p}:0.25")
    assert isinstance(ph, PhiRenorm) and ph.eps == 0.25
    for bad in ("lp:0.5", "foo", "phi:%s:2" % p):
        with pytest.raises(ValueError):
            parse_norm(bad)


@pytest.mark.parametrize("d", DESCRIPTORS, ids=ids)
def test_norm_rows_matches_norm(d):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, 7))
    want = [norm(CoordVector.from_dense(r), d) for r in X]
    assert np.allclose(norm_rows(X, d), want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("d", DESCRIPTORS, ids=ids)
@given(x=vec, y=vec, lam=st.floats(-10, 10, allow_nan=False))
def test_triangle_and_homogeneity(d, x, y, lam):
    assert norm(x + y, d) <= norm(x, d) + norm(y, d) + 1e-9
    assert norm(x * lam, d) == pytest.approx(abs(lam) * norm(x, d), abs=1e-9, rel=1e-12)


@given(x=vec)
def test_auerbach_bounds(x):
    d = AuerbachRenorm(Lp(2.0), SYS4)
    b = norm(x, d.base)
    assert b - 1e-12 <= norm(x, d) <= 2 * b + 1e-12


@given(x=vec, eps=st.floats(0.01, 0.99))
def test_phi_bounds(x, eps):
    d = PhiRenorm(Lp(2.0), SYS4, eps)
    b = norm(x, d.base)
    assert b - 1e-12 <= norm(x, d) <= (1 + eps) * b + 1e-12


@pytest.mark.parametrize("d", DESCRIPTORS, ids=ids)
@settings(max_examples=20)  # cutting-plane dual norms cost ~0.5 s each
@given(x=nonzero)
def test_norming_identities(d, x):
    f = norming_functional(x, d)
    nx = norm(x, d)
    assert f(x) / nx == pytest.approx(1.0, abs=1e-6)
    assert dual_norm(f.coefficients, d) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=20)
@given(x=nonzero)
def test_numeric_functional_certified_or_refused(x):
    d = PhiRenorm(Lp(2.0), SYS4, 0.25)
    try:
        f = norming_functional(x, d, method="numeric")
    except ConvergenceError:
        return  # kinks are allowed to refuse, never to return an uncertified functional
    assert f(x) == pytest.approx(norm(x, d), rel=1e-9)
    assert f.dual_norm_value == pytest.approx(1.0, abs=1e-6)
