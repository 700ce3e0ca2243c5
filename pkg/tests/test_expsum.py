import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import eval_terms, product_terms
from quasiwiener import ExpSum, Lattice, combine, modulate, reduce_mod_dual, w_norm
from quasiwiener.errors import DimensionError

coeff = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
freq = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))


@st.composite
def sums(draw, dim=1, max_terms=6):
    n = draw(st.integers(0, max_terms))
    cs = draw(st.lists(coeff, min_size=n, max_size=n))
    fs = draw(st.lists(st.lists(freq, min_size=dim, max_size=dim), min_size=n, max_size=n))
    return ExpSum(np.array(cs, dtype=complex), np.array(fs, dtype=float).reshape(n, dim), dim=dim)


def terms(f):
    return list(zip(f.coeffs, f.freqs))


def test_constant_evaluates_to_one():
    f = ExpSum([1.0], [0.0])
    for x in (-3.7, 0.0, 11.2):
        assert f(x) == pytest.approx(1.0, abs=1e-15)


def test_two_terms_at_half():
    f = ExpSum([1.0, 0.5], [0.0, 1.0])
    assert f(0.5) == pytest.approx(0.5, abs=1e-15)


def test_characters_multiply_by_adding_frequencies():
    a, b = 0.3, np.sqrt(2)
    g = ExpSum.character(a) * ExpSum.character(b)
    assert len(g) == 1
    assert g.freqs[0, 0] == pytest.approx(a + b, abs=1e-15)
    assert g.coeffs[0] == pytest.approx(1.0)


def test_product_cancels_middle_term():
    lam = 0.7
    f = ExpSum([1.0, 0.5], [0.0, lam])
    g = ExpSum([1.0, -0.5], [0.0, lam])
    h = combine(f, g, "mul")
    assert len(h) == 2
    assert h.allclose(ExpSum([1.0, -0.25], [0.0, 2 * lam]), atol=1e-15)


def test_w_norm_examples():
    assert w_norm(ExpSum([1.0, 0.5], [0.0, 0.4])) == pytest.approx(1.5)
    assert w_norm(ExpSum.empty()) == 0.0


def test_modulate_examples():
    f = ExpSum([1.0, -2j], [0.0, 0.25])
    assert modulate(f, 0.0).allclose(f, atol=0.0)
    g = modulate(ExpSum.constant(1.0), 0.8)
    assert g.freqs[0, 0] == 0.8 and g.coeffs[0] == 1.0


def test_reduce_mod_dual_example():
    f = ExpSum([2.0 - 1j], [1.25])
    r = reduce_mod_dual(f, Lattice.integer(1))
    assert r.freqs[0, 0] == pytest.approx(0.25, abs=1e-15)
    assert r.coeffs[0] == 2.0 - 1j


def test_normalization_merges_and_drops():
    f = ExpSum([1.0, 2.0, 1e-16], [0.5, 0.5 + 1e-12, 3.0])
    assert len(f) == 1
    assert f.coeffs[0] == 3.0
    assert f.tail_bound == pytest.approx(1e-16)


def test_terms_sorted_lexicographically():
    f = ExpSum([1, 2, 3], [[1.0, 0.0], [0.0, 5.0], [0.0, -1.0]], dim=2)
    assert f.freqs.tolist() == [[0.0, -1.0], [0.0, 5.0], [1.0, 0.0]]


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        ExpSum.constant(1.0, 1) + ExpSum.constant(1.0, 2)


def test_serialization_round_trip():
    f = ExpSum([1 + 2j, -0.5], [[0.1, np.pi], [np.sqrt(2), -1.0]], dim=2, tail_bound=3e-12)
    g = ExpSum.loads(f.dumps())
    assert np.array_equal(g.freqs, f.freqs)
    assert np.array_equal(g.coeffs, f.coeffs)
    assert g.tail_bound == f.tail_bound


def test_missing_field_is_named():
    with pytest.raises(ValueError, match="terms"):
        ExpSum.from_dict({"dim": 1})


@given(sums(), sums(), st.floats(-20, 20, allow_nan=False))
def test_pointwise_algebra(f, g, x):
    assert abs((f + g)(x) - (f(x) + g(x))) <= 1e-12
    assert abs((f * g)(x) - f(x) * g(x)) <= 1e-12
    assert abs(f(x) - eval_terms(terms(f), x)) <= 1e-12


@given(sums(dim=2), sums(dim=2))
def test_product_matches_pairwise_oracle(f, g):
    ref = product_terms(terms(f), terms(g))
    h = f * g
    for c, fr in terms(h):
        key = tuple(np.round(fr, 9))
        assert abs(c - ref.pop(key)) <= 1e-12
    assert all(abs(v) < 1e-14 for v in ref.values())


@given(sums(), sums())
def test_submultiplicative(f, g):
    assert (f * g).w_norm <= f.w_norm * g.w_norm * (1 + 1e-12) + 1e-15


@given(sums(dim=2), st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2))
def test_modulate_preserves_norm(f, gamma):
    assert modulate(f, gamma).w_norm == f.w_norm


@given(sums(), sums())
def test_tail_bound_never_decreases(f, g):
    f = ExpSum(f.coeffs, f.freqs, tail_bound=1e-3, dim=1)
    assert (f + g).tail_bound >= f.tail_bound
    assert (f * ExpSum.constant(1.0)).tail_bound >= f.tail_bound


@pytest.mark.parametrize(
    "basis,shift",
    [
        (np.eye(1), None),
        (2.5 * np.eye(1), [0.3]),
        (np.array([[2.0, 1.0], [0.0, 1.0]]), None),
        (np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]), [0.2, 0.7]),
    ],
)
def test_reduce_mod_dual_preserves_values_on_coset(basis, shift, rng):
    L = Lattice(basis)
    d = L.dim
    f = ExpSum(rng.standard_normal(8) + 1j * rng.standard_normal(8), rng.uniform(-6, 6, (8, d)), dim=d)
    r = f.reduce_mod_dual(L, shift)
    k = rng.integers(-7, 8, (40, d)).astype(float)
    pts = k @ L.basis.T + (0 if shift is None else np.asarray(shift))
    assert np.max(np.abs(r(pts) - f(pts))) <= 1e-12
    coords = L.dual().coordinates(r.freqs)
    assert np.all((coords >= 0) & (coords < 1))
