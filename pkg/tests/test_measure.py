import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import growth_scan, min_distance, sliding_max_1d
from quasiwiener import AtomicMeasure, Coset, Lattice, comb, growth_fit, min_separation, pairing, translate
from quasiwiener import translation_bound
from quasiwiener.errors import WindowError
from quasiwiener.measure import from_points, read_points_csv, uniform_growth_constant, write_points_csv

Z = Coset(Lattice.integer(1))


def delta0(dim=1):
    return AtomicMeasure(np.zeros((1, dim)), [1.0], 1.0, dim=dim)


def g_test(x):
    return np.exp(1j * x[:, 0]) + x[:, 0] ** 2


def test_comb_example():
    nu = comb(Z, 2.5)
    assert nu.points[:, 0].tolist() == [-2, -1, 0, 1, 2]
    assert np.all(nu.masses == 1)


def test_translate_delta():
    t = 0.37
    assert pairing(translate(delta0(), [t]), g_test) == pytest.approx(g_test(np.array([[t]]))[0])


def test_translate_zero_is_identity():
    nu = comb(Z, 5.0)
    assert np.array_equal(translate(nu, [0.0]).points, nu.points)


def test_translate_composes():
    nu = comb(Coset(Lattice(np.array([[1.0, 0.5], [0.0, 1.0]]))), 4.0)
    s, t = np.array([0.3, -1.1]), np.array([2.2, 0.7])
    a = translate(translate(nu, s), t)
    b = translate(nu, s + t)
    assert np.max(np.abs(a.points - b.points)) <= 1e-14
    assert b.window_radius == pytest.approx(4.0 + np.linalg.norm(s + t))


def test_translation_bound_examples():
    assert translation_bound(comb(Z, 10.0)) == 2.0
    single = AtomicMeasure([[0.4]], [3.0], 1.0)
    assert translation_bound(single) == 3.0


def test_translation_bound_matches_sliding_oracle(rng):
    x = np.sort(rng.uniform(-8, 8, 30))
    w = rng.uniform(0.1, 2.0, 30)
    nu = AtomicMeasure(x, w, 8.0)
    centers = np.linspace(-10, 10, 20001)
    ref = sliding_max_1d(x, w, centers)
    got = translation_bound(nu)
    # the maximizing interval of this fixture is wider than the oracle's pitch
    assert got == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 7.0])
def test_translation_bound_homogeneous(alpha):
    nu = comb(Coset(Lattice.scaled(0.7)), 6.0)
    assert translation_bound(nu.scaled(alpha)) == pytest.approx(alpha * translation_bound(nu))


def test_translation_bound_translation_invariant_2d():
    nu = comb(Coset(Lattice.integer(2)), 6.0)
    a = translation_bound(nu)
    b = translation_bound(translate(nu, [0.25, 0.5]))
    assert a == pytest.approx(b)
    assert a == 4.0


def test_growth_fit_examples():
    nu = comb(Z, 20.0)
    C = growth_fit(nu)
    ref = growth_scan(nu.points, np.abs(nu.masses), np.linspace(0, 20, 4001))
    assert C <= 2.0
    assert C >= ref - 1e-12
    assert growth_fit(AtomicMeasure(np.zeros((0, 1)), [], 5.0)) == 0.0
    assert growth_fit(nu.scaled(2.0)) == pytest.approx(2 * C)


def test_growth_fit_needs_window():
    with pytest.raises(WindowError):
        growth_fit(comb(Z, 1.5))


def test_growth_fit_monotone_under_adding_atoms(rng):
    x = rng.uniform(-9, 9, 20)
    nu = from_points(x, window_radius=10.0)
    extra = from_points(np.concatenate([x, [9.5, -0.0001]]), window_radius=10.0)
    assert growth_fit(extra) >= growth_fit(nu)


def test_min_separation_examples():
    assert min_separation(comb(Z, 6.0)) == 1.0
    pts = np.concatenate([np.arange(-5, 6), np.arange(-5, 5) + 0.3])
    assert min_separation(from_points(pts)) == pytest.approx(0.3)
    assert min_separation(delta0()) == np.inf


def test_pairing_examples():
    assert pairing(delta0(), g_test) == g_test(np.zeros((1, 1)))[0]
    assert pairing(comb(Z, 2.5), lambda x: np.ones(len(x))) == 5
    nu = comb(Z, 4.0)
    assert pairing(nu.scaled(1.5 - 2j), g_test) == pytest.approx((1.5 - 2j) * pairing(nu, g_test))


def test_validation_errors():
    with pytest.raises(ValueError, match="distinct"):
        AtomicMeasure([0.0, 1e-12], [1, 1], 1.0)
    with pytest.raises(ValueError, match="sep_radius"):
        AtomicMeasure([0.0, 0.5], [1, 1], 1.0, sep_radius=0.8)
    with pytest.raises(WindowError):
        AtomicMeasure([0.0, 2.0], [1, 1], 1.0)


def test_serialization_round_trip():
    nu = comb(Coset(Lattice(np.array([[1.0, 0.5], [0.0, 0.9]])), [0.1, 0.2]), 3.0).scaled(1 - 1j)
    back = AtomicMeasure.loads(nu.dumps())
    assert np.array_equal(back.points, nu.points)
    assert np.array_equal(back.masses, nu.masses)
    assert back.sep_radius == nu.sep_radius


def test_csv_round_trip(tmp_path):
    pts = np.array([0.5, -1.25, np.sqrt(2)])
    path = tmp_path / "pts.csv"
    write_points_csv(path, pts)
    assert np.array_equal(read_points_csv(path)[:, 0], pts)


@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=2, max_size=25, unique=True))
def test_min_separation_matches_pairwise_oracle(xs):
    if min_distance(np.array(xs).reshape(-1, 1)) <= 1e-8:
        return
    nu = from_points(np.array(xs))
    assert min_separation(nu) == pytest.approx(min_distance(np.array(xs).reshape(-1, 1)), abs=1e-15)


@given(st.floats(0.2, 3.0), st.floats(-2, 2))
def test_uniform_growth_constant_covers_every_ball(spacing, t):
    nu = comb(Coset(Lattice.scaled(spacing)), 40.0)
    C = uniform_growth_constant(nu)
    for r in (0.5, 1.0, 3.0, 10.0):
        mass = np.sum(np.abs(nu.points[:, 0] - t) < r)
        assert mass <= C * (1 + r)
