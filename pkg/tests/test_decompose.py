import json

import numpy as np
import pytest

from quasiwiener import (
    Coset,
    DetectionFailure,
    ExpSum,
    Lattice,
    WindowError,
    detect_lattice_union,
    factor_measure,
    pair_from_comb,
    pair_from_points,
    spectral_parts,
    synthesize,
)
from quasiwiener.decompose import coset_labels, decompose, same_cosets
from synthetic import build, modulated_factor, mutual_coverage, one_dim_cases, true_masses

Z = Lattice.integer(1)
SQ2 = np.sqrt(2)


def z_sqrt2_points():
    P = np.concatenate([np.arange(-20, 21.0), SQ2 * np.arange(-15, 16) + 1 / 3])
    return P[np.abs(P) <= 20]


def test_detect_integers():
    found = detect_lattice_union(np.arange(-50, 51.0))
    assert len(found) == 1
    assert found[0].same_as(Coset(Z))


def test_detect_incommensurate_union():
    found = detect_lattice_union(z_sqrt2_points())
    truth = [Coset(Z), Coset(Lattice.scaled(SQ2), [1 / 3])]
    assert same_cosets(found, truth)
    assert sorted(abs(c.lattice.basis[0, 0]) for c in found) == pytest.approx([1.0, SQ2])


def test_detect_random_points_fails():
    rng = np.random.default_rng(11)
    with pytest.raises(DetectionFailure) as exc:
        detect_lattice_union(rng.uniform(0, 10, (200, 2)))
    assert exc.value.total == 200


def test_detect_two_dimensional_union():
    L = Lattice(np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]))
    hole = (L.basis[:, 0] + L.basis[:, 1]) / 3
    truth = [Coset(L), Coset(L, hole)]
    p = synthesize(truth, [None, None], 8.0, 1.0)
    found = detect_lattice_union(p.time.points)
    assert same_cosets(found, truth)
    assert mutual_coverage(found, p.time.points) == 0


def test_factor_comb():
    p = pair_from_comb(Coset(Z), 30.0, 300.0)
    dec = factor_measure(p, [Coset(Z)])
    F = dec.factors[0]
    assert len(F) == 1 and F.coeffs[0] == pytest.approx(1.0, abs=1e-8)
    assert dec.residual <= 1e-8


def test_factor_two_masses_over_integers():
    truth = ExpSum([2.5, -0.5], [0.0, 0.5])
    p = synthesize([Coset(Z)], [truth], 30.0, 300.0)
    assert np.allclose(p.time.masses, np.where(p.time.points[:, 0] % 2 == 0, 2.0, 3.0))
    dec = factor_measure(p, [Coset(Z)])
    assert dec.factors[0].allclose(truth, atol=1e-8)
    assert dec.residual <= 1e-8


def test_factor_random_two_cosets():
    rng = np.random.default_rng(7)
    case = one_dim_cases(rng, 2)[1]
    p, dec = build(case)
    assert dec.residual <= 1e-6
    assert np.max(np.abs(true_masses(case, p.time.points) - p.time.masses)) == 0


def test_factor_frequencies_in_fundamental_cell():
    rng = np.random.default_rng(8)
    case = one_dim_cases(rng, 3)[2]
    _, dec = build(case)
    for c, F in zip(dec.cosets, dec.factors):
        u = c.lattice.dual().coordinates(F.freqs)
        assert np.all((u >= 0) & (u < 1))


def test_factor_rejects_coverage_gap():
    p = pair_from_comb(Coset(Z), 20.0, 300.0)
    with pytest.raises(ValueError, match="coverage"):
        factor_measure(p, [Coset(Lattice.scaled(2.0))])


def test_factor_rejects_overlap():
    p = pair_from_comb(Coset(Z), 20.0, 300.0)
    with pytest.raises(ValueError, match="overlap"):
        factor_measure(p, [Coset(Z), Coset(Lattice.scaled(2.0))])


def test_factor_window_error_names_radius():
    p = pair_from_comb(Coset(Z), 20.0, 40.0)
    with pytest.raises(WindowError) as exc:
        factor_measure(p, [Coset(Z)])
    assert exc.value.required_radius > 40.0


def test_spectral_parts_of_comb():
    p = pair_from_comb(Coset(Z), 30.0, 300.0)
    dec = spectral_parts(p, factor_measure(p, [Coset(Z)]))
    nu = dec.spectral_parts[0]
    assert np.allclose(nu.points[:, 0], np.rint(nu.points[:, 0]))
    assert np.allclose(nu.masses, 1.0, atol=1e-8)
    assert dec.periods[0].same_as(Z)
    assert dec.periodicity_residual <= 1e-8


def test_spectral_parts_of_shifted_comb():
    c = Coset(Z, [1 / 3])
    p = pair_from_comb(c, 30.0, 300.0)
    dec = spectral_parts(p, factor_measure(p, [c]))
    nu = dec.spectral_parts[0]
    # the coset phase is carried by the reconstruction, so each part is plainly periodic
    assert np.allclose(nu.masses, 1.0, atol=1e-8)
    assert dec.periodicity_residual <= 1e-8
    assert dec.reconstruction_residual <= 1e-6


def test_spectral_parts_two_cosets():
    rng = np.random.default_rng(9)
    case = one_dim_cases(rng, 2)[1]
    p, dec = build(case)
    dec = spectral_parts(p, dec)
    assert dec.periodicity_residual <= 1e-8
    assert dec.reconstruction_residual <= 1e-6


def test_spectral_parts_window_error():
    p = pair_from_comb(Coset(Z), 30.0, 300.0)
    dec = factor_measure(p, [Coset(Z)])
    with pytest.raises(WindowError):
        spectral_parts(p, dec, radius=2.0)


def test_pair_from_points_and_decompose():
    pts = np.arange(-30, 31.0)
    p = pair_from_points(pts, [Coset(Z)], 300.0)
    assert p.time_reliable == 30.0
    dec = decompose(p)
    assert len(dec.cosets) == 1
    assert dec.residual <= 1e-8


def test_coset_labels():
    cs = [Coset(Lattice.scaled(2.0)), Coset(Lattice.scaled(2.0), [1.0])]
    lab = coset_labels(cs, np.array([[0.0], [1.0], [2.0], [0.5]]))
    assert lab.tolist() == [0, 1, 0, -1]


def test_decomposition_document():
    p = pair_from_comb(Coset(Z), 30.0, 300.0)
    dec = spectral_parts(p, factor_measure(p, [Coset(Z)]))
    doc = json.loads(dec.dumps())
    assert doc["term_counts"] == [1]
    assert len(doc["spectral_parts"]) == 1
    small = dec.to_dict(atom_radius=3.0)
    assert len(small["spectral_parts"][0]["atoms"]) == 7


def test_modulated_factor_mass_floor():
    rng = np.random.default_rng(4)
    for _ in range(20):
        F = modulated_factor(Lattice.integer(2), rng, 3)
        assert abs(F.coeffs[np.argmax(np.abs(F.coeffs))]) - (F.w_norm - np.max(np.abs(F.coeffs))) >= 0.1
