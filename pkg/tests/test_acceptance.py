"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS`` or ``FAIL`` line with the measured value
and wall time, then asserts at the stated tolerance and time budget.
"""

import itertools
import time

import numpy as np
import pytest

from oracles import neumann_reciprocal
from quasiwiener import (
    BumpFunction,
    Coset,
    DetectionFailure,
    ExpSum,
    Gaussian,
    HolomorphicSymbol,
    Lattice,
    comb,
    compose,
    detect_lattice_union,
    eps_inverse,
    inequality_trials,
    certify,
    mass_sup_check,
    pair_from_comb,
    poisson_check,
    schwartz_mass_report,
    spectral_parts,
    synthesize,
    torus_residuals,
    verify_pairing,
)
from quasiwiener.decompose import same_cosets
from synthetic import build, mutual_coverage, one_dim_cases, true_masses, two_dim_cases

HEX = Lattice(np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]))


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail} ({elapsed:.2f} s)")

    return emit


def test_poisson_identity(report):
    catalog = []
    for sigma in (0.5, 1.0, 2.0):
        for L in (Lattice.integer(1), Lattice.scaled(2.0), Lattice.scaled(0.7)):
            catalog += [(Gaussian.standard(1, sigma), L), (Gaussian.standard(1, sigma, [1 / 3]), L)]
        for L in (Lattice.integer(2), HEX):
            catalog += [(Gaussian.standard(2, sigma), L), (Gaussian.standard(2, sigma, [0.25, -0.4]), L)]
    t0 = time.perf_counter()
    worst = max(poisson_check(phi, L, 8.0) for phi, L in catalog)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    report(1, ok, f"Poisson residual {worst:.2e} over {len(catalog)} cases", dt)
    assert worst <= 1e-10
    assert dt < 1.0


def random_integer_lattice(rng, d):
    while True:
        B = rng.integers(-3, 4, (d, d)).astype(float)
        if abs(np.linalg.det(B)) >= 1:
            return Lattice(B)


def test_pairing_on_shifted_combs(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(10):
        d = 1 + i % 2
        L = random_integer_lattice(rng, d)
        shift = rng.uniform(-1, 1, d)
        p = pair_from_comb(Coset(L, shift), 12.0, 12.0)
        for _ in range(3):
            phi = Gaussian.standard(d, rng.uniform(0.6, 1.5), rng.uniform(-1, 1, d))
            worst = max(worst, verify_pairing(p, phi))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 10.0
    report(2, ok, f"pairing residual {worst:.2e} over 10 lattices", dt)
    assert worst <= 1e-6
    assert dt < 10.0


def neumann_case(rng, rank):
    gens = np.array([1.0]) if rank == 1 else np.array([1.0, rng.uniform(1.2, 2.2) * np.sqrt(2)])
    pool = [c for c in itertools.product(range(-2, 3), repeat=rank) if any(c)]
    n = int(rng.integers(rank, 5))
    while True:
        coords = np.array([pool[i] for i in rng.choice(len(pool), n, replace=False)])
        if np.linalg.matrix_rank(coords) == rank:
            break
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c *= rng.uniform(0.3, 0.9) / np.abs(c).sum()
    return gens, coords, c


def test_reciprocal_against_neumann_series(report):
    rng = np.random.default_rng(102)
    x = np.linspace(-30, 30, 2001).reshape(-1, 1)
    t0 = time.perf_counter()
    coeff_err, grid_err = 0.0, 0.0
    for i in range(20):
        rank = 1 + i % 2
        gens, coords, c = neumann_case(rng, rank)
        f = ExpSum(np.concatenate([[1.0], c]), np.concatenate([[0.0], coords @ gens]))
        g = compose(HolomorphicSymbol.reciprocal(), f).g
        S, off = neumann_reciprocal(c, coords, rank, 197)
        idx = np.argwhere(np.abs(S) > 1e-14)
        table = {round(float((k - off) @ gens), 9): S[tuple(k)] for k in idx}
        err = max(abs(a - table.pop(round(float(fr[0]), 9), 0)) for a, fr in zip(g.coeffs, g.freqs))
        err = max(err, max((abs(v) for v in table.values()), default=0.0))
        coeff_err = max(coeff_err, err)
        grid_err = max(grid_err, float(np.max(np.abs(f(x) * g(x) - 1))))
    dt = time.perf_counter() - t0
    ok = coeff_err <= 1e-8 and grid_err <= 1e-8 and dt < 30.0
    report(3, ok, f"coefficient error {coeff_err:.2e}, grid |fg-1| {grid_err:.2e}", dt)
    assert coeff_err <= 1e-8
    assert grid_err <= 1e-8
    assert dt < 30.0


def test_eps_inverse_contract(report):
    rng = np.random.default_rng(103)
    cases = []
    for a in np.linspace(0.8, 1.0, 6):
        cases.append(ExpSum([1.0, a * np.exp(2j * np.pi * rng.uniform())], [0.0, rng.uniform(0.5, 2.0)]))
    for _ in range(3):
        lam = rng.uniform(0.5, 2.0)
        b = rng.uniform(0.3, 0.5)
        cases.append(ExpSum([1.0, b, 1.0 - b], [0.0, lam, 2 * lam]))
    # rank two with an exact zero where both characters equal -1
    cases.append(ExpSum([1.0, 0.5, 0.5], [0.0, 1.0, np.sqrt(2)]))
    t0 = time.perf_counter()
    worst = 0.0
    for f in cases:
        comp = eps_inverse(f, 0.5, tol=1e-7)
        worst = max(worst, *torus_residuals(f, comp, 0.5))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 30.0
    report(4, ok, f"worst on/off-set residual {worst:.2e} over {len(cases)} functions", dt)
    assert worst <= 1e-6
    assert dt < 30.0


def test_decomposition_round_trip(report):
    rng = np.random.default_rng(104)
    cases = one_dim_cases(rng, 17) + two_dim_cases(rng)
    t0 = time.perf_counter()
    failures = []
    stats = {"factor": 0.0, "periodicity": 0.0, "atoms": 0, "min_mass": np.inf}
    for case in cases:
        p, dec = build(case)
        pts = p.time.points
        stats["atoms"] = max(stats["atoms"], len(pts))
        stats["min_mass"] = min(stats["min_mass"], float(np.abs(p.time.masses).min()))
        found = detect_lattice_union(pts)
        if not same_cosets(found, case.cosets) or mutual_coverage(found, pts):
            failures.append(case.name)
        dec = spectral_parts(p, dec)
        stats["factor"] = max(stats["factor"], dec.residual)
        stats["periodicity"] = max(stats["periodicity"], dec.periodicity_residual)
        if np.max(np.abs(true_masses(case, pts) - p.time.masses)) > 1e-12:
            failures.append(case.name + " (synthesis)")
    dt = time.perf_counter() - t0
    ok = not failures and stats["factor"] <= 1e-6 and stats["periodicity"] <= 1e-8 and dt < 60.0
    report(
        5,
        ok,
        f"{len(cases)} measures, factor residual {stats['factor']:.2e}, periodicity {stats['periodicity']:.2e}, "
        f"max atoms {stats['atoms']}, min |mass| {stats['min_mass']:.3f}, failures {failures}",
        dt,
    )
    assert not failures
    assert stats["atoms"] <= 2000 and stats["min_mass"] >= 0.1
    assert stats["factor"] <= 1e-6
    assert stats["periodicity"] <= 1e-8
    assert dt < 60.0


def test_coherence_inequality(report):
    Z = Lattice.integer(1)
    examples = {
        "comb(Z)": ([Coset(Z)], [None]),
        "two cosets": ([Coset(Lattice.scaled(2.0)), Coset(Lattice.scaled(2.0), [0.5])], [None, ExpSum.constant(0.75)]),
    }
    rng = np.random.default_rng(105)
    ts = np.vstack([[0.0], rng.uniform(-5, 5, (9, 1))])
    t0 = time.perf_counter()
    lines, ok_all = [], True
    for name, (cosets, factors) in examples.items():
        cert = certify(lambda R: synthesize(cosets, factors, 30.0, R), 0.5, 600.0, t_samples=ts, tol=1e-6)
        rows = inequality_trials(cert, 100, rng, 8, 10.0, 1e-6)
        bad = sum(lhs > rhs + 1e-6 for _, lhs, rhs, _ in rows)
        constants = {(rep.C, rep.r) for rep in cert.reports}
        ok = bad == 0 and cert.interpolation_residual <= 1e-6 and len(constants) == 1 and len(cert.reports) == 10
        ok_all &= ok
        lines.append(
            f"{name}: C={cert.C:.4g} r={cert.r:.4g} interpolation {cert.interpolation_residual:.1e} violations {bad}/100"
        )
    dt = time.perf_counter() - t0
    report(6, ok_all and dt < 60.0, "; ".join(lines), dt)
    assert ok_all
    assert dt < 60.0


def test_algebra_properties(report):
    rng = np.random.default_rng(106)

    def random_sum(d):
        n = int(rng.integers(1, 6))
        return ExpSum(rng.standard_normal(n) + 1j * rng.standard_normal(n), rng.uniform(-3, 3, (n, d)), dim=d)

    t0 = time.perf_counter()
    checks, failed = 0, 0
    for i in range(200):
        d = 1 + i % 2
        f, g = random_sum(d), random_sum(d)
        x = rng.uniform(-10, 10, (16, d))
        failed += not (f * g).w_norm <= f.w_norm * g.w_norm * (1 + 1e-12)
        failed += not np.max(np.abs((f * g)(x) - f(x) * g(x))) <= 1e-12 * max(1.0, f.w_norm * g.w_norm)
        failed += not np.max(np.abs((f + g)(x) - f(x) - g(x))) <= 1e-12 * max(1.0, f.w_norm + g.w_norm)
        gamma = rng.uniform(-2, 2, d)
        failed += not abs(f.modulate(gamma).w_norm - f.w_norm) <= 1e-12 * f.w_norm
        L = random_integer_lattice(rng, d) if i % 3 else Lattice(rng.uniform(0.5, 1.5) * np.eye(d))
        shift = rng.uniform(-1, 1, d)
        pts = L.basis @ rng.integers(-5, 6, (d, 8)) + shift[:, None]
        h = f.reduce_mod_dual(L, shift)
        failed += not np.max(np.abs(h(pts.T) - f(pts.T))) <= 1e-12 * max(1.0, f.w_norm)
        checks += 5
    dt = time.perf_counter() - t0
    ok = checks >= 1000 and failed == 0 and dt < 10.0
    report(7, ok, f"{checks} checks, {failed} failed", dt)
    assert checks >= 1000 and failed == 0
    assert dt < 10.0


def test_mass_bounds(report):
    rng = np.random.default_rng(107)
    configs = [
        (Gaussian.standard(1, 1.0), comb(Coset(Lattice.integer(1)), 60.0), 0.1),
        (Gaussian.standard(1, 0.5), comb(Coset(Lattice.scaled(0.5), [0.2]), 40.0), 0.05),
        (Gaussian.standard(1, 2.0, [1.0]), comb(Coset(Lattice.scaled(1.7)), 80.0), 0.2),
        (Gaussian.standard(1, 1.0), synthesize([Coset(Lattice.integer(1))], [ExpSum([2.0, 0.5], [0.0, 0.3])], 50.0, 1.0).time, 0.1),
        (Gaussian.standard(2, 1.0), comb(Coset(Lattice.integer(2)), 15.0), 0.1),
        (Gaussian.standard(2, 0.7), comb(Coset(HEX, [0.1, 0.2]), 12.0), 0.1),
        (Gaussian.standard(2, 1.3, [0.5, 0.0]), comb(Coset(Lattice.scaled(0.8, 2)), 12.0), 0.5),
        (BumpFunction(0.4).transform_view(), comb(Coset(Lattice.integer(1)), 60.0), 0.5),
        (BumpFunction(0.3, 2).transform_view(), comb(Coset(Lattice.integer(2)), 12.0), 1.0),
        (Gaussian.standard(1, 1.0), comb(Coset(Lattice.scaled(3.0), [1.0]), 90.0), 0.01),
    ]
    pairs = [
        (pair_from_comb(Coset(Lattice.integer(1)), 20.0, 400.0), BumpFunction(0.3)),
        (pair_from_comb(Coset(Lattice.scaled(2.0), [0.5]), 20.0, 200.0), BumpFunction(0.6)),
    ]
    t0 = time.perf_counter()
    dominated = 0
    for phi, nu, eps in configs:
        radius = nu.window_radius
        ts = rng.uniform(-radius / 3, radius / 3, (20, nu.dim))
        rep = schwartz_mass_report(phi, nu, eps, ts)
        dominated += rep.total_bound >= rep.direct_sup
    residual = max(mass_sup_check(p, psi, tol=1e-7) for p, psi in pairs)
    dt = time.perf_counter() - t0
    ok = dominated == len(configs) and residual <= 1e-6 and dt < 10.0
    report(8, ok, f"bound dominates in {dominated}/{len(configs)}, mass reconstruction {residual:.2e}", dt)
    assert dominated == len(configs)
    assert residual <= 1e-6
    assert dt < 10.0


def test_random_points_negative_control(report):
    rng = np.random.default_rng(108)
    t0 = time.perf_counter()
    failures = 0
    for i in range(100):
        d = 1 + i % 2
        try:
            detect_lattice_union(rng.uniform(0, 10, (200, d)))
        except DetectionFailure:
            failures += 1
    dt = time.perf_counter() - t0
    ok = failures >= 95 and dt < 30.0
    report(9, ok, f"structured failure in {failures}/100 trials", dt)
    assert failures >= 95
    assert dt < 30.0
