"""Forward-constructed lattice-union measures with known factors."""

from dataclasses import dataclass

import numpy as np

from quasiwiener import Coset, ExpSum, Lattice, factor_measure, synthesize
from quasiwiener.errors import WindowError


@dataclass
class Case:
    name: str
    cosets: list
    factors: list
    time_radius: float


def modulated_factor(L, rng, n_terms=2):
    """``b_0 + sum b_s e(<alpha_s, .>)`` with ``alpha_s`` in the fundamental cell of ``L*``.

    ``|b_0|`` exceeds the other moduli by at least 0.1, so every mass has
    modulus at least 0.1.
    """
    D = L.dual()
    d = L.dim
    alphas = rng.uniform(0.05, 0.95, (n_terms, d)) @ D.basis.T
    others = rng.uniform(0.1, 0.4, n_terms) * np.exp(2j * np.pi * rng.uniform(0, 1, n_terms))
    b0 = (np.abs(others).sum() + rng.uniform(0.1, 0.6)) * np.exp(2j * np.pi * rng.uniform(0, 1))
    return ExpSum(np.concatenate([[b0], others]), np.vstack([np.zeros((1, d)), alphas]), dim=d)


def one_dim_cases(rng, n):
    cases = []
    for i in range(n):
        kind = i % 4
        a = float(rng.uniform(0.6, 1.6))
        L = Lattice.scaled(a)
        if kind == 0:
            cosets = [Coset(L, [rng.uniform(0, a)])]
        elif kind == 1:
            s = rng.uniform(0.15, 0.4) * a
            cosets = [Coset(L), Coset(L, [s])]
        elif kind == 2:
            s1 = rng.uniform(0.15, 0.35) * a
            s2 = rng.uniform(0.55, 0.85) * a
            cosets = [Coset(L), Coset(L, [s1]), Coset(L, [s2])]
        else:
            cosets = [Coset(Lattice.scaled(2 * a)), Coset(L, [rng.uniform(0.2, 0.8) * a])]
        factors = [modulated_factor(c.lattice, rng, int(rng.integers(1, 4))) for c in cosets]
        radius = float(min(120.0, 600 * a / (2 * len(cosets))))
        cases.append(Case(f"1d-{kind}-{i}", cosets, factors, radius))
    return cases


def two_dim_cases(rng):
    hexa = Lattice(np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]))
    hole = (hexa.basis[:, 0] + hexa.basis[:, 1]) / 3
    oblique = Lattice(np.array([[1.1, 0.3], [0.2, 0.9]]))
    return [
        Case("honeycomb", [Coset(hexa), Coset(hexa, hole)], [modulated_factor(hexa, rng, 1), None], 14.0),
        Case("oblique", [Coset(oblique, [0.2, 0.1])], [modulated_factor(oblique, rng, 2)], 16.0),
        Case("square-pair", [Coset(Lattice.integer(2)), Coset(Lattice.integer(2), [1 / 3, 1 / 3])], [None, modulated_factor(Lattice.integer(2), rng, 1)], 12.0),
    ]


def true_masses(case, points):
    """Masses of the synthetic measure at ``points`` from the ground truth."""
    out = np.zeros(len(points), dtype=complex)
    for c, F in zip(case.cosets, case.factors):
        on = c.contains(points, 1e-9)
        out[on] = 1.0 if F is None else F(points[on])
    return out


def build(case, freq_radius=None, tol=1e-6, max_attempts=4):
    """Synthesize the pair, widening the frequency window until factoring succeeds.

    Without ``freq_radius`` a small probe window is tried first; its
    WindowError names the radius to use.
    """
    sep = min(c.lattice.shortest_vector_length() for c in case.cosets)
    R = 20.0 / sep if freq_radius is None else freq_radius
    for _ in range(max_attempts):
        p = synthesize(case.cosets, case.factors, case.time_radius, R)
        try:
            return p, factor_measure(p, case.cosets, tol=tol)
        except WindowError as exc:
            if exc.required_radius is None or exc.required_radius <= R:
                raise
            R = exc.required_radius * 1.05
    raise WindowError("no frequency window found", required_radius=R)


def mutual_coverage(found, points, tol=1e-6):
    """Every point on exactly one coset, and every coset point near the center is a point.

    Returns the number of violations.
    """
    from quasiwiener.decompose import coset_labels
    from quasiwiener.lattice import enumerate_in_ball

    P = np.asarray(points, dtype=float)
    lab = coset_labels(found, P, tol)
    bad = int(np.sum(lab < 0))
    inner = 0.6 * float(np.min(np.max(np.abs(P), axis=0)))
    from scipy.spatial import cKDTree

    tree = cKDTree(P)
    for c in found:
        q = enumerate_in_ball(c, inner)
        d, _ = tree.query(q)
        bad += int(np.sum(d > tol))
    return bad
