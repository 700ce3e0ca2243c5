"""Lattice-coset structure of uniformly discrete supports.

A measure whose support is a finite union of cosets ``l_j + L_j`` of full-rank
lattices factors as ``mu = sum_j F_j Delta_j`` with ``Delta_j`` the comb on the
j-th coset and ``F_j`` a finite exponential sum with frequencies in a
fundamental cell of the dual lattice ``L_j*``. The transform splits
accordingly into pieces that are periodic under ``L_j*`` once a phase
``e(-<l_j, y>)`` is removed.

The pipeline is :func:`detect_lattice_union` (points to cosets),
:func:`factor_measure` (pair and cosets to the factors ``F_j``) and
:func:`spectral_parts` (the periodic pieces of the transform).
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from ._util import dumps, lex_order, merge_points
from .errors import DetectionFailure, DimensionError, WindowError
from .expsum import ExpSum
from .fourier_pair import FourierPair, add_pairs, convolve_bump, multiply_pair, pair_from_comb
from .lattice import Coset, Lattice, enumerate_in_ball
from .measure import AtomicMeasure, min_separation
from .testfunctions import BumpFunction

#: Fraction of half the minimal separation used for the default bump radius.
BUMP_FRACTION = 0.9
#: Difference vectors kept as generator candidates per peeling round.
N_CANDIDATES = 12
#: Anchor points tried per peeling round.
N_ANCHORS = 4


# --- detection -------------------------------------------------------------------


def _coset_residual(coset, X):
    """Euclidean distance from each row of ``X`` to the nearest coset point."""
    L = coset.lattice
    c = L.coordinates(X - coset.shift)
    return np.linalg.norm((c - np.rint(c)) @ L.basis.T, axis=1)


class _Window:
    """Convex hull of the input, with inward offsets."""

    def __init__(self, points):
        self.dim = points.shape[1]
        self.radius = float(np.linalg.norm(points, axis=1).max())
        if self.dim == 1:
            self.lo, self.hi = float(points.min()), float(points.max())
            self.volume, self.perimeter = self.hi - self.lo, 2.0
        else:
            hull = ConvexHull(points)
            self.eq = hull.equations
            # in the plane scipy reports the area as "volume" and the perimeter as "area"
            self.volume, self.perimeter = float(hull.volume), float(hull.area)

    def guaranteed_count(self, lattice, margin):
        """Lower bound on the lattice points of any coset inside the window shrunk by ``margin``.

        Shrinking a convex body by ``r`` removes at most ``perimeter * r`` of
        its volume, and a body still holds a full cell around each point after
        one more shrink by the cell diameter.
        """
        inner = self.volume - self.perimeter * (margin + lattice.diameter())
        return max(inner, 0.0) / lattice.det_abs

    def inside(self, X, margin):
        if self.dim == 1:
            x = X[:, 0]
            return (x >= self.lo + margin) & (x <= self.hi - margin)
        return np.all(X @ self.eq[:, :-1].T + self.eq[:, -1] <= -margin, axis=1)


def _difference_candidates(Q, tol, n_keep=N_CANDIDATES):
    """Most frequent short difference vectors among ``Q``, sign-normalized."""
    m, d = Q.shape
    k = min(m - 1, 4 * 2**d)
    if k < 1:
        return np.zeros((0, d))
    _, idx = cKDTree(Q).query(Q, k=k + 1)
    diffs = (Q[idx[:, 1:]] - Q[:, None, :]).reshape(-1, d)
    # v and -v describe the same direction: first clear coordinate positive
    first = np.argmax(np.abs(diffs) > tol, axis=1)
    sign = np.sign(diffs[np.arange(len(diffs)), first])
    diffs = diffs * np.where(sign == 0, 1.0, sign)[:, None]
    diffs = diffs[np.linalg.norm(diffs, axis=1) > tol]
    reps, counts = merge_points(diffs, np.ones(len(diffs)), 10 * tol)
    counts = counts.real
    norms = np.linalg.norm(reps, axis=1)
    lex = np.empty(len(reps), dtype=np.int64)
    lex[lex_order(reps)] = np.arange(len(reps))
    order = np.lexsort((lex, norms, -counts))
    return reps[order[:n_keep]]


def _candidate_lattices(vectors, tol):
    d = vectors.shape[1] if len(vectors) else 0
    out = []
    if d == 1:
        for v in vectors:
            out.append(Lattice(v.reshape(1, 1)))
    else:
        for i in range(len(vectors)):
            for j in range(i + 1, len(vectors)):
                B = np.stack([vectors[i], vectors[j]], axis=1)
                if abs(np.linalg.det(B)) <= tol * np.linalg.norm(vectors[i]) * np.linalg.norm(vectors[j]) * 1e3:
                    continue
                out.append(Lattice(B).reduced())
    # drop duplicates
    uniq = []
    for L in out:
        if not any(L.same_as(U, 1e-8) for U in uniq):
            uniq.append(L)
    return uniq


def _refine(coset, X):
    """Least-squares basis and shift from points known to lie on the coset."""
    L = coset.lattice
    k = np.rint(L.coordinates(X - coset.shift))
    A = np.hstack([k, np.ones((len(k), 1))])
    sol, *_ = np.linalg.lstsq(A, X, rcond=None)
    basis = sol[:-1].T
    shift = sol[-1]
    try:
        refined = Coset(Lattice(basis).reduced(), shift)
    except Exception:
        return coset
    return refined if np.all(_coset_residual(refined, X) <= np.max(_coset_residual(coset, X)) + 1e-12) else coset


def detect_lattice_union(points, max_cosets=4, tol=1e-6):
    """Cosets ``l_j + L_j`` of full-rank lattices whose union is ``points``.

    Cosets are peeled greedily. Each round collects the most frequent short
    difference vectors of the remaining points, forms candidate lattices from
    them, anchors each at a few remaining points, and keeps the candidate that
    explains the most remaining points among those that are *complete*: every
    coset point inside the hull of the input, shrunk by the lattice's cell
    diameter, must be present. Accepted cosets are refined by least squares
    and normalized (reduced basis, shift in the fundamental cell).

    Parameters
    ----------
    points : array_like, shape (n, d), d <= 2
    max_cosets : int
    tol : float
        Absolute position tolerance.

    Raises
    ------
    DetectionFailure
        When no complete candidate remains or more than ``max_cosets`` would be
        needed. The exception records the cosets found so far.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    n, d = P.shape
    if d > 2:
        raise DimensionError("detection is implemented for d <= 2")
    if n < 2 ** d + 2:
        raise DetectionFailure("too few points to detect a lattice", total=n, unexplained=n)
    window = _Window(P)
    remaining = np.ones(n, dtype=bool)
    cosets = []
    min_inside = 2**d + 2
    while remaining.any():
        if len(cosets) >= max_cosets:
            raise DetectionFailure(
                f"{int(remaining.sum())} points left after {max_cosets} cosets",
                cosets,
                int(remaining.sum()),
                n,
            )
        Q = P[remaining]
        qtree = cKDTree(Q)
        cands = _candidate_lattices(_difference_candidates(Q, tol), tol)
        centroid = Q.mean(axis=0)
        anchors = Q[np.argsort(np.linalg.norm(Q - centroid, axis=1), kind="stable")[:N_ANCHORS]]
        best = None
        for ci, L in enumerate(cands):
            diam = L.diameter()
            if window.guaranteed_count(L, diam) > len(Q):
                # too fine to be complete: more coset points than remaining points
                continue
            for ai, a in enumerate(anchors):
                cs = Coset(L, a)
                try:
                    grid = enumerate_in_ball(cs, window.radius + diam)
                except Exception:
                    continue
                inner = grid[window.inside(grid, diam)] if len(grid) else grid
                if len(inner) < min_inside:
                    continue
                dist, _ = qtree.query(inner)
                if np.any(dist > tol * (1 + 1e-9 * np.linalg.norm(inner, axis=1))):
                    continue
                members = int(np.count_nonzero(_coset_residual(cs, Q) <= tol))
                key = (-members, L.det_abs, ci, ai)
                if best is None or key < best[0]:
                    best = (key, cs)
        if best is None:
            raise DetectionFailure(
                "no complete lattice coset explains the remaining points",
                cosets,
                int(remaining.sum()),
                n,
            )
        cs = best[1]
        idx = np.flatnonzero(remaining)
        on = _coset_residual(cs, P[idx]) <= tol
        cs = _refine(cs, P[idx[on]])
        on = _coset_residual(cs, P[idx]) <= tol
        remaining[idx[on]] = False
        cosets.append(cs)
    return cosets


def coset_labels(cosets, points, tol=1e-6):
    """Index of the coset containing each point (-1 for none, -2 for several)."""
    P = np.asarray(points, dtype=float).reshape(len(points), -1)
    hits = np.stack([_coset_residual(c, P) <= tol for c in cosets], axis=1) if cosets else np.zeros((len(P), 0), bool)
    lab = np.where(hits.sum(axis=1) == 1, np.argmax(hits, axis=1), -1)
    lab[hits.sum(axis=1) > 1] = -2
    return lab


def same_cosets(found, truth, tol=1e-6):
    """Whether two coset lists agree up to order and basis choice."""
    if len(found) != len(truth):
        return False
    used = set()
    for c in found:
        match = [i for i, t in enumerate(truth) if i not in used and c.same_as(t, tol)]
        if not match:
            return False
        used.add(match[0])
    return True


# --- factorization ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Factorization ``mu = sum_j F_j Delta_j`` and the split of its transform.

    Attributes
    ----------
    cosets : list of Coset
    factors : list of ExpSum
        ``F_j``, with frequencies in the fundamental cell of ``L_j*``.
    residual : float
        Largest ``|F_j(l) - mu(l)|`` over atoms in the reliable time window.
    bump_radius : float
    tail_bound : float
        W-norm error carried by the smoothed measure ``psi * mu``.
    spectral_parts : list of AtomicMeasure
        ``nu_j``, filled by :func:`spectral_parts`.
    periods : list of Lattice
        ``L_j*``.
    periodicity_residual, reconstruction_residual : float
    spectral_radius : float
        Radius on which the spectral checks were done.
    """

    cosets: list
    factors: list
    residual: float
    bump_radius: float
    tail_bound: float
    spectral_parts: list = field(default_factory=list)
    periods: list = field(default_factory=list)
    periodicity_residual: float = float("nan")
    reconstruction_residual: float = float("nan")
    spectral_radius: float = float("nan")

    def period_length(self):
        """Length of the longest reduced generator over all dual lattices."""
        return max(float(np.max(np.linalg.norm(c.lattice.dual().reduced().basis, axis=0))) for c in self.cosets)

    def to_dict(self, atom_radius=None):
        """Document form; ``atom_radius`` limits the listed spectral atoms."""
        doc = {
            "cosets": [c.to_dict() for c in self.cosets],
            "factors": [f.to_dict() for f in self.factors],
            "term_counts": [len(f) for f in self.factors],
            "residual": self.residual,
            "bump_radius": self.bump_radius,
            "tail_bound": self.tail_bound,
        }
        if self.spectral_parts:
            listed = self.spectral_parts
            if atom_radius is not None and atom_radius < self.spectral_radius:
                listed = [nu.restrict(atom_radius) for nu in listed]
            doc["spectral_radius"] = self.spectral_radius
            doc["listed_radius"] = min(self.spectral_radius, np.inf if atom_radius is None else atom_radius)
            doc["atom_counts"] = [len(nu) for nu in self.spectral_parts]
            doc["periodicity_residual"] = self.periodicity_residual
            doc["reconstruction_residual"] = self.reconstruction_residual
            doc["periods"] = [P.to_dict() for P in self.periods]
            doc["spectral_parts"] = [nu.to_dict() for nu in listed]
        return doc

    def dumps(self):
        return dumps(self.to_dict())


def default_bump(p, fraction=BUMP_FRACTION):
    """Bump of radius ``fraction * min_separation / 2``."""
    return BumpFunction(fraction * min_separation(p.time) / 2, p.dim)


def factor_measure(p, cosets, psi=None, tol=1e-6, coset_tol=1e-6):
    """Factors ``F_j`` with ``F_j(l) = mu(l)`` on the j-th coset.

    With ``g = psi * mu`` and ``psi`` supported in a ball narrower than half
    the atom spacing, ``g(l) = mu(l)`` at every atom. Folding the frequencies
    of ``g`` into the fundamental cell of ``L_j*``, with the phase that makes
    the result agree with ``g`` on ``l_j + L_j``, gives ``F_j``.

    Raises
    ------
    ValueError
        If the bump is too wide, or an atom lies on no coset or on several.
    WindowError
        If the frequency window cannot certify ``tol`` (from :func:`convolve_bump`).
    """
    if p.is_density:
        raise TypeError("time side must be atomic")
    mu = p.time
    sep = min_separation(mu)
    psi = default_bump(p) if psi is None else psi
    if not psi.support_radius < sep / 2:
        raise ValueError(f"bump radius {psi.support_radius:g} is not below half the separation {sep:g}")
    lab = coset_labels(cosets, mu.points, coset_tol)
    if np.any(lab == -1):
        raise ValueError(f"coset coverage gap: {int(np.sum(lab == -1))} atoms lie on no coset")
    if np.any(lab == -2):
        raise ValueError(f"cosets overlap: {int(np.sum(lab == -2))} atoms lie on several")
    g = convolve_bump(psi, p, tol=tol)
    factors = [g.reduce_mod_dual(c.lattice, shift=c.shift) for c in cosets]
    inner = np.linalg.norm(mu.points, axis=1) <= p.time_reliable
    residual = 0.0
    for j, F in enumerate(factors):
        sel = inner & (lab == j)
        if sel.any():
            residual = max(residual, float(np.max(np.abs(F(mu.points[sel]) - mu.masses[sel]))))
    return Decomposition(list(cosets), factors, residual, psi.support_radius, g.tail_bound)


def _match_residual(a_pts, a_m, b_pts, b_m, radius, tol=1e-7):
    """Largest mass difference between two atom lists inside ``B(0, radius)``.

    Atoms are collected slightly beyond the radius and compared slightly
    inside it, so rounding at the boundary cannot orphan an atom.
    """
    def inside(pts, r):
        return np.linalg.norm(pts, axis=1) <= r

    sa, sb = inside(a_pts, radius + 10 * tol), inside(b_pts, radius + 10 * tol)
    pts = np.concatenate([a_pts[sa], b_pts[sb]])
    m = np.concatenate([a_m[sa], -b_m[sb]])
    if not len(pts):
        return 0.0
    pts, diff = merge_points(pts, m, tol)
    keep = inside(pts, radius - 10 * tol)
    return float(np.max(np.abs(diff[keep]))) if keep.any() else 0.0


def _periodic_part(coset, F, dual, radius):
    """``nu`` with mass ``b |det|^{-1} e(<a, l>)`` at ``a + k``, ``k`` in the dual lattice.

    This is ``e(<l, y>)`` times the transform of ``F Delta`` for
    ``F = sum b e(<a, x>)`` and ``Delta`` the comb on ``l + L``; distinct
    residues ``a`` give disjoint atom sets, so nothing needs merging except
    points that rounding placed on both sides of a cell edge.
    """
    d = coset.dim
    if not len(F):
        return AtomicMeasure(np.zeros((0, d)), np.zeros(0), radius, dim=d)
    reach = radius + float(np.max(np.linalg.norm(F.freqs, axis=1)))
    K = enumerate_in_ball(Coset(dual), reach + 1e-9)
    masses = F.coeffs * np.exp(2j * np.pi * (F.freqs @ coset.shift)) / coset.lattice.det_abs
    Y = (F.freqs[:, None, :] + K[None, :, :]).reshape(-1, d)
    M = np.repeat(masses, len(K))
    keep = np.linalg.norm(Y, axis=1) <= radius
    Y, M = merge_points(Y[keep], M[keep], 1e-9)
    return AtomicMeasure(Y, M, radius, dim=d)


def spectral_parts(p, dec, radius=None, periods_required=3):
    """Fill in ``nu_j = e(<l_j, y>) * transform(F_j Delta_j)`` and check it.

    Each ``nu_j`` is periodic under ``L_j*``; ``sum_j e(-<l_j, y>) nu_j``
    reproduces the transform of ``mu``. The parts are assembled from the
    terms of ``F_j`` and the dual lattice; periodicity is then measured by
    matching each part with its translates, and the sum is compared with the
    pair's own frequency side.

    Parameters
    ----------
    radius : float, optional
        Frequency radius of the computation; defaults to the smaller of the
        pair's reliable radius and enough room for ``periods_required + 3``
        periods of every dual lattice.

    Raises
    ------
    WindowError
        If the window holds fewer than ``periods_required`` periods.
    """
    duals = [c.lattice.dual().reduced() for c in dec.cosets]
    longest = max(float(np.max(np.linalg.norm(D.basis, axis=0))) for D in duals)
    cell = max(D.diameter() for D in duals)
    if radius is None:
        radius = min(p.freq_reliable, (periods_required + 3) * longest + 2 * cell)
    if radius < periods_required * longest:
        raise WindowError(
            f"frequency window {radius:.4g} holds fewer than {periods_required} periods of length {longest:.4g}",
            required_radius=periods_required * longest + 2 * cell,
        )
    parts = [_periodic_part(c, F, D, radius) for c, F, D in zip(dec.cosets, dec.factors, duals)]
    reliable = radius
    per = 0.0
    for nu, D in zip(parts, duals):
        for v in D.generators:
            for s in (v, -v):
                r = reliable - np.linalg.norm(s)
                per = max(per, _match_residual(nu.points + s, nu.masses, nu.points, nu.masses, r))
    total_pts = np.concatenate([nu.points for nu in parts])
    total_m = np.concatenate(
        [nu.masses * np.exp(-2j * np.pi * (nu.points @ c.shift)) for nu, c in zip(parts, dec.cosets)]
    )
    rec_radius = min(reliable, p.freq_reliable)
    rec = _match_residual(total_pts, total_m, p.freq.points, p.freq.masses, rec_radius)
    return replace(
        dec,
        spectral_parts=parts,
        periods=[c.lattice.dual() for c in dec.cosets],
        periodicity_residual=per,
        reconstruction_residual=rec,
        spectral_radius=rec_radius,
    )


# --- forward construction ------------------------------------------------------------


def synthesize(cosets, factors, time_radius, freq_radius):
    """Pair of ``sum_j F_j Delta_j`` built from the comb transforms.

    ``factors`` may contain ``None`` for unit masses.
    """
    pair = None
    for c, F in zip(cosets, factors):
        piece = pair_from_comb(c, time_radius, freq_radius)
        if F is not None:
            piece = multiply_pair(piece, F)
        pair = piece if pair is None else add_pairs(pair, piece)
    return pair


def pair_from_points(points, cosets, freq_radius, masses=None):
    """Pair for unit (or given) masses on ``points`` whose support is ``cosets``.

    The transform is assembled from the comb transforms of the cosets, so it
    is only meaningful when the points are the cosets restricted to a window;
    the reliable time radius is the inradius of the points' hull about 0.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1)
    d = P.shape[1]
    m = np.ones(len(P)) if masses is None else np.asarray(masses)
    window = _Window(P)
    if d == 1:
        inrad = min(-window.lo, window.hi)
    else:
        inrad = float(np.min(-window.eq[:, -1]))
    time = AtomicMeasure(P, m, float(np.linalg.norm(P, axis=1).max()), dim=d)
    freq = None
    for c in cosets:
        piece = pair_from_comb(c, 1.0, freq_radius).freq
        if freq is None:
            freq = piece
        else:
            pts = np.concatenate([freq.points, piece.points])
            ms = np.concatenate([freq.masses, piece.masses])
            pts, ms = merge_points(pts, ms, 1e-9)
            keep = np.abs(ms) > 1e-15
            freq = AtomicMeasure(pts[keep], ms[keep], freq_radius, dim=d)
    step = {"op": "points", "params": {"cosets": len(cosets), "freq_radius": freq_radius}, "tail_charge": 0.0}
    return FourierPair(time, freq, max(inrad, 0.0), float(freq_radius), (step,))


def decompose(p, max_cosets=4, tol=1e-6, detect_tol=1e-6, psi=None, spectral_radius=None):
    """Detection, factorization and spectral split in one call."""
    cosets = detect_lattice_union(p.time.points, max_cosets, detect_tol)
    dec = factor_measure(p, cosets, psi, tol)
    return spectral_parts(p, dec, spectral_radius)


__all__ = [
    "Decomposition",
    "coset_labels",
    "decompose",
    "default_bump",
    "detect_lattice_union",
    "factor_measure",
    "pair_from_points",
    "same_cosets",
    "spectral_parts",
    "synthesize",
]
