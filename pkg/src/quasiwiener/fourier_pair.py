"""Measures bundled with their atomic Fourier transforms.

A :class:`FourierPair` holds a time side (an :class:`AtomicMeasure`, or a
density given by an :class:`ExpSum`) and a frequency side (an atomic measure),
linked by ``freq(phi) = time(phi_hat)`` for test functions ``phi``. Each side
has a reliable radius: inside it the finite data agree with the infinite
object, up to the charges recorded in ``provenance``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.signal import fftconvolve

from ._util import dumps, loads, merge_points
from .errors import BoundViolation, DimensionError, WindowError
from .expsum import ExpSum
from .lattice import Coset, enumerate_in_ball
from .measure import AtomicMeasure, comb, growth_fit, min_separation, uniform_growth_constant
from .testfunctions import BumpFunction, required_radius
from .wiener_calculus import find_basis

#: Pairwise products above this count trigger the search for a common basis.
AUTO_BASIS_PRODUCTS = 200_000
#: Frequency atoms (nearest the origin) used to fit that basis.
AUTO_BASIS_SAMPLE = 64

#: Test functions are treated as supported where they exceed this.
SUPPORT_TOL = 1e-16


@dataclass(frozen=True, eq=False)
class FourierPair:
    """A measure and its atomic Fourier transform.

    Parameters
    ----------
    time : AtomicMeasure or ExpSum
        ``ExpSum`` stands for the density ``f(x) dx``.
    freq : AtomicMeasure
    time_reliable, freq_reliable : float
        Radii inside which each side is complete.
    provenance : tuple of dict
        Construction steps ``{op, params, tail_charge}``.
    """

    time: object
    freq: AtomicMeasure
    time_reliable: float
    freq_reliable: float
    provenance: tuple = field(default=())

    def __post_init__(self):
        if self.time.dim != self.freq.dim:
            raise DimensionError(f"time side has dimension {self.time.dim}, freq side {self.freq.dim}")

    @property
    def dim(self):
        return self.freq.dim

    @property
    def is_density(self):
        return isinstance(self.time, ExpSum)

    @property
    def tail_charge(self):
        """Accumulated mass-error bound from the construction steps."""
        return float(sum(s.get("tail_charge", 0.0) for s in self.provenance))

    def reliable_freq(self):
        """Frequency side restricted to its reliable ball."""
        if np.isfinite(self.freq_reliable) and self.freq_reliable < self.freq.window_radius:
            return self.freq.restrict(self.freq_reliable)
        return self.freq

    def _step(self, op, params, tail_charge=0.0):
        return self.provenance + ({"op": op, "params": params, "tail_charge": float(tail_charge)},)

    def to_dict(self):
        if self.is_density:
            time = {"kind": "density", **self.time.to_dict()}
        else:
            time = {"kind": "measure", **self.time.to_dict()}
        return {
            "dim": self.dim,
            "time": time,
            "freq": self.freq.to_dict(),
            "time_reliable": self.time_reliable,
            "freq_reliable": self.freq_reliable,
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, doc):
        for key in ("time", "freq"):
            if key not in doc:
                raise ValueError(f"pair document is missing field {key!r}")
        t = doc["time"]
        time = ExpSum.from_dict(t) if t.get("kind") == "density" else AtomicMeasure.from_dict(t)
        freq = AtomicMeasure.from_dict(doc["freq"])
        return cls(
            time,
            freq,
            float(doc.get("time_reliable", getattr(time, "window_radius", np.inf))),
            float(doc.get("freq_reliable", freq.window_radius)),
            tuple(doc.get("provenance", ())),
        )

    def dumps(self):
        return dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(loads(text))


def _atoms_of(f):
    """Frequency-side measure of the density ``f(x) dx``."""
    R = max(1.0, f.max_frequency())
    return AtomicMeasure(f.freqs, f.coeffs, R, dim=f.dim)


def pair_from_expsum(f):
    """Pair of the density ``f(x) dx``: one unit mass per term, at its frequency."""
    return FourierPair(f, _atoms_of(f), np.inf, np.inf, ({"op": "expsum", "params": {"terms": len(f)}, "tail_charge": f.tail_bound},))


def pair_from_comb(coset, time_radius, freq_radius):
    """Comb on ``L + a`` and its transform on the dual lattice.

    The transform has mass ``|det A|^{-1} e(-<y, a>)`` at each ``y`` in ``L*``.
    """
    if not (time_radius > 0 and freq_radius > 0):
        raise ValueError("radii must be positive")
    L = coset.lattice
    time = comb(coset, time_radius)
    dual = L.dual()
    y = enumerate_in_ball(Coset(dual), freq_radius)
    masses = np.exp(-2j * np.pi * (y @ coset.shift)) / L.det_abs
    freq = AtomicMeasure(y, masses, freq_radius, dual.shortest_vector_length(), dim=L.dim)
    step = {"op": "comb", "params": {"coset": coset.to_dict(), "time_radius": time_radius, "freq_radius": freq_radius}, "tail_charge": 0.0}
    return FourierPair(time, freq, float(time_radius), float(freq_radius), (step,))


def add_pairs(p, q):
    """Sum of two pairs; windows are the smaller of the two."""
    if p.is_density != q.is_density:
        raise TypeError("cannot add a density pair and a measure pair")
    if p.is_density:
        time = p.time + q.time
    else:
        pts = np.concatenate([p.time.points, q.time.points])
        m = np.concatenate([p.time.masses, q.time.masses])
        time = _merged_measure(pts, m, max(p.time.window_radius, q.time.window_radius), p.dim)
    fp = np.concatenate([p.freq.points, q.freq.points])
    fm = np.concatenate([p.freq.masses, q.freq.masses])
    freq = _merged_measure(fp, fm, max(p.freq.window_radius, q.freq.window_radius), p.dim)
    return FourierPair(
        time,
        freq,
        min(p.time_reliable, q.time_reliable),
        min(p.freq_reliable, q.freq_reliable),
        p.provenance + q.provenance + ({"op": "add", "params": {}, "tail_charge": 0.0},),
    )


def scale_pair(p, alpha):
    a = complex(alpha)
    time = p.time * a if p.is_density else p.time.scaled(a)
    prov = tuple(dict(s, tail_charge=abs(a) * s.get("tail_charge", 0.0)) for s in p.provenance)
    return FourierPair(time, p.freq.scaled(a), p.time_reliable, p.freq_reliable, prov)


def _merged_measure(points, masses, window, dim, tol=1e-9):
    pts, m = merge_points(points.reshape(-1, dim), masses, tol)
    keep = m != 0
    return AtomicMeasure(pts[keep], m[keep], max(window, float(np.linalg.norm(pts, axis=1).max()) if len(pts) else window), dim=dim)


def _shift_sum_coords(atom_coords, atom_masses, term_coords, term_coeffs):
    """``sum_n c_n (atoms shifted by term n)`` in integer coordinates, via FFT convolution.

    Returns ``(coords, masses)`` restricted to the exact Minkowski-sum support.
    """
    k = atom_coords.shape[1]
    lo_a = atom_coords.min(axis=0)
    lo_t = term_coords.min(axis=0)
    shape_a = tuple(atom_coords.max(axis=0) - lo_a + 1)
    shape_t = tuple(term_coords.max(axis=0) - lo_t + 1)
    A = np.zeros(shape_a, dtype=complex)
    T = np.zeros(shape_t, dtype=complex)
    np.add.at(A, tuple((atom_coords - lo_a).T), atom_masses)
    np.add.at(T, tuple((term_coords - lo_t).T), term_coeffs)
    IA = np.zeros(shape_a)
    IT = np.zeros(shape_t)
    IA[tuple((atom_coords - lo_a).T)] = 1.0
    IT[tuple((term_coords - lo_t).T)] = 1.0
    support = fftconvolve(IA, IT) > 0.5
    vals = fftconvolve(A, T)
    idx = np.argwhere(support)
    coords = idx + lo_a + lo_t
    return coords.reshape(-1, k), vals[tuple(idx.T)]


def _auto_basis(atoms, freqs):
    """Basis for ``atoms`` and ``freqs`` fitted on a sample, or None.

    Only bases with linearly independent generators are returned; the others
    would make coordinate lookup slower than merging pairwise sums.
    """
    order = np.argsort(np.linalg.norm(atoms, axis=1), kind="stable")[:AUTO_BASIS_SAMPLE]
    try:
        basis = find_basis(np.vstack([freqs, atoms[order]]))
        G = basis.generators
        if basis.rank == 0 or basis.rank > basis.dim or np.linalg.matrix_rank(G) < basis.rank:
            return None
        return basis, basis.express(atoms), basis.express(freqs)
    except ValueError:
        return None


def multiply_pair(p, g, basis=None):
    """Pair of ``g * mu`` for ``g`` in W.

    The time masses become ``g(l) c_l``; the transform becomes
    ``sum_n c_n (mu_hat shifted by gamma_n)``. The reliable frequency radius
    shrinks by the largest ``|gamma_n|``.

    Parameters
    ----------
    basis : FrequencyBasis, optional
        When both the frequency atoms and the frequencies of ``g`` are integer
        combinations of ``basis.generators``, the shifted sum is computed as a
        convolution of coefficient arrays, which is much faster than merging
        all pairwise sums. For large inputs a basis is fitted automatically
        and used when every point has integer coordinates in it.
    """
    if g.dim != p.dim:
        raise DimensionError(f"multiplier has dimension {g.dim}, pair has {p.dim}")
    shrink = g.max_frequency()
    fmass = p.freq.masses
    charge = g.tail_bound * (float(np.abs(fmass).max()) if len(p.freq) else 0.0)
    if p.is_density:
        time = p.time * g
        time_rel = p.time_reliable
    else:
        time = p.time.with_masses(p.time.masses * g(p.time.points)) if len(p.time) else p.time
        time_rel = p.time_reliable
    if not len(g) or not len(p.freq):
        fpts = np.zeros((0, p.dim))
        fm = np.zeros(0, dtype=complex)
    if basis is None and len(g) * len(p.freq) > AUTO_BASIS_PRODUCTS:
        fitted = _auto_basis(p.freq.points, g.freqs)
    elif basis is not None and len(g) and len(p.freq):
        fitted = basis, basis.express(p.freq.points), basis.express(g.freqs)
    else:
        fitted = None
    if not len(g) or not len(p.freq):
        pass
    elif fitted is not None:
        basis, ac, tc = fitted
        coords, fm = _shift_sum_coords(ac, fmass, tc, g.coeffs)
        fpts = coords @ basis.generators
    else:
        fpts = (p.freq.points[:, None, :] + g.freqs[None, :, :]).reshape(-1, p.dim)
        fm = np.multiply.outer(fmass, g.coeffs).ravel()
    if len(fm):
        fpts, fm = merge_points(fpts, fm, 1e-9)
    keep = fm != 0
    fpts, fm = fpts[keep], fm[keep]
    window = p.freq.window_radius + shrink
    freq = AtomicMeasure(fpts, fm, window, dim=p.dim)
    step = {"op": "multiply", "params": {"terms": len(g), "max_frequency": shrink}, "tail_charge": charge}
    return FourierPair(time, freq, time_rel, p.freq_reliable - shrink, p.provenance + (step,))


def _tail_estimate(psi, growth, radius):
    d = psi.dim
    return psi.decay_majorant(radius, d + 1) * growth * (d + 1) / (1 + radius)


def convolve_bump(psi, p, tol=1e-8, drop_tol=None):
    """``psi * nu`` as an exponential sum, for ``nu`` the time side of ``p``.

    The terms are ``psi_hat(gamma) nu_hat({gamma})`` over the reliable
    frequency atoms. Frequencies beyond the reliable radius ``R`` contribute at
    most ``sup_{r >= R} |psi_hat(r)| (1 + r)^{d+1} * C (d + 1) / (1 + R)``,
    where ``C`` is the growth constant of the frequency side; this and the
    tabulation error of ``psi_hat`` make up the ``tail_bound``.

    Raises
    ------
    WindowError
        When the tail estimate exceeds ``tol``; ``required_radius`` names the
        frequency radius that would suffice.
    """
    if psi.dim != p.dim:
        raise DimensionError(f"bump has dimension {psi.dim}, pair has {p.dim}")
    R = min(p.freq_reliable, p.freq.window_radius)
    nu = p.freq.restrict(R) if R < p.freq.window_radius else p.freq
    growth = growth_fit(nu) if nu.window_radius >= 2 else float(np.abs(nu.masses).sum())
    # density pairs are complete: nothing lies beyond the last frequency
    tail = _tail_estimate(psi, growth, R) if np.isfinite(p.freq_reliable) else 0.0
    if tail > tol:
        need = required_radius(lambda r: _tail_estimate(psi, growth, r), tol, start=R)
        raise WindowError(
            f"frequency window {R:g} leaves a tail of {tail:.3g} > {tol:.3g}; need radius {need:.4g}",
            required_radius=need,
        )
    if not len(nu):
        return ExpSum.empty(p.dim, tail_bound=tail)
    r = np.linalg.norm(nu.points, axis=1)
    interp = float(np.sum(psi.local_error(r) * np.abs(nu.masses)))
    coeffs = psi.transform_radial(r) * nu.masses
    kw = {} if drop_tol is None else {"drop_tol": drop_tol}
    return ExpSum(coeffs, nu.points, tail_bound=tail + interp + p.tail_charge * psi.decay_majorant(0.0, 0), dim=p.dim, **kw)


def _quadrature_pairing(f, phi, tol):
    """``int f(x) phi_hat(x) dx`` by the trapezoid rule.

    Both factors are smooth and ``phi_hat`` decays fast, so the rule is
    spectrally accurate once the grid resolves the highest frequency present.
    """
    d = f.dim
    R = phi.transform_radius(tol)
    band = f.max_frequency() + phi.effective_radius(tol)
    h = 1.0 / (2.0 * band + 1.0)
    n = int(np.ceil(R / h))
    ax = np.arange(-n, n + 1) * h
    grid = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return complex(np.sum(f(grid) * phi.transform(grid)) * h**d)


def verify_pairing(p, phi, tol=SUPPORT_TOL):
    """``|time(phi_hat) - freq(phi)|`` for a test function ``phi``.

    Raises
    ------
    WindowError
        When the effective support of ``phi`` or ``phi_hat`` leaves the
        reliable windows.
    """
    if phi.dim != p.dim:
        raise DimensionError("test function dimension differs from the pair")
    r_phi = phi.effective_radius(tol)
    if r_phi > p.freq_reliable:
        raise WindowError(f"test function needs frequency radius {r_phi:.4g}", required_radius=r_phi)
    freq_side = complex(np.sum(p.freq.masses * phi(p.freq.points))) if len(p.freq) else 0j
    if p.is_density:
        time_side = _quadrature_pairing(p.time, phi, tol)
    else:
        r_hat = phi.transform_radius(tol)
        if r_hat > p.time_reliable:
            raise WindowError(f"test function transform needs time radius {r_hat:.4g}", required_radius=r_hat)
        time_side = complex(np.sum(p.time.masses * phi.transform(p.time.points))) if len(p.time) else 0j
    return abs(time_side - freq_side)


class PoissonSums(NamedTuple):
    lattice_sum: complex
    dual_sum: complex
    residual: float


def poisson_sums(phi, lattice, radius=8.0, dual_radius=None, tol=SUPPORT_TOL):
    """Both sides of ``sum_L phi = |det A|^{-1} sum_{L*} phi_hat``, truncated to balls."""
    dual_radius = radius if dual_radius is None else dual_radius
    if phi.effective_radius(tol) > radius:
        raise WindowError(f"radius {radius:g} too small for the test function", required_radius=phi.effective_radius(tol))
    if phi.transform_radius(tol) > dual_radius:
        raise WindowError(
            f"dual radius {dual_radius:g} too small for the transform", required_radius=phi.transform_radius(tol)
        )
    pts = enumerate_in_ball(Coset(lattice), radius)
    dual = lattice.dual()
    ys = enumerate_in_ball(Coset(dual), dual_radius)
    lhs = complex(np.sum(phi(pts)))
    rhs = complex(np.sum(phi.transform(ys))) / lattice.det_abs
    return PoissonSums(lhs, rhs, abs(lhs - rhs))


def poisson_check(phi, lattice, radius=8.0, dual_radius=None):
    """Residual of the Poisson summation formula for ``phi`` over ``lattice``."""
    return poisson_sums(phi, lattice, radius, dual_radius).residual


class MassReport(NamedTuple):
    total_bound: float
    tail_radius: float
    direct_sup: float
    direct_tail_sup: float


def schwartz_mass_report(phi, nu, eps, t_samples=None):
    """Uniform bounds on ``sum_l |phi(l - t)| |c_l|`` over translations ``t``.

    With ``N_t(r) = |nu|(B(t, r)) <= C (1 + r)^d`` uniformly in ``t`` and
    ``|phi(x)| <= C' (1 + |x|)^{-d-1}``, integration by parts gives the total
    bound ``C C' (d + 1)`` and the tail bound ``C C' (d + 1) / (1 + r)``
    beyond radius ``r``. The growth constant ``C`` comes from the translation
    bound by a covering argument.

    Parameters
    ----------
    phi : test function with ``radial_bound`` and ``weighted_sup``
    nu : AtomicMeasure
    eps : float
        Target tail mass.
    t_samples : array_like, shape (m, d), optional
        Translations for the direct cross-check (default: the origin).

    Returns
    -------
    MassReport
        ``total_bound``, ``tail_radius`` and the direct sums over the samples.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = nu.dim
    C = uniform_growth_constant(nu)
    Cp = phi.weighted_sup(d + 1)
    total = C * Cp * (d + 1)
    r_eps = max(total / eps * (1 + 1e-12) - 1.0, 0.0)
    ts = np.zeros((1, d)) if t_samples is None else np.asarray(t_samples, dtype=float).reshape(-1, d)
    direct, direct_tail = 0.0, 0.0
    w = np.abs(nu.masses)
    for t in ts:
        x = nu.points - t
        vals = np.abs(np.asarray(phi(x))) * w if len(nu) else np.zeros(0)
        far = np.linalg.norm(x, axis=1) > r_eps
        direct = max(direct, float(vals.sum()))
        direct_tail = max(direct_tail, float(vals[far].sum()))
    return MassReport(float(total), float(r_eps), direct, direct_tail)


def mass_sup_bound(p, psi):
    """Upper bound for ``sup |c_l|`` from the frequency side alone."""
    return schwartz_mass_report(psi.transform_view(), p.reliable_freq(), 1.0).total_bound


def mass_sup_check(p, psi, tol=1e-8):
    """Largest error of recovering the time masses from the frequency side.

    With ``psi`` supported in a ball narrower than the atom spacing,
    ``c_l = sum_y psi_hat(y) e(<l, y>) nu_hat({y})``; the right side is
    evaluated at every atom. Also checks ``max |c_l|`` against
    :func:`mass_sup_bound`.

    Raises
    ------
    BoundViolation
        If ``max |c_l|`` exceeds the bound.
    """
    if p.is_density:
        raise TypeError("time side must be atomic")
    if psi.support_radius >= min_separation(p.time):
        raise ValueError("bump support must be narrower than the atom spacing")
    g = convolve_bump(psi, p, tol=tol)
    nu = p.time.restrict(p.time_reliable) if p.time_reliable < p.time.window_radius else p.time
    residual = float(np.max(np.abs(g(nu.points) - nu.masses))) if len(nu) else 0.0
    bound = mass_sup_bound(p, psi)
    top = float(np.abs(p.time.masses).max()) if len(p.time) else 0.0
    if top > bound:
        raise BoundViolation(f"max |mass| {top:.6g} exceeds the frequency-side bound {bound:.6g}")
    return residual


__all__ = [
    "FourierPair",
    "BumpFunction",
    "MassReport",
    "PoissonSums",
    "add_pairs",
    "convolve_bump",
    "mass_sup_bound",
    "mass_sup_check",
    "multiply_pair",
    "pair_from_comb",
    "pair_from_expsum",
    "poisson_check",
    "poisson_sums",
    "scale_pair",
    "schwartz_mass_report",
    "verify_pairing",
]
