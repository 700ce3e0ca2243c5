"""Coherent sets of frequencies from measures with atomic transforms.

For a measure ``mu`` with uniformly discrete support and translation bounded
atomic transform, the atoms ``U`` with ``|mu(l)| >= eps`` and no other atom
within ``eps`` satisfy

    sup_t |sum c_l e(<t, l>)| <= 2 C sup_{|y| <= r} |sum c_l e(<y, l>)|

for every finite sum over ``U``. The constants come from an interpolating
function ``F_t = psi * (e(<., t>) h mu)`` with ``h`` an eps-inverse of
``g = psi * mu``: ``F_t(l) = e(<l, t>)`` on ``U``, the transform of ``F_t`` has
total mass at most ``C`` and mass below 1/2 outside ``B(0, r)``, uniformly in
``t``.

:func:`build_certificate` computes ``g``, ``h``, ``C`` and ``r`` and checks
the interpolation through the frequency side; :func:`verify_inequality`
tests the final inequality for given coefficients.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from ._util import as_points
from .errors import CertificationError, WindowError
from .expsum import ExpSum
from .fourier_pair import _tail_estimate, convolve_bump, multiply_pair, schwartz_mass_report
from .measure import AtomicMeasure, growth_fit, min_separation
from .testfunctions import BumpFunction
from .wiener_calculus import eps_inverse

#: Target tail mass of the interpolating transform outside ``B(0, r)``.
TAIL_TARGET = 0.5
#: Grid points per unit of the largest frequency in the sup estimates.
SAMPLES_PER_PERIOD = 16
#: Grid maxima refined by golden-section search.
N_POLISH = 8
#: Largest grid used for one sup estimate.
MAX_GRID = 4_000_000


def select_U(mu, eps):
    """Atoms with ``|mass| >= eps`` and no other atom closer than ``eps``.

    Both conditions are evaluated on the measure's window.
    """
    if not len(mu):
        return np.zeros((0, mu.dim))
    heavy = np.abs(mu.masses) >= eps * (1 - 1e-12)
    if len(mu) > 1:
        d, _ = cKDTree(mu.points).query(mu.points, k=2)
        isolated = d[:, 1] >= eps * (1 - 1e-12)
    else:
        isolated = np.ones(1, dtype=bool)
    return mu.points[heavy & isolated].copy()


class TranslationReport(NamedTuple):
    """Checks of the interpolating function for one translation ``t``."""

    t: tuple
    C: float
    r: float
    total_mass: float
    tail_mass: float
    interpolation_residual: float


@dataclass(frozen=True, eq=False)
class CoherenceCertificate:
    """Constants and ingredients of the coherence inequality for ``U``.

    Attributes
    ----------
    U : ndarray, shape (n, d)
        Selected atoms inside the time window.
    eps : float
    eta : float
        Support radius of the bump ``psi``.
    g, h : ExpSum
        ``psi * mu`` and its eps-inverse.
    C : float
        Bound on the total mass of the interpolating transform.
    r : float
        Radius beyond which that mass is below 1/2.
    tol : float
        Interpolation tolerance.
    spectrum : AtomicMeasure
        Transform of ``h mu`` on its reliable window.
    freq_radius : float
        Radius of ``spectrum`` kept for the interpolating transform.
    tail_bound : float
        Bound on the interpolation error from discarded frequencies and
        truncated sums.
    reports : list of TranslationReport
    """

    U: np.ndarray
    eps: float
    eta: float
    g: ExpSum
    h: ExpSum
    C: float
    r: float
    tol: float
    spectrum: AtomicMeasure
    freq_radius: float
    tail_bound: float
    reports: list

    @property
    def dim(self):
        return self.U.shape[1]

    @property
    def interpolation_residual(self):
        return max((rep.interpolation_residual for rep in self.reports), default=float("nan"))

    def to_dict(self, include_sums=True):
        doc = {
            "U": self.U.tolist(),
            "eps": self.eps,
            "psi": {"kind": "bump", "support_radius": self.eta, "dim": self.dim},
            "C": self.C,
            "r": self.r,
            "tol": self.tol,
            "freq_radius": self.freq_radius,
            "tail_bound": self.tail_bound,
            "reports": [
                {
                    "t": list(rep.t),
                    "C": rep.C,
                    "r": rep.r,
                    "total_mass": rep.total_mass,
                    "tail_mass": rep.tail_mass,
                    "interpolation_residual": rep.interpolation_residual,
                }
                for rep in self.reports
            ],
        }
        if include_sums:
            doc["g"] = self.g.to_dict()
            doc["h"] = self.h.to_dict()
        return doc


def default_eta(mu, eps):
    """``min(eps / 4, min_separation / 4)``."""
    return min(eps / 4, min_separation(mu) / 4)


def _interpolating_transform(spectrum, psi, t):
    """Atoms ``y + t`` with masses ``psi^(y + t) m(y)``."""
    y = spectrum.points + t
    return y, psi.transform(y) * spectrum.masses


def translation_report(cert, psi, t):
    """Recompute ``(C, r)`` and check the interpolating function for ``t``."""
    t = np.asarray(t, dtype=float).reshape(cert.dim)
    rep = schwartz_mass_report(psi.transform_view(), cert.spectrum, TAIL_TARGET, t_samples=-t[None, :])
    y, w = _interpolating_transform(cert.spectrum, psi, t)
    U = cert.U
    if len(U):
        F = np.exp(2j * np.pi * (U @ y.T)) @ w
        resid = float(np.max(np.abs(F - np.exp(2j * np.pi * (U @ t)))))
    else:
        resid = 0.0
    return TranslationReport(tuple(float(v) for v in t), rep.total_bound, rep.tail_radius, rep.direct_sup, rep.direct_tail_sup, resid)


def build_certificate(p, eps, t_samples=None, eta=None, tol=1e-6, u_radius=None):
    """Certificate of the coherence inequality for the atoms selected by ``eps``.

    Steps: ``g = psi * mu`` with a bump of radius ``eta < eps / 2``;
    ``h = eps_inverse(g, eps)``; the transform ``m`` of ``h mu`` from the
    pair; ``C`` and ``r`` from the uniform mass bounds for ``psi^`` against
    ``m``. For each sampled ``t`` the interpolating transform
    ``psi^(y) m(y - t)`` is summed at the atoms of ``U`` and compared with
    ``e(<l, t>)``.

    Parameters
    ----------
    p : FourierPair
        Atomic time side; its frequency window must exceed the span of ``h``
        plus the decay radius of ``psi^``.
    eps : float
    t_samples : array_like, shape (m, d), optional
        Translations to check (default: the origin).
    eta : float, optional
        Bump radius; :func:`default_eta` when omitted.
    tol : float
        Interpolation tolerance; truncations are charged against a tenth of it.
    u_radius : float, optional
        Only atoms of ``U`` within this radius are checked (default: the
        reliable time window).

    Raises
    ------
    ValueError
        If ``eta >= eps / 2``.
    WindowError
        If the frequency window is too small; ``required_radius`` says how
        large it must be.
    CertificationError
        If the eps-inverse cannot be certified or the interpolation fails.
    """
    if p.is_density:
        raise TypeError("time side must be atomic")
    if not eps > 0:
        raise ValueError("eps must be positive")
    mu = p.time
    d = mu.dim
    eta = default_eta(mu, eps) if eta is None else float(eta)
    if not 0 < eta < eps / 2:
        raise ValueError(f"bump radius {eta:g} must lie in (0, eps/2) = (0, {eps / 2:g})")
    psi = BumpFunction(eta, d)
    budget = tol / 10
    g = convolve_bump(psi, p, tol=budget / 4)
    comp = eps_inverse(g, eps, tail_budget=budget / (4 * max(1.0, float(np.abs(mu.masses).max()))))
    h = comp.g
    m_pair = multiply_pair(p, h)
    reliable = m_pair.freq_reliable
    # frequency radius where the discarded part of psi^ m drops below the budget
    R = None
    growth = growth_fit(m_pair.freq) if reliable >= 2 else float(np.abs(mu.masses).max()) * 4.0
    for trial in np.linspace(0.0, max(reliable, 0.0), 65)[1:] if reliable >= 2 else ():
        if _tail_estimate(psi, growth, trial) <= budget / 4:
            R = float(trial)
            break
    if R is None:
        need = max(reliable, 8.0)
        while _tail_estimate(psi, growth, need) > budget / 4:
            need *= 1.5
        raise WindowError(
            f"reliable spectrum radius {reliable:.4g} is too small for the bump tail",
            required_radius=need + p.freq_reliable - reliable + 1.0,
        )
    spectrum = m_pair.freq.restrict(R)
    tail = _tail_estimate(psi, growth, R) + g.tail_bound * float(np.abs(h.coeffs).sum()) + h.tail_bound * float(
        np.abs(mu.masses).max()
    )
    U = select_U(mu, eps)
    limit = p.time_reliable if u_radius is None else float(u_radius)
    U = U[np.linalg.norm(U, axis=1) <= limit]
    ts = np.zeros((1, d)) if t_samples is None else np.asarray(t_samples, dtype=float).reshape(-1, d)
    cert = CoherenceCertificate(U, float(eps), eta, g, h, np.nan, np.nan, float(tol), spectrum, R, float(tail), [])
    reports = [translation_report(cert, psi, t) for t in ts]
    C, r = reports[0].C, reports[0].r
    bad = [rep for rep in reports if rep.interpolation_residual > tol]
    if bad:
        raise CertificationError(
            f"interpolation residual {bad[0].interpolation_residual:.3g} exceeds {tol:g} at t = {bad[0].t}"
        )
    for rep in reports:
        if rep.total_mass > rep.C or rep.tail_mass >= TAIL_TARGET:
            raise CertificationError(f"mass bounds violated at t = {rep.t}")
    return CoherenceCertificate(U, float(eps), eta, g, h, C, r, float(tol), spectrum, R, float(tail), reports)


def certify(make_pair, eps, freq_radius, max_attempts=4, **kwargs):
    """:func:`build_certificate` on ``make_pair(freq_radius)``, widening on demand.

    ``make_pair`` maps a frequency radius to a FourierPair. On a
    WindowError the radius grows to the required one and the build retries.
    """
    R = float(freq_radius)
    for _ in range(max_attempts):
        try:
            return build_certificate(make_pair(R), eps, **kwargs)
        except WindowError as exc:
            if exc.required_radius is None or exc.required_radius <= R:
                raise
            R = float(exc.required_radius) * 1.05
    raise WindowError(f"no certificate within {max_attempts} window enlargements", required_radius=R)


# --- the inequality ---------------------------------------------------------------


def _exp_sum(freqs, coeffs, T):
    return np.exp(2j * np.pi * (T @ freqs.T)) @ coeffs


def _grid(center_half, pitch, dim, ball=None):
    n = int(np.ceil(2 * center_half / pitch)) + 1
    if n**dim > MAX_GRID:
        n = int(MAX_GRID ** (1 / dim))
    axis = np.linspace(-center_half, center_half, n)
    T = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    if ball is not None:
        T = T[np.linalg.norm(T, axis=1) <= ball]
    return T, axis[1] - axis[0] if n > 1 else pitch


def _polished_max(freqs, coeffs, T, step, ball=None):
    """Grid max of ``|S|``, refined by golden-section search along each axis."""
    if not len(T):
        return 0.0
    vals = np.abs(_exp_sum(freqs, coeffs, T))
    best = float(vals.max())
    d = T.shape[1]
    for i in np.argsort(-vals, kind="stable")[:N_POLISH]:
        x = T[i].copy()
        for axis in range(d):

            def neg(s, x=x, axis=axis):
                y = x.copy()
                y[axis] = s
                if ball is not None and np.linalg.norm(y) > ball:
                    return 0.0
                return -abs(_exp_sum(freqs, coeffs, y[None, :])[0])

            a, c = x[axis] - step, x[axis] + step
            b = x[axis]
            if neg(b) < min(neg(a), neg(c)):
                res = minimize_scalar(neg, bracket=(a, b, c), method="golden", tol=1e-10)
                if -res.fun > -neg(b):
                    x[axis] = res.x
        if ball is None or np.linalg.norm(x) <= ball:
            best = max(best, float(abs(_exp_sum(freqs, coeffs, x[None, :])[0])))
    return best


def verify_inequality(cert, freqs, coeffs, half_width=None, pitch=None, tol=None):
    """Check ``sup_t |S(t)| <= 2 C sup_{|y| <= r} |S(y)|`` for ``S = sum c_l e(<., l>)``.

    Both sups are grid maxima refined by golden-section search. The ``t``
    region is the cube of the given half-width, by default at least ``2 r + 10``
    and ten times the scale set by the closest pair of frequencies.

    Parameters
    ----------
    cert : CoherenceCertificate
    freqs : array_like, shape (k, d)
        Points of ``cert.U``.
    coeffs : array_like, shape (k,)

    Returns
    -------
    (lhs, rhs, ok)
    """
    F = as_points(freqs, cert.dim)
    c = np.asarray(coeffs, dtype=complex).ravel()
    if len(c) != len(F):
        raise ValueError(f"{len(F)} frequencies but {len(c)} coefficients")
    if len(F):
        dist, _ = cKDTree(cert.U).query(F)
        if np.any(dist > 1e-9):
            raise ValueError("coefficients must be supported on U")
    tol = cert.tol if tol is None else tol
    if not len(F):
        return 0.0, 0.0, True
    fmax = max(float(np.abs(F).max()), 1.0)
    pitch = 1.0 / (SAMPLES_PER_PERIOD * fmax) if pitch is None else float(pitch)
    if half_width is None:
        gap = min_separation(AtomicMeasure(F, np.ones(len(F)), float(np.linalg.norm(F, axis=1).max()) + 1.0))
        scale = 1.0 if not np.isfinite(gap) else max(1.0, 1.0 / gap)
        half_width = max(2 * cert.r + 10, 5 * scale)
    T, step = _grid(half_width, pitch, cert.dim)
    lhs = _polished_max(F, c, T, step)
    Y, ystep = _grid(cert.r, pitch, cert.dim, ball=cert.r)
    rhs = 2 * cert.C * _polished_max(F, c, Y, ystep, ball=cert.r)
    return float(lhs), float(rhs), bool(lhs <= rhs + tol)


def inequality_trials(cert, n_trials, rng, max_terms=8, radius=None, tol=None):
    """Random coefficient vectors on subsets of ``U``; rows ``(trial, lhs, rhs, ok)``."""
    U = cert.U
    if radius is not None:
        U = U[np.linalg.norm(U, axis=1) <= radius]
    if not len(U):
        raise ValueError("no atoms of U to draw from")
    rows = []
    for trial in range(n_trials):
        k = int(rng.integers(1, min(max_terms, len(U)) + 1))
        idx = np.sort(rng.choice(len(U), size=k, replace=False))
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        lhs, rhs, ok = verify_inequality(cert, U[idx], c, tol=tol)
        rows.append((trial, lhs, rhs, ok))
    return rows


__all__ = [
    "CoherenceCertificate",
    "TranslationReport",
    "build_certificate",
    "certify",
    "default_eta",
    "inequality_trials",
    "select_U",
    "translation_report",
    "verify_inequality",
]
