"""Test functions with known Fourier transforms.

Convention: ``phi_hat(y) = int phi(x) exp(-2 pi i <x, y>) dx``.

:class:`Gaussian` has a closed-form transform. :class:`BumpFunction` is the
standard compactly supported mollifier; its transform has no closed form and is
tabulated once per dimension for unit support, then rescaled.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn
from scipy.special import j0, jv

from ._util import as_points, as_vector, is_single_point

#: Tabulation limits for the unit-support bump transform.
TABLE_RHO_MAX = 150.0
CHEB_INTERVAL = 0.5
CHEB_DEGREE = 23
# envelope constant is fitted on [ENVELOPE_FROM, TABLE_RHO_MAX]
ENVELOPE_FROM = 30.0
_GL_NODES = 16


def _radial_majorant_sup(values_fn, r_lo, power, r_hi):
    """``sup_{r >= r_lo} values_fn(r) (1 + r)^power`` for a unimodal tail on ``[r_lo, r_hi]``."""
    r = np.linspace(r_lo, r_hi, 4001)
    v = values_fn(r) * (1 + r) ** power
    i = int(np.argmax(v))
    a, b = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
    if b > a:
        res = minimize_scalar(lambda s: -values_fn(s) * (1 + s) ** power, bounds=(a, b), method="bounded")
        return float(max(v[i], -res.fun))
    return float(v[i])


@dataclass(frozen=True)
class Gaussian:
    """``amplitude * exp(-pi |x - center|^2 / sigma^2)`` on ``R^dim``.

    Its transform is ``amplitude * sigma^d * exp(-pi sigma^2 |y|^2) * e(-<center, y>)``.
    """

    sigma: float = 1.0
    center: tuple = (0.0,)
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in as_vector(self.center)))

    @classmethod
    def standard(cls, dim=1, sigma=1.0, center=None, amplitude=1.0):
        return cls(sigma, tuple(np.zeros(dim)) if center is None else tuple(as_vector(center, dim)), amplitude)

    @property
    def dim(self):
        return len(self.center)

    def scaled(self, alpha):
        return Gaussian(self.sigma, self.center, self.amplitude * alpha)

    def __call__(self, x):
        single = is_single_point(x, self.dim)
        pts = as_points(x, self.dim)
        r2 = np.sum((pts - np.asarray(self.center)) ** 2, axis=1)
        out = self.amplitude * np.exp(-np.pi * r2 / self.sigma**2)
        return complex(out[0]) if single else out

    def transform(self, y):
        single = is_single_point(y, self.dim)
        pts = as_points(y, self.dim)
        s = self.sigma
        out = (
            self.amplitude
            * s**self.dim
            * np.exp(-np.pi * s**2 * np.sum(pts**2, axis=1))
            * np.exp(-2j * np.pi * (pts @ np.asarray(self.center)))
        )
        return complex(out[0]) if single else out

    def effective_radius(self, tol):
        """Radius outside which ``|phi| < tol``."""
        a = abs(self.amplitude)
        c = float(np.linalg.norm(self.center))
        if a <= tol:
            return c
        return c + self.sigma * np.sqrt(np.log(a / tol) / np.pi)

    def transform_radius(self, tol):
        """Radius outside which ``|phi_hat| < tol``."""
        a = abs(self.amplitude) * self.sigma**self.dim
        if a <= tol:
            return 0.0
        return np.sqrt(np.log(a / tol) / np.pi) / self.sigma

    def radial_bound(self, r):
        """``sup_{|x| = r} |phi(x)|``."""
        c = float(np.linalg.norm(self.center))
        gap = np.maximum(np.asarray(r, dtype=float) - c, 0.0)
        return abs(self.amplitude) * np.exp(-np.pi * gap**2 / self.sigma**2)

    def weighted_sup(self, power):
        """``sup_x |phi(x)| (1 + |x|)^power``."""
        c = float(np.linalg.norm(self.center))
        hi = c + self.sigma * (3 + np.sqrt(power)) + 10
        return _radial_majorant_sup(self.radial_bound, 0.0, power, hi) * (1 + 1e-12)

    def to_dict(self):
        a = complex(self.amplitude)
        return {"kind": "gaussian", "sigma": self.sigma, "center": list(self.center), "re": a.real, "im": a.imag}


def _profile(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    ri = r[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri))
    return out


def _gl_panels(n_panels):
    """Gauss-Legendre nodes and weights on [0, 1] split into equal panels."""
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + (x[None, :] + 1) * h[:, None] / 2).ravel()
    weights = (w[None, :] * h[:, None] / 2).ravel()
    return nodes, weights


def _radial_kernel(dim, rho, r):
    """Kernel ``k(rho, r)`` with ``psi_hat(rho) = int_0^1 psi(r) k(rho, r) dr``."""
    if dim == 1:
        return 2.0 * np.cos(2 * np.pi * np.multiply.outer(rho, r))
    if dim == 2:
        return 2 * np.pi * j0(2 * np.pi * np.multiply.outer(rho, r)) * r[None, :]
    nu = dim / 2 - 1
    rho = np.asarray(rho, dtype=float)
    arg = 2 * np.pi * np.multiply.outer(rho, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        k = 2 * np.pi * (rho[:, None] ** (-nu)) * jv(nu, arg) * r[None, :] ** (dim / 2)
    zero = rho == 0
    if zero.any():
        area = 2 * np.pi ** (dim / 2) / gamma_fn(dim / 2)
        k[zero] = area * r[None, :] ** (dim - 1)
    return k


def _unit_transform(dim, rho):
    """Quadrature values of the unit-support bump transform at radii ``rho``.

    The number of panels grows with ``rho`` so that every oscillation period
    gets about twenty nodes; blocks of radii share a panel layout.
    """
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(rho.shape)
    block = 2000
    for s in range(0, rho.size, block):
        rb = rho[s : s + block]
        n_panels = int(np.ceil((rb.max() + 20.0) / 1.2))
        r, w = _gl_panels(n_panels)
        wf = w * _profile(r)
        out[s : s + block] = _radial_kernel(dim, rb, r) @ wf
    return out


@dataclass(frozen=True)
class _UnitTable:
    coeffs: np.ndarray  # (n_intervals, CHEB_DEGREE + 1) Chebyshev coefficients
    errors: np.ndarray  # measured interpolation error per interval
    maxabs: np.ndarray  # max |psi_hat| per interval (node values)
    envelope_const: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.minimum((s / CHEB_INTERVAL).astype(np.int64), self.coeffs.shape[0] - 1)
        x = 2.0 * (s - idx * CHEB_INTERVAL) / CHEB_INTERVAL - 1.0
        c = self.coeffs[idx]
        # Clenshaw recurrence, vectorized over points
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        for k in range(c.shape[1] - 1, 0, -1):
            b1, b2 = 2 * x * b1 - b2 + c[:, k], b1
        return x * b1 - b2 + c[:, 0]

    def interval(self, s):
        return np.minimum((np.asarray(s) / CHEB_INTERVAL).astype(np.int64), self.errors.size - 1)


@lru_cache(maxsize=8)
def _unit_table(dim):
    n_int = int(round(TABLE_RHO_MAX / CHEB_INTERVAL))
    m = CHEB_DEGREE + 1
    t = np.cos(np.pi * (np.arange(m) + 0.5) / m)
    left = np.arange(n_int) * CHEB_INTERVAL
    nodes = left[:, None] + (t[None, :] + 1) * CHEB_INTERVAL / 2
    vals = _unit_transform(dim, nodes.ravel()).reshape(n_int, m)
    coeffs = np.polynomial.chebyshev.chebfit(t, vals.T, CHEB_DEGREE).T
    table = _UnitTable(coeffs, np.zeros(n_int), np.zeros(n_int), 0.0)
    fine = np.linspace(0.0, 1.0, 65)
    fs = (left[:, None] + fine[None, :] * CHEB_INTERVAL * (1 - 1e-12)).ravel()
    maxabs = np.abs(table(fs)).reshape(n_int, -1).max(axis=1)
    # sampled maxima can miss a crest by a relative 3e-4 at this density;
    # taking neighbours too also covers the decay across an interval
    padded = np.pad(maxabs, 1, mode="edge")
    maxabs = 1.001 * np.maximum.reduce([padded[:-2], padded[1:-1], padded[2:]])
    # error probes strictly between the nodes
    probe = np.linspace(-0.97, 0.97, 5)
    ps = (left[:, None] + (probe[None, :] + 1) * CHEB_INTERVAL / 2).ravel()
    err = np.abs(table(ps) - _unit_transform(dim, ps)).reshape(n_int, -1).max(axis=1)
    # the quadrature itself carries roundoff of order 1e-15
    err = 4.0 * np.maximum(err, 1e-15)
    # |psi_hat(s)| <= K exp(-sqrt(2 pi s)) for s >= ENVELOPE_FROM; the ratio decays
    # polynomially, so its maximum over the fitted range bounds it further out
    sel = left >= ENVELOPE_FROM
    ratio = (maxabs[sel] + err[sel]) / np.exp(-np.sqrt(2 * np.pi * (left[sel] + CHEB_INTERVAL)))
    K = 2.0 * float(ratio[: max(1, sel.sum() // 3)].max())
    return _UnitTable(coeffs, err, maxabs, K)


class BumpFunction:
    """The mollifier ``exp(1 - 1 / (1 - |x / eta|^2))`` supported in ``B(0, eta)``.

    Even, equal to 1 at the origin and identically zero outside the open
    ball. The transform is radial and computed from a tabulation for
    ``eta = 1`` through ``psi_hat_eta(y) = eta^d psi_hat_1(eta y)``.

    Parameters
    ----------
    support_radius : float
    dim : int
    """

    def __init__(self, support_radius, dim=1):
        if not support_radius > 0:
            raise ValueError("support_radius must be positive")
        self.support_radius = float(support_radius)
        self.dim = int(dim)
        self._table = _unit_table(self.dim)

    def __repr__(self):
        return f"BumpFunction(support_radius={self.support_radius:g}, dim={self.dim})"

    @property
    def eta(self):
        return self.support_radius

    def __call__(self, x):
        single = is_single_point(x, self.dim)
        pts = as_points(x, self.dim)
        out = _profile(np.linalg.norm(pts, axis=1) / self.support_radius)
        return float(out[0]) if single else out

    @property
    def table_radius(self):
        """Frequency radius covered by the tabulation."""
        return TABLE_RHO_MAX / self.support_radius

    @property
    def interp_error(self):
        """Largest tabulation error of :meth:`transform` over all radii."""
        return float(self._table.errors.max()) * self.support_radius**self.dim

    def local_error(self, rho):
        """Tabulation error bound at radii ``rho`` (zero beyond the table)."""
        eta = self.support_radius
        s = np.abs(np.asarray(rho, dtype=float)) * eta
        out = self._table.errors[self._table.interval(s)] * eta**self.dim
        return np.where(s <= TABLE_RHO_MAX, out, 0.0)

    def transform_radial(self, rho):
        """``psi_hat`` at radii ``rho``; zero beyond :attr:`table_radius` (see :meth:`envelope`)."""
        eta = self.support_radius
        s = np.abs(np.asarray(rho, dtype=float)) * eta
        out = np.zeros(s.shape)
        inside = s <= TABLE_RHO_MAX
        out[inside] = self._table(s[inside])
        return out * eta**self.dim

    def transform(self, y):
        single = is_single_point(y, self.dim)
        pts = as_points(y, self.dim)
        out = self.transform_radial(np.linalg.norm(pts, axis=1))
        return float(out[0]) if single else out

    def transform_exact(self, y):
        """Direct quadrature, bypassing the table (slow; for checks)."""
        pts = as_points(y, self.dim)
        eta = self.support_radius
        return _unit_transform(self.dim, np.linalg.norm(pts, axis=1) * eta) * eta**self.dim

    def envelope(self, rho):
        """Upper bound for ``|psi_hat|`` at radii beyond ``ENVELOPE_FROM / eta``."""
        eta = self.support_radius
        s = np.abs(np.asarray(rho, dtype=float)) * eta
        return self._table.envelope_const * np.exp(-np.sqrt(2 * np.pi * s)) * eta**self.dim

    def transform_bound(self, rho):
        """Upper bound for ``|psi_hat|`` at radii ``rho``, valid at every radius.

        Inside the table this is the per-interval maximum plus its error, so it
        also covers the oscillations between samples.
        """
        t = self._table
        eta = self.support_radius
        s = np.abs(np.asarray(rho, dtype=float)) * eta
        i = t.interval(s)
        inside = (t.maxabs[i] + t.errors[i]) * eta**self.dim
        return np.where(s <= TABLE_RHO_MAX, inside, self.envelope(rho))

    def decay_majorant(self, radius, power):
        """``sup_{r >= radius} |psi_hat(r)| (1 + r)^power`` (bounded from above)."""
        t = self._table
        eta = self.support_radius
        s0 = max(radius * eta, 0.0)
        sup = 0.0
        if s0 < TABLE_RHO_MAX:
            left = np.arange(t.errors.size) * CHEB_INTERVAL
            sel = left + CHEB_INTERVAL > s0
            right = (left[sel] + CHEB_INTERVAL) / eta
            b = (t.maxabs[sel] + t.errors[sel]) * eta**self.dim
            sup = float(np.max(b * (1 + right) ** power))
        r0 = max(s0, TABLE_RHO_MAX) / eta
        env_sup = _radial_majorant_sup(self.envelope, r0, power, 100 * r0 + 1e4 / eta)
        return max(sup, env_sup * (1 + 1e-9))

    # Schwartz-function view of psi_hat, used in the mass estimates
    def transform_view(self):
        return BumpTransform(self)

    def to_dict(self):
        return {"kind": "bump", "support_radius": self.support_radius, "dim": self.dim}


class BumpTransform:
    """``psi_hat`` viewed as a test function in its own right."""

    def __init__(self, bump):
        self.bump = bump
        self.dim = bump.dim

    def __call__(self, x):
        return self.bump.transform(x)

    def radial_bound(self, r):
        return self.bump.transform_bound(r)

    def weighted_sup(self, power):
        return self.bump.decay_majorant(0.0, power)

    def effective_radius(self, tol):
        """Radius beyond which ``|psi_hat|`` stays below ``tol``."""
        b = self.bump
        lo, hi = 0.0, b.table_radius
        if b.decay_majorant(hi, 0) >= tol:
            while b.decay_majorant(hi, 0) >= tol:
                hi *= 2
        for _ in range(60):
            mid = (lo + hi) / 2
            if b.decay_majorant(mid, 0) < tol:
                hi = mid
            else:
                lo = mid
        return hi


def required_radius(majorant, target, start=1.0):
    """Smallest radius (to bisection accuracy) with ``majorant(radius) <= target``.

    ``majorant`` must be nonincreasing.
    """
    hi = max(start, 1.0)
    n = 0
    while majorant(hi) > target:
        hi *= 2
        n += 1
        if n > 60:
            return np.inf
    lo = 0.0
    for _ in range(50):
        mid = (lo + hi) / 2
        if majorant(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi
