"""Functional calculus for finite exponential sums.

A finite sum ``f = sum c_n e(<x, gamma_n>)`` whose frequencies are integer
combinations ``gamma_n = m_n @ B`` of ``k`` generators is the restriction of
the trigonometric polynomial ``F(theta) = sum c_n e(<m_n, theta>)`` on the
torus ``T^k`` to the line ``theta = B x``. Applying a symbol ``h`` to ``F`` on a
torus grid and reading off Fourier coefficients gives ``g`` with
``g(x) = h(f(x))``, and ``g`` keeps its frequencies in the integer span of the
generators.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import CertificationError, DimensionError, DomainGuardError
from .expsum import ExpSum
from ._util import lex_order
from .lattice import lll_reduce

#: Largest rank handled by the torus lifting.
MAX_RANK = 3
#: Per-axis grid caps by rank, and a cap on the total number of grid points.
GRID_CAPS = {1: 1 << 16, 2: 1 << 11, 3: 1 << 7}
MAX_GRID_POINTS = 1 << 23
#: Integer-relation search bound and independence-check box.
COEFF_BOUND = 1000
INDEPENDENCE_BOX = 20


# --- integer bases -------------------------------------------------------------


def _hnf_rows(rows):
    """Row-style Hermite normal form of an integer matrix; returns the nonzero rows."""
    A = [list(map(int, r)) for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    r = 0
    for c in range(n):
        # Euclid on column c among rows r..m-1
        while True:
            nz = [i for i in range(r, m) if A[i][c] != 0]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(A[i][c]))
            A[r], A[p] = A[p], A[r]
            done = True
            for i in range(r + 1, m):
                if A[i][c]:
                    q = A[i][c] // A[r][c]
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if r < m and A[r][c] != 0:
            if A[r][c] < 0:
                A[r] = [-a for a in A[r]]
            for i in range(r):
                q = A[i][c] // A[r][c]
                A[i] = [a - q * b for a, b in zip(A[i], A[r])]
            r += 1
            if r == m:
                break
    return np.array([row for row in A if any(row)], dtype=np.int64).reshape(-1, n)


def _integer_relation(vectors, tol, bound=COEFF_BOUND):
    """Short integer ``n`` with ``|sum n_i v_i| <= tol * max|v|``, or ``None``.

    The coefficient bound shrinks with the number of vectors so that chance
    near-relations among independent reals stay unlikely.

    Uses LLL on the rows ``[e_i | W v_i]`` with ``W = 1 / tol``, so short
    reduced vectors carry near-relations in their integer part.
    """
    V = np.asarray(vectors, dtype=float)
    m = V.shape[0]
    # about (2B)^(m-1) tol / m combinations land within tol by chance; keep that below 1e-3
    if m > 1:
        bound = min(bound, max(1, int(0.5 * (1e-3 * m / tol) ** (1.0 / (m - 1)))))
    scale = max(1.0, float(np.abs(V).max()))
    W = 1.0 / (tol * scale)
    rows = np.hstack([np.eye(m), W * V])
    red, _ = lll_reduce(rows, delta=0.99)
    best = None
    for row in red:
        n = np.rint(row[:m]).astype(np.int64)
        if not n.any() or np.abs(n).max() > bound:
            continue
        res = float(np.linalg.norm(n @ V))
        if res <= tol * scale:
            if best is None or np.abs(n).sum() < np.abs(best).sum():
                best = n
    return best


def _solve_integer(G, v, tol):
    """Integer ``c`` with ``c @ G = v`` when ``G`` has independent rows, else ``None``."""
    k = G.shape[0]
    if k == 0 or np.linalg.matrix_rank(G, tol=1e-10 * max(1.0, np.abs(G).max())) < k:
        return None
    c, *_ = np.linalg.lstsq(G.T, v, rcond=None)
    ci = np.rint(c)
    scale = max(1.0, float(np.linalg.norm(v)))
    if np.abs(ci).max() > 1e12 or np.linalg.norm(ci @ G - v) > tol * scale:
        return None
    return ci.astype(np.int64)


@dataclass(frozen=True, eq=False)
class FrequencyBasis:
    """Generators of a free abelian group containing a set of frequencies.

    Attributes
    ----------
    generators : ndarray, shape (k, d)
    coords : ndarray of int, shape (n, k)
        ``freqs[i] = coords[i] @ generators``.
    freqs : ndarray, shape (n, d)
    """

    generators: np.ndarray
    coords: np.ndarray
    freqs: np.ndarray
    tol: float = 1e-9

    @property
    def rank(self):
        return self.generators.shape[0]

    @property
    def dim(self):
        return self.freqs.shape[1]

    def residual(self):
        """Largest ``|coords @ generators - freqs|``."""
        if not len(self.freqs):
            return 0.0
        return float(np.max(np.linalg.norm(self.coords @ self.generators - self.freqs, axis=1)))

    def express(self, points):
        """Integer coordinates of ``points`` (rows) in the generators.

        Raises
        ------
        ValueError
            If a point is not an integer combination within ``tol``.
        """
        P = np.asarray(points, dtype=float).reshape(-1, self.dim)
        k = self.rank
        if k == 0:
            if np.any(np.linalg.norm(P, axis=1) > self.tol):
                raise ValueError("nonzero point but the basis is empty")
            return np.zeros((P.shape[0], 0), dtype=np.int64)
        G = self.generators
        if np.linalg.matrix_rank(G, tol=1e-10 * max(1.0, np.abs(G).max())) == k:
            c, *_ = np.linalg.lstsq(G.T, P.T, rcond=None)
            ci = np.rint(c.T).astype(np.int64)
            err = np.linalg.norm(ci @ G - P, axis=1)
            bad = err > self.tol * np.maximum(1.0, np.linalg.norm(P, axis=1))
            if bad.any():
                raise ValueError(f"point {P[np.flatnonzero(bad)[0]]} is not in the span of the basis")
            return ci
        out = np.zeros((P.shape[0], k), dtype=np.int64)
        for i, v in enumerate(P):
            if np.linalg.norm(v) <= self.tol:
                continue
            n = _integer_relation(np.vstack([v, G]), self.tol)
            if n is None or abs(n[0]) != 1:
                raise ValueError(f"point {v} is not in the span of the basis")
            out[i] = -n[1:] * n[0]
        return out


def find_basis(frequencies, tol=1e-9, bound=COEFF_BOUND):
    """Generators for the integer span of ``frequencies``.

    Frequencies are inserted one at a time, shortest first, so that later
    relations have small coefficients. A new frequency that is an integer
    combination of the current generators just gets its coordinates; one that
    satisfies an integer relation ``n_0 v = sum n_i g_i`` refines the
    generators through a Hermite normal form; otherwise it becomes a new
    generator. Frequencies without any relation up to ``bound`` are treated as
    independent, so the rank can only be overestimated, never underestimated.

    Parameters
    ----------
    frequencies : array_like, shape (n, d)
    tol : float
        Relative tolerance for integer combinations.

    Returns
    -------
    FrequencyBasis
    """
    F = np.asarray(frequencies, dtype=float)
    if F.ndim == 1:
        F = F.reshape(-1, 1)
    n, d = F.shape
    G = np.zeros((0, d))
    coords = []
    order = np.argsort(np.linalg.norm(F, axis=1), kind="stable")
    for v in F[order]:
        if np.linalg.norm(v) <= tol:
            coords.append(None)
            continue
        k = G.shape[0]
        c = _solve_integer(G, v, tol)
        if c is not None:
            coords.append(c)
            continue
        rel = _integer_relation(np.vstack([v, G]), tol, bound) if k else None
        if rel is not None and rel[0] != 0:
            n0, nn = int(rel[0]), -rel[1:]
            if n0 < 0:
                n0, nn = -n0, -nn
            if n0 == 1:
                coords.append(nn.astype(np.int64))
                continue
            # module generated by G and v = (nn / n0) G, scaled by n0
            H = _hnf_rows(np.vstack([n0 * np.eye(k, dtype=np.int64), nn.reshape(1, -1)]))
            T = H.astype(float) / n0
            G = T @ G
            Tinv = np.linalg.inv(T)
            coords = [None if c is None else np.rint(c @ Tinv).astype(np.int64) for c in coords]
            coords.append(np.rint((nn / n0) @ Tinv).astype(np.int64))
            continue
        G = np.vstack([G, v])
        coords = [None if c is None else np.append(c, 0) for c in coords]
        coords.append(np.eye(k + 1, dtype=np.int64)[-1])
    k = G.shape[0]
    if k == 1:
        # rank one: orient the generator so its first nonzero entry is positive
        nz = np.flatnonzero(np.abs(G[0]) > tol)
        if nz.size and G[0, nz[0]] < 0:
            G = -G
            coords = [None if c is None else -c for c in coords]
    C = np.zeros((n, k), dtype=np.int64)
    C[order] = np.array([np.zeros(k, dtype=np.int64) if c is None else c for c in coords], dtype=np.int64).reshape(n, k)
    return FrequencyBasis(G, C, F, tol)


def is_independent(generators, tol=1e-9, box=INDEPENDENCE_BOX):
    """No nonzero integer combination with coefficients in ``[-box, box]`` vanishes."""
    G = np.asarray(generators, dtype=float)
    k = G.shape[0]
    if k == 0:
        return True
    if k > 3:
        raise ValueError("brute-force independence check is limited to rank 3")
    rng = np.arange(-box, box + 1)
    N = np.array(list(itertools.product(rng, repeat=k)), dtype=float)
    N = N[np.any(N != 0, axis=1)]
    return bool(np.min(np.linalg.norm(N @ G, axis=1)) > tol)


# --- symbols -------------------------------------------------------------------


def _smooth_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class HolomorphicSymbol:
    """A function applied to the values of an exponential sum.

    Use the constructors :meth:`reciprocal`, :meth:`exponential`,
    :meth:`polynomial`, :meth:`power_series` and :meth:`eps_inverse`.
    """

    kind: str
    coeffs: tuple = ()
    radius: float = np.inf
    eps: float = 0.0

    @classmethod
    def reciprocal(cls):
        return cls("reciprocal")

    @classmethod
    def exponential(cls):
        return cls("exponential")

    @classmethod
    def polynomial(cls, coeffs):
        """``sum_j coeffs[j] z^j``."""
        return cls("polynomial", tuple(complex(c) for c in coeffs))

    @classmethod
    def power_series(cls, coeffs, radius):
        return cls("power_series", tuple(complex(c) for c in coeffs), float(radius))

    @classmethod
    def eps_inverse(cls, eps):
        """``z -> chi(|z|) / z`` with a smooth cutoff ``chi`` (0 below eps/2, 1 above eps)."""
        if not eps > 0:
            raise ValueError("eps must be positive")
        return cls("eps_inverse", eps=float(eps))

    def guard(self, values):
        """Raise :class:`DomainGuardError` if ``values`` leave the symbol's domain."""
        z = np.asarray(values)
        if self.kind == "reciprocal":
            i = int(np.argmin(np.abs(z)))
            if not np.abs(z.flat[i]) > 0:
                raise DomainGuardError(f"reciprocal applied at a zero of f (value {z.flat[i]})", z.flat[i])
        elif self.kind == "power_series":
            i = int(np.argmax(np.abs(z)))
            if not np.abs(z.flat[i]) < self.radius:
                raise DomainGuardError(
                    f"|f| reaches {abs(z.flat[i]):.6g}, outside the radius {self.radius:g}", z.flat[i]
                )

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "reciprocal":
            return 1.0 / z
        if self.kind == "exponential":
            return np.exp(z)
        if self.kind in ("polynomial", "power_series"):
            out = np.zeros_like(z)
            for c in reversed(self.coeffs):
                out = out * z + c
            return out
        if self.kind == "eps_inverse":
            a = np.abs(z)
            half = self.eps / 2
            chi = _smooth_step((a - half) / half)
            out = np.zeros_like(z)
            nz = chi > 0
            out[nz] = chi[nz] / z[nz]
            return out
        raise ValueError(f"unknown symbol kind {self.kind!r}")

    def to_dict(self):
        doc = {"kind": self.kind}
        if self.coeffs:
            doc["coeffs"] = [[c.real, c.imag] for c in self.coeffs]
        if np.isfinite(self.radius):
            doc["radius"] = self.radius
        if self.eps:
            doc["eps"] = self.eps
        return doc


# --- composition -----------------------------------------------------------------


class Composition(NamedTuple):
    """Result of :func:`compose`.

    Attributes
    ----------
    g : ExpSum
    grid_residual : float
        ``max |g - h(f)|`` over the final torus grid and its half-step shift.
    alias_bound : float
        Estimated W-norm error of the coefficients from grid aliasing.
    grid_n : tuple of int
        Grid size per torus axis.
    tapered : bool
        Whether a Fejer taper was applied at the grid cap.
    basis : FrequencyBasis or None
        Generators of the torus lifting.
    coords : ndarray of int or None
        Coordinates of the terms of ``g`` in ``basis``.
    """

    g: ExpSum
    grid_residual: float
    alias_bound: float
    grid_n: tuple
    tapered: bool
    basis: object = None
    coords: object = None


def _horner(symbol, f):
    out = ExpSum.empty(f.dim, merge_tol=f.merge_tol)
    for c in reversed(symbol.coeffs):
        out = out * f + c
    return out


def _lift(coeffs, coords, N, shift=0.0):
    """Values of the torus polynomial on the ``N^k`` grid (optionally half-shifted)."""
    k = coords.shape[1]
    A = np.zeros((N,) * k, dtype=complex)
    c = coeffs
    if shift:
        c = c * np.exp(2j * np.pi * shift * coords.sum(axis=1) / N)
    np.add.at(A, tuple((coords % N).T), c)
    return np.fft.ifftn(A) * N**k


def _term_coords(g, C, generators):
    """Coordinates of the terms of ``g``, each one of the grid points ``C``."""
    F = C @ generators
    if len(g) == len(C):
        o = lex_order(F)
        if np.array_equal(F[o], g.freqs):
            return C[o]
    if not len(g):
        return np.zeros((0, C.shape[1]), dtype=np.int64)
    return C[cKDTree(F).query(g.freqs)[1]]


def _centered_coords(N, k):
    ax = np.fft.fftfreq(N, 1.0 / N).astype(np.int64)
    mesh = np.meshgrid(*([ax] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _coefficients(symbol, coeffs, coords, N):
    F = _lift(coeffs, coords, N)
    symbol.guard(F)
    return np.fft.fftn(symbol(F)) / N ** coords.shape[1]


def _alias_estimate(c_small, c_big, N):
    """W-norm difference between grid-N and grid-2N coefficients."""
    k = c_small.ndim
    idx = _centered_coords(N, k)
    big_at = c_big[tuple((idx % (2 * N)).T)]
    diff = float(np.abs(big_at - c_small.ravel()).sum())
    outside = float(np.abs(c_big).sum() - np.abs(big_at).sum())
    return diff + max(outside, 0.0)


def compose(symbol, f, basis=None, grid_n=None, drop_tol=1e-14, tol=1e-10, tail_budget=0.0, taper=False):
    """``g`` in W with ``g(x) = h(f(x))`` through the torus lifting of ``f``.

    The grid is doubled until coefficients from consecutive grids differ by at
    most ``tol`` in W-norm (the alias estimate). Coefficients below
    ``drop_tol``, and then the smallest ones within ``tail_budget``, are moved
    to the tail ledger of ``g``.

    Parameters
    ----------
    symbol : HolomorphicSymbol
    f : ExpSum
    basis : FrequencyBasis, optional
        Computed with :func:`find_basis` when omitted.
    grid_n : int, optional
        Starting grid size per axis.
    taper : bool
        At the grid cap, return a Fejer-tapered result instead of raising.

    Raises
    ------
    DomainGuardError
        If the symbol's domain condition fails on the grid.
    CertificationError
        If the rank exceeds three or the grid cap is reached without the alias
        estimate falling below ``tol`` (and ``taper`` is off).
    """
    if symbol.kind == "polynomial":
        g = _horner(symbol, f)
        return Composition(g, 0.0, 0.0, (), False)
    if basis is None:
        basis = find_basis(f.freqs, tol=1e-9)
    elif basis.dim != f.dim:
        raise DimensionError("basis and sum differ in dimension")
    coords = basis.express(f.freqs) if len(f) else np.zeros((0, basis.rank), dtype=np.int64)
    k = basis.rank
    if k == 0:
        val = complex(f.coeffs.sum()) if len(f) else 0j
        symbol.guard(np.array([val]))
        g = ExpSum.constant(complex(symbol(np.array([val]))[0]), f.dim, merge_tol=f.merge_tol, drop_tol=drop_tol)
        return Composition(g, 0.0, 0.0, (), False)
    if k > MAX_RANK:
        raise CertificationError(f"rank {k} exceeds the torus-lifting cap of {MAX_RANK}")
    span = int(np.abs(coords).max()) if len(coords) else 0
    cap = GRID_CAPS[k]
    N = 16 if grid_n is None else int(grid_n)
    while N < 4 * (span + 1):
        N *= 2
    if N > cap or N**k > MAX_GRID_POINTS:
        raise CertificationError(f"frequency span {span} needs a grid beyond the cap {cap} per axis")
    cur = _coefficients(symbol, f.coeffs, coords, N)
    tapered = False
    while True:
        M = 2 * N
        if M > cap or M**k > MAX_GRID_POINTS:
            est = np.inf
            nxt = None
        else:
            nxt = _coefficients(symbol, f.coeffs, coords, M)
            est = _alias_estimate(cur, nxt, N)
        if est <= tol:
            cur, N = nxt, M
            break
        if nxt is None:
            if not taper:
                raise CertificationError(
                    f"alias estimate did not reach {tol:.3g} below the grid cap {cap}; increase the cap or the tolerance"
                )
            idx = _centered_coords(N, k)
            w = np.prod(1.0 - np.abs(idx) / (N // 2 + 1), axis=1).reshape((N,) * k)
            cur = cur * w
            tapered = True
            est = float("nan")
            break
        cur, N = nxt, M
    idx = _centered_coords(N, k)
    vals = cur.ravel()
    big = np.abs(vals) >= drop_tol
    dropped = float(np.abs(vals[~big]).sum())
    C = idx[big]
    g = ExpSum(vals[big], C @ basis.generators, merge_tol=f.merge_tol, drop_tol=drop_tol, dim=f.dim)
    g = g.truncate(tail_budget)
    gc = _term_coords(g, C, basis.generators)
    # residual of the truncated sum against h(F), on the grid and its half-step shift
    res = 0.0
    for shift in (0.0, 0.5):
        F = _lift(f.coeffs, coords, N, shift)
        G = _lift(g.coeffs, gc, N, shift)
        res = max(res, float(np.max(np.abs(G - symbol(F)))))
    alias = 0.0 if tapered else est
    g = g._retagged(drop_tol=0.0, tail_bound=g.tail_bound + dropped + alias)
    return Composition(g, res, alias, (N,) * k, tapered, basis, gc)


def eps_inverse(f, eps, basis=None, grid_n=None, drop_tol=1e-14, tol=1e-10, tail_budget=0.0, taper=False):
    """``g`` in W with ``f g = 1`` where ``|f| >= eps`` and ``g = 0`` where ``|f| <= eps/2``.

    Built as ``G = chi(|F|) / F`` on the torus with a smooth cutoff ``chi``;
    see :func:`compose` for the parameters and the returned record.
    """
    return compose(HolomorphicSymbol.eps_inverse(eps), f, basis, grid_n, drop_tol, tol, tail_budget, taper)


def eps_inverse_residuals(f, g, eps, points):
    """``(max |f g - 1|`` on ``{|f| >= eps}``, ``max |g|`` on ``{|f| <= eps/2})`` at ``points``."""
    fv = f(points)
    gv = g(points)
    a = np.abs(fv)
    on = a >= eps
    off = a <= eps / 2
    r1 = float(np.max(np.abs(fv[on] * gv[on] - 1))) if on.any() else 0.0
    r2 = float(np.max(np.abs(gv[off]))) if off.any() else 0.0
    return r1, r2


def torus_residuals(f, g, eps, basis=None, grid_n=4096):
    """Same as :func:`eps_inverse_residuals` but on the lifted torus grid.

    ``g`` may be an ExpSum or the Composition that produced it; the latter
    carries its basis and term coordinates, which avoids recovering them from
    the (many) output frequencies.
    """
    g_coords = None
    if isinstance(g, Composition):
        if basis is None:
            basis = g.basis
        if basis is g.basis:
            g_coords = g.coords
        g = g.g
    if basis is None:
        basis = find_basis(np.vstack([f.freqs, g.freqs]))
    k = basis.rank
    if k == 0:
        return eps_inverse_residuals(f, g, eps, np.zeros((1, f.dim)))
    n = grid_n if k == 1 else min(grid_n, GRID_CAPS[k])
    if g_coords is None:
        g_coords = basis.express(g.freqs) if len(g) else np.zeros((0, k), dtype=np.int64)
    F = _lift(f.coeffs, basis.express(f.freqs), n)
    G = _lift(g.coeffs, g_coords, n) if len(g) else np.zeros_like(F)
    a = np.abs(F)
    on = a >= eps
    off = a <= eps / 2
    r1 = float(np.max(np.abs(F[on] * G[on] - 1))) if on.any() else 0.0
    r2 = float(np.max(np.abs(G[off]))) if off.any() else 0.0
    return r1, r2


__all__ = [
    "Composition",
    "FrequencyBasis",
    "HolomorphicSymbol",
    "compose",
    "eps_inverse",
    "eps_inverse_residuals",
    "find_basis",
    "is_independent",
    "torus_residuals",
]
