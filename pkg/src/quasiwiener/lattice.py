"""Full-rank lattices ``A Z^d``, their duals, cosets and point enumeration.

Bases are stored as ``d x d`` matrices whose *columns* are the generators, so a
lattice point is ``A @ k`` for an integer vector ``k``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import as_points, as_vector, is_single_point, lex_order
from .errors import DimensionError, EnumerationCapError, SingularLatticeError

#: Condition number above which a basis is rejected as numerically singular.
COND_LIMIT = 1e12

#: Default maximal number of candidate points scanned by :func:`enumerate_in_ball`.
ENUMERATION_CAP = 4_000_000

# coordinates this close below an integer are treated as that integer
_SNAP = 1e-12


def lll_reduce(rows, delta=0.75):
    """LLL-reduce the basis given by the rows of ``rows`` (floating point).

    Returns ``(reduced, U)`` with ``reduced = U @ rows`` and ``U`` unimodular.
    Intended for the small dimensions (< 10) used in this package.
    """
    B = np.array(rows, dtype=float, copy=True)
    n = B.shape[0]
    U = np.eye(n)

    def gram_schmidt(B):
        Bs = np.zeros_like(B)
        mu = np.zeros((n, n))
        norms = np.zeros(n)
        for i in range(n):
            v = B[i].copy()
            for j in range(i):
                if norms[j] > 0:
                    mu[i, j] = B[i] @ Bs[j] / norms[j]
                    v -= mu[i, j] * Bs[j]
            Bs[i] = v
            norms[i] = v @ v
        return mu, norms

    mu, norms = gram_schmidt(B)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100_000:
            break
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0:
                B[k] -= q * B[j]
                U[k] -= q * U[j]
                mu[k, : j + 1] -= q * np.append(mu[j, :j], 1.0)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[[k - 1, k]] = B[[k, k - 1]]
            U[[k - 1, k]] = U[[k, k - 1]]
            mu, norms = gram_schmidt(B)
            k = max(k - 1, 1)
    return B, U


@dataclass(frozen=True, eq=False)
class Lattice:
    """The lattice ``basis @ Z^d``."""

    basis: np.ndarray
    det_abs: float = field(init=False)
    _inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"basis must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise SingularLatticeError("basis has non-finite entries")
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularLatticeError(f"basis is numerically singular (condition number {cond:.3g})")
        A = A.copy()
        A.setflags(write=False)
        inv = np.linalg.inv(A)
        inv.setflags(write=False)
        object.__setattr__(self, "basis", A)
        object.__setattr__(self, "det_abs", float(abs(np.linalg.det(A))))
        object.__setattr__(self, "_inv", inv)

    @classmethod
    def integer(cls, dim):
        """The lattice ``Z^dim``."""
        return cls(np.eye(dim))

    @classmethod
    def scaled(cls, scale, dim=1):
        return cls(scale * np.eye(dim))

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def generators(self):
        """Generators as rows."""
        return self.basis.T.copy()

    def coordinates(self, x):
        """Real coordinates ``A^{-1} x`` of points ``x`` (rows)."""
        pts = as_points(x, self.dim)
        return pts @ self._inv.T

    def dual(self):
        """The conjugate lattice ``{y : <l, y> in Z for all l in L}``."""
        return Lattice(self._inv.T)

    def contains(self, x, tol=1e-9):
        """Whether points lie within ``tol`` (coordinate distance) of the lattice."""
        c = self.coordinates(x)
        res = np.linalg.norm(c - np.rint(c), axis=1)
        out = res <= tol
        return bool(out[0]) if is_single_point(x, self.dim) else out

    def reduce_point(self, x):
        """Representative of ``x + L`` inside the fundamental parallelepiped.

        The result ``r`` satisfies ``x - r in L`` and ``A^{-1} r in [0, 1)^d``.
        """
        single = is_single_point(x, self.dim)
        c = self.coordinates(x)
        fl = np.floor(c)
        frac = c - fl
        # values a hair below an integer are roundoff: send them to 0
        near = frac > 1.0 - _SNAP * np.maximum(1.0, np.abs(c))
        frac[near] = 0.0
        frac[frac >= 1.0] = 0.0
        r = frac @ self.basis.T
        return r[0] if single else r

    def reduced(self):
        """Same lattice with an LLL-reduced basis (Lagrange-reduced when d = 2)."""
        rows, _ = lll_reduce(self.basis.T, delta=0.99 if self.dim <= 2 else 0.75)
        # canonical signs: first nonzero coordinate of each generator positive
        for i in range(rows.shape[0]):
            nz = np.flatnonzero(np.abs(rows[i]) > 1e-12 * np.abs(rows[i]).max())
            if nz.size and rows[i, nz[0]] < 0:
                rows[i] = -rows[i]
        return Lattice(rows.T)

    def same_as(self, other, tol=1e-8):
        """Lattice equality via mutual membership of generators."""
        if other.dim != self.dim:
            return False
        return bool(
            np.all(self.contains(other.generators, tol)) and np.all(other.contains(self.generators, tol))
        )

    def shortest_vector_length(self):
        """Exact length of a shortest nonzero lattice vector."""
        red = self.reduced()
        r0 = float(np.min(np.linalg.norm(red.basis, axis=0)))
        pts = enumerate_in_ball(Coset(red, np.zeros(self.dim)), r0 * (1 + 1e-9))
        norms = np.linalg.norm(pts, axis=1)
        norms = norms[norms > 1e-12 * r0]
        return float(norms.min()) if norms.size else r0

    def diameter(self):
        """Sum of generator lengths; bounds the diameter of a fundamental cell."""
        return float(np.sum(np.linalg.norm(self.basis, axis=0)))

    def to_dict(self):
        return {"dim": self.dim, "basis": self.basis.ravel().tolist()}

    @classmethod
    def from_dict(cls, doc):
        d = int(doc["dim"])
        return cls(np.asarray(doc["basis"], dtype=float).reshape(d, d))


@dataclass(frozen=True, eq=False)
class Coset:
    """The translate ``shift + L``; the shift is kept reduced into the fundamental cell."""

    lattice: Lattice
    shift: np.ndarray = None

    def __post_init__(self):
        d = self.lattice.dim
        s = np.zeros(d) if self.shift is None else as_vector(self.shift, d)
        s = np.asarray(self.lattice.reduce_point(s.reshape(1, d))[0], dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "shift", s)

    @property
    def dim(self):
        return self.lattice.dim

    def contains(self, x, tol=1e-9):
        pts = as_points(x, self.dim)
        return self.lattice.contains(pts - self.shift, tol)

    def same_as(self, other, tol=1e-8):
        return self.lattice.same_as(other.lattice, tol) and bool(
            np.all(self.lattice.contains((other.shift - self.shift).reshape(1, -1), tol))
        )

    def to_dict(self):
        return {"dim": self.dim, "basis": self.lattice.basis.ravel().tolist(), "shift": self.shift.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(Lattice.from_dict(doc), np.asarray(doc.get("shift", [0.0] * int(doc["dim"])), dtype=float))


def dual(L):
    return L.dual()


def contains(L, x, tol=1e-9):
    return L.contains(x, tol)


def reduce_point(L, x):
    return L.reduce_point(x)


def enumerate_in_ball(coset, radius, cap=ENUMERATION_CAP):
    """All points of ``coset`` in the open ball ``B(0, radius)``.

    Points are ordered by norm, ties broken lexicographically.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    L = coset.lattice
    d = L.dim
    inv = L._inv
    a = coset.shift
    center = inv @ (-a)
    half = np.linalg.norm(inv, axis=1) * radius
    lo = np.floor(center - half).astype(np.int64)
    hi = np.ceil(center + half).astype(np.int64)
    sizes = hi - lo + 1
    total = float(np.prod(sizes.astype(float)))
    if total > cap:
        raise EnumerationCapError(
            f"enumeration of radius {radius:g} needs {total:.3g} candidates (cap {cap})"
        )
    axes = [np.arange(lo[j], hi[j] + 1) for j in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = grid.astype(float) @ L.basis.T + a
    norms = np.linalg.norm(pts, axis=1)
    keep = norms < radius
    pts = pts[keep]
    norms = norms[keep]
    if pts.shape[0] == 0:
        return pts
    lex = lex_order(pts)
    rank = np.empty_like(lex)
    rank[lex] = np.arange(lex.size)
    order = np.lexsort((rank, np.round(norms, 12)))
    return pts[order]
