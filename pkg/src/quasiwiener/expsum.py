"""Finite exponential sums ``f(x) = sum_n c_n exp(2 pi i <x, lambda_n>)``.

These are the finite elements of the Wiener algebra W of absolutely convergent
exponential series, normed by ``||f||_W = sum |c_n|``. Every :class:`ExpSum`
carries a ``tail_bound``: the W-norm of terms that were dropped along the way,
so that a finite sum stands in for an infinite one with a certified error.
"""

from dataclasses import dataclass, field

import numpy as np

from ._util import as_points, as_vector, dumps, is_single_point, loads, merge_points
from .errors import DimensionError

#: Default radius under which two frequencies are identified.
MERGE_TOL = 1e-9
#: Default modulus under which a coefficient is dropped into the tail ledger.
DROP_TOL = 1e-14

_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class ExpSum:
    """Finite exponential sum with frequencies in cycles per unit length.

    Parameters
    ----------
    coeffs : array_like, shape (n,)
        Complex coefficients.
    freqs : array_like, shape (n, d)
        Real frequency vectors. A 1-D array is read as ``n`` frequencies in
        dimension one.
    merge_tol : float
        Frequencies closer than this are identified and their coefficients added.
    drop_tol : float
        Coefficients of modulus below this are removed and charged to the tail.
    tail_bound : float
        W-norm already lost to truncation upstream.
    dim : int, optional
        Needed only for the empty sum.

    Notes
    -----
    Construction always normalizes: equal frequencies are merged, small
    coefficients dropped, and terms sorted lexicographically by frequency.
    """

    coeffs: np.ndarray
    freqs: np.ndarray
    merge_tol: float = MERGE_TOL
    drop_tol: float = DROP_TOL
    tail_bound: float = 0.0
    dim: int = field(default=None)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).ravel()
        f = np.asarray(self.freqs, dtype=float)
        if f.ndim == 0:
            f = f.reshape(1, 1)
        elif f.ndim == 1:
            f = f.reshape(-1, 1) if (self.dim in (None, 1)) else f.reshape(-1, self.dim)
        if f.shape[0] == 0 and self.dim is not None:
            f = f.reshape(0, self.dim)
        if f.shape[0] != c.shape[0]:
            raise ValueError(f"{c.shape[0]} coefficients but {f.shape[0]} frequencies")
        d = f.shape[1] if f.ndim == 2 and f.shape[1] > 0 else (self.dim or 1)
        if self.dim is not None and d != self.dim:
            raise DimensionError(f"frequencies have dimension {d}, expected {self.dim}")
        f = f.reshape(-1, d)
        tail = float(self.tail_bound)
        if c.size:
            f, c = merge_points(f, c, self.merge_tol)
            small = np.abs(c) < self.drop_tol
            if small.any():
                tail += float(np.abs(c[small]).sum())
                c = c[~small]
                f = f[~small]
        c.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "dim", int(d))
        object.__setattr__(self, "tail_bound", tail)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, value, dim=1, **kw):
        return cls([value], np.zeros((1, dim)), dim=dim, **kw)

    @classmethod
    def character(cls, freq, coeff=1.0, **kw):
        """The single term ``coeff * exp(2 pi i <x, freq>)``."""
        v = as_vector(freq)
        return cls([coeff], v.reshape(1, -1), dim=v.size, **kw)

    @classmethod
    def empty(cls, dim=1, **kw):
        return cls(np.zeros(0), np.zeros((0, dim)), dim=dim, **kw)

    def _like(self, coeffs, freqs, tail_bound):
        return ExpSum(
            coeffs,
            freqs,
            merge_tol=self.merge_tol,
            drop_tol=self.drop_tol,
            tail_bound=tail_bound,
            dim=self.dim,
        )

    def _retagged(self, drop_tol, tail_bound):
        """Copy with new drop tolerance and tail, skipping renormalization."""
        out = object.__new__(ExpSum)
        for name, value in vars(self).items():
            object.__setattr__(out, name, value)
        object.__setattr__(out, "drop_tol", drop_tol)
        object.__setattr__(out, "tail_bound", float(tail_bound))
        return out

    # -- basic protocol -------------------------------------------------------

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"ExpSum(dim={self.dim}, terms={len(self)}, w_norm={self.w_norm:.6g}, tail_bound={self.tail_bound:.3g})"

    @property
    def w_norm(self):
        """``sum |c_n|``; zero for the empty sum."""
        return float(np.abs(self.coeffs).sum())

    def __call__(self, x):
        """Evaluate at one point (returns a complex) or at rows of an array."""
        single = is_single_point(x, self.dim)
        pts = as_points(x, self.dim)
        out = np.zeros(pts.shape[0], dtype=complex)
        n = len(self)
        if n:
            step = max(1, _CHUNK // n)
            for s in range(0, pts.shape[0], step):
                ph = pts[s : s + step] @ self.freqs.T
                out[s : s + step] = np.exp(2j * np.pi * ph) @ self.coeffs
        return complex(out[0]) if single else out

    def _check(self, other):
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, ExpSum):
            return self + ExpSum.constant(other, self.dim, merge_tol=self.merge_tol)
        self._check(other)
        return self._like(
            np.concatenate([self.coeffs, other.coeffs]),
            np.concatenate([self.freqs, other.freqs]),
            self.tail_bound + other.tail_bound,
        )

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs, self.freqs, self.tail_bound)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ExpSum):
            a = complex(other)
            return self._like(a * self.coeffs, self.freqs, abs(a) * self.tail_bound)
        self._check(other)
        ta, tb = self.tail_bound, other.tail_bound
        tail = ta * other.w_norm + tb * self.w_norm + ta * tb
        if not len(self) or not len(other):
            return self._like(np.zeros(0), np.zeros((0, self.dim)), tail)
        coeffs = np.multiply.outer(self.coeffs, other.coeffs).ravel()
        freqs = (self.freqs[:, None, :] + other.freqs[None, :, :]).reshape(-1, self.dim)
        return self._like(coeffs, freqs, tail)

    __rmul__ = __mul__

    def modulate(self, gamma):
        """Multiply by ``exp(2 pi i <x, gamma>)``: every frequency shifts by ``gamma``."""
        g = as_vector(gamma, self.dim)
        return self._like(self.coeffs, self.freqs + g, self.tail_bound)

    def reduce_mod_dual(self, lattice, shift=None):
        """Fold frequencies into the fundamental cell of the dual lattice.

        Each frequency ``gamma`` is replaced by the representative ``alpha`` of
        ``gamma + L*`` in the fundamental parallelepiped of ``L*``; colliding
        terms are summed. The result agrees with ``self`` on ``L``. With
        ``shift = a`` the coefficients pick up ``exp(2 pi i <a, gamma - alpha>)``
        so that the result agrees with ``self`` on the coset ``a + L`` instead.
        """
        if lattice.dim != self.dim:
            raise DimensionError(f"lattice has dimension {lattice.dim}, sum has {self.dim}")
        if not len(self):
            return self
        dual = lattice.dual()
        alpha = dual.reduce_point(self.freqs)
        coeffs = self.coeffs
        if shift is not None:
            a = as_vector(shift, self.dim)
            coeffs = coeffs * np.exp(2j * np.pi * ((self.freqs - alpha) @ a))
        return self._like(coeffs, alpha, self.tail_bound)

    def truncate(self, budget):
        """Drop the smallest terms whose moduli add up to at most ``budget``."""
        if not len(self) or budget <= 0:
            return self
        mags = np.abs(self.coeffs)
        order = np.argsort(mags, kind="stable")
        csum = np.cumsum(mags[order])
        k = int(np.searchsorted(csum, budget, side="right"))
        if k == 0:
            return self
        keep = np.ones(len(self), dtype=bool)
        keep[order[:k]] = False
        return self._like(self.coeffs[keep], self.freqs[keep], self.tail_bound + float(csum[k - 1]))

    def max_frequency(self):
        return float(np.linalg.norm(self.freqs, axis=1).max()) if len(self) else 0.0

    def allclose(self, other, atol=1e-12):
        """Term-wise comparison after merging, treating missing terms as zero."""
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    # -- serialization --------------------------------------------------------

    def to_dict(self):
        return {
            "dim": self.dim,
            "merge_tol": self.merge_tol,
            "tail_bound": self.tail_bound,
            "terms": [
                {"re": float(c.real), "im": float(c.imag), "freq": f.tolist()}
                for c, f in zip(self.coeffs, self.freqs)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            dim = int(doc["dim"])
            terms = doc["terms"]
        except KeyError as exc:
            raise ValueError(f"ExpSum document is missing field {exc.args[0]!r}") from None
        coeffs = np.array([complex(t["re"], t.get("im", 0.0)) for t in terms], dtype=complex)
        freqs = np.array([t["freq"] for t in terms], dtype=float).reshape(-1, dim)
        return cls(
            coeffs,
            freqs,
            merge_tol=float(doc.get("merge_tol", MERGE_TOL)),
            tail_bound=float(doc.get("tail_bound", 0.0)),
            dim=dim,
        )

    def dumps(self):
        return dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(loads(text))


def combine(f, g, op):
    """``f + g`` or ``f * g`` according to ``op`` in {"add", "mul"}."""
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown op {op!r}")


def w_norm(f):
    return f.w_norm


def modulate(f, gamma):
    return f.modulate(gamma)


def reduce_mod_dual(f, lattice, shift=None):
    return f.reduce_mod_dual(lattice, shift)


__all__ = ["ExpSum", "combine", "w_norm", "modulate", "reduce_mod_dual"]
