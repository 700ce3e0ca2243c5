"""Windowed atomic measures ``sum_l c_l delta_l``.

The measures of interest are infinite; an :class:`AtomicMeasure` is the
restriction to the closed ball of radius ``window_radius``, and operations
document how they move that window.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._util import as_points, as_vector, dumps, lex_order, loads
from .errors import DimensionError, WindowError
from .lattice import enumerate_in_ball

#: Two atoms closer than this are considered the same point (invalid input).
ATOM_TOL = 1e-9
#: Pitch of the sliding-window candidate grid in :func:`translation_bound`.
GRID_PITCH = 0.1


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite atomic measure with truncation metadata.

    Parameters
    ----------
    points : array_like, shape (n, d)
    masses : array_like, shape (n,)
    window_radius : float
        Atoms outside the closed ball of this radius were discarded.
    sep_radius : float, optional
        Declared lower bound on the distance between distinct atoms.
    """

    points: np.ndarray
    masses: np.ndarray
    window_radius: float
    sep_radius: float = None
    dim: int = None

    def __post_init__(self):
        d = self.dim
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if d in (None, 1) else pts.reshape(-1, d)
        if pts.shape[0] == 0:
            pts = pts.reshape(0, d or (pts.shape[1] if pts.ndim == 2 and pts.shape[1] else 1))
        d = pts.shape[1]
        if self.dim is not None and self.dim != d:
            raise DimensionError(f"points have dimension {d}, expected {self.dim}")
        m = np.atleast_1d(np.asarray(self.masses, dtype=complex)).ravel()
        if m.shape[0] != pts.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {m.shape[0]} masses")
        R = float(self.window_radius)
        if not R > 0:
            raise ValueError("window_radius must be positive")
        if pts.shape[0]:
            norms = np.linalg.norm(pts, axis=1)
            if norms.max() > R * (1 + 1e-12) + 1e-12:
                raise WindowError(f"atom at radius {norms.max():g} outside window {R:g}")
            # pair search below the threshold is much cheaper than the exact minimum
            limit = ATOM_TOL if self.sep_radius is None else max(ATOM_TOL, self.sep_radius * (1 - 1e-9))
            if pts.shape[0] > 1 and len(cKDTree(pts).query_pairs(limit, output_type="ndarray")):
                sep = _min_distance(pts)
                if sep <= ATOM_TOL:
                    raise ValueError(f"atoms are not distinct (min distance {sep:.3g})")
                raise ValueError(f"min distance {sep:g} violates declared sep_radius {self.sep_radius:g}")
        o = lex_order(pts)
        pts = pts[o]
        m = m[o]
        pts.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "window_radius", R)
        object.__setattr__(self, "dim", d)

    def __len__(self):
        return self.masses.size

    def __repr__(self):
        return f"AtomicMeasure(dim={self.dim}, atoms={len(self)}, window_radius={self.window_radius:g})"

    def _like(self, points, masses, window_radius=None, sep_radius="keep"):
        return AtomicMeasure(
            points,
            masses,
            self.window_radius if window_radius is None else window_radius,
            self.sep_radius if sep_radius == "keep" else sep_radius,
            dim=self.dim,
        )

    def _validated(self, points, masses, window_radius):
        """Copy for sorted, distinct points taken from ``self``; skips the checks."""
        out = object.__new__(AtomicMeasure)
        points = np.asarray(points)
        masses = np.asarray(masses, dtype=complex)
        points.setflags(write=False)
        masses.setflags(write=False)
        for name, value in (
            ("points", points),
            ("masses", masses),
            ("window_radius", float(window_radius)),
            ("sep_radius", self.sep_radius),
            ("dim", self.dim),
        ):
            object.__setattr__(out, name, value)
        return out

    def scaled(self, alpha):
        return self._validated(self.points, complex(alpha) * self.masses, self.window_radius)

    def with_masses(self, masses):
        m = np.atleast_1d(np.asarray(masses, dtype=complex)).ravel()
        if m.shape[0] != len(self):
            raise ValueError(f"{len(self)} points but {m.shape[0]} masses")
        return self._validated(self.points, m, self.window_radius)

    def restrict(self, radius):
        """Atoms in the closed ball of ``radius`` (the window shrinks accordingly)."""
        if not radius > 0:
            raise ValueError("window_radius must be positive")
        keep = np.linalg.norm(self.points, axis=1) <= radius
        return self._validated(self.points[keep], self.masses[keep], min(radius, self.window_radius))

    def total_variation(self):
        return float(np.abs(self.masses).sum())

    def mass_at(self, x, tol=1e-9):
        """Mass of the atom at ``x`` (0 when there is none)."""
        if not len(self):
            return 0j
        d, i = cKDTree(self.points).query(as_vector(x, self.dim))
        return complex(self.masses[i]) if d <= tol else 0j

    # -- serialization --------------------------------------------------------

    def to_dict(self):
        doc = {"dim": self.dim, "window_radius": self.window_radius}
        if self.sep_radius is not None:
            doc["sep_radius"] = float(self.sep_radius)
        doc["atoms"] = [
            {"point": p.tolist(), "re": float(c.real), "im": float(c.imag)} for p, c in zip(self.points, self.masses)
        ]
        return doc

    @classmethod
    def from_dict(cls, doc):
        for key in ("dim", "window_radius", "atoms"):
            if key not in doc:
                raise ValueError(f"measure document is missing field {key!r}")
        d = int(doc["dim"])
        atoms = doc["atoms"]
        pts = np.array([a["point"] for a in atoms], dtype=float).reshape(-1, d)
        m = np.array([complex(a.get("re", 1.0), a.get("im", 0.0)) for a in atoms], dtype=complex)
        return cls(pts, m, float(doc["window_radius"]), doc.get("sep_radius"), dim=d)

    def dumps(self):
        return dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(loads(text))


def _min_distance(pts):
    if pts.shape[0] < 2:
        return np.inf
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(d[:, 1].min())


def comb(coset, radius):
    """Unit masses at the points of ``coset`` inside the open ball ``B(0, radius)``."""
    pts = enumerate_in_ball(coset, radius)
    sep = coset.lattice.shortest_vector_length()
    return AtomicMeasure(pts, np.ones(pts.shape[0]), radius, sep, dim=coset.dim)


def translate(nu, t):
    """The shift ``nu_t`` defined by ``int g d(nu_t) = int g(x + t) nu(dx)``.

    Atoms move from ``l`` to ``l + t``; the window grows by ``|t|``.
    """
    t = as_vector(t, nu.dim)
    return nu._like(nu.points + t, nu.masses, nu.window_radius + float(np.linalg.norm(t)))


def pairing(nu, g):
    """``sum_l c_l g(l)``; ``g`` must accept an ``(n, d)`` array of points."""
    if not len(nu):
        return 0j
    vals = np.asarray(g(nu.points), dtype=complex).ravel()
    return complex(vals @ nu.masses)


def min_separation(nu):
    """Exact minimal distance between distinct atoms (``inf`` below two atoms)."""
    return _min_distance(nu.points)


def _sliding_sums(points, weights, centers, radius=1.0):
    """``sum_{|p - t| < radius} w_p`` for every center ``t``."""
    if points.shape[0] == 0:
        return np.zeros(centers.shape[0])
    if points.shape[1] == 1:
        x = points[:, 0]
        o = np.argsort(x)
        x = x[o]
        cw = np.concatenate([[0.0], np.cumsum(weights[o])])
        t = centers[:, 0]
        hi = np.searchsorted(x, t + radius, side="left")
        lo = np.searchsorted(x, t - radius, side="right")
        return cw[hi] - cw[lo]
    tp = cKDTree(points)
    out = np.zeros(centers.shape[0])
    step = 50_000
    for s in range(0, centers.shape[0], step):
        tc = cKDTree(centers[s : s + step])
        sdm = tc.sparse_distance_matrix(tp, radius, output_type="coo_matrix")
        inside = sdm.data < radius
        # coincident pairs have distance 0 and are dropped by the sparse format
        out[s : s + step] = np.bincount(sdm.row[inside], weights=weights[sdm.col[inside]], minlength=tc.n)
        dd, ii = tp.query(centers[s : s + step], k=1)
        hit = dd == 0
        sub = out[s : s + step]
        sub[hit] += weights[ii[hit]]
        out[s : s + step] = sub
    return out


def translation_bound(nu, pitch=GRID_PITCH):
    """Largest variation of ``nu`` in an open unit ball, over ball centers.

    In dimension one the maximum is exact: the windowed sum is piecewise
    constant between the breakpoints ``l +- 1`` and every open piece is probed
    at its midpoint. In higher dimension the centers are a grid of the given
    pitch over the window, the atoms themselves, and midpoints of atom pairs
    closer than 2, so the result is a sampled maximum.
    """
    if not len(nu):
        return 0.0
    w = np.abs(nu.masses)
    pts = nu.points
    if nu.dim == 1:
        bp = np.unique(np.concatenate([pts[:, 0] - 1.0, pts[:, 0] + 1.0]))
        cands = np.concatenate([(bp[:-1] + bp[1:]) / 2, pts[:, 0]]).reshape(-1, 1)
    else:
        lo = pts.min(axis=0) - 1.0
        hi = pts.max(axis=0) + 1.0
        axes = [np.arange(lo[j], hi[j] + pitch, pitch) for j in range(nu.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, nu.dim)
        pairs = cKDTree(pts).query_pairs(2.0, output_type="ndarray")
        mids = (pts[pairs[:, 0]] + pts[pairs[:, 1]]) / 2 if len(pairs) else np.zeros((0, nu.dim))
        cands = np.concatenate([grid, pts, mids])
    return float(_sliding_sums(pts, w, cands).max())


def growth_fit(nu):
    """Smallest ``C`` with ``|nu|(B(0, r)) <= C (1 + r)^d`` for ``r`` up to the window.

    The ratio peaks just past an atom radius, so those radii are the only
    candidates.
    """
    if nu.window_radius < 2:
        raise WindowError("growth_fit needs window_radius >= 2", required_radius=2.0)
    if not len(nu):
        return 0.0
    r = np.linalg.norm(nu.points, axis=1)
    o = np.argsort(r, kind="stable")
    r = r[o]
    cum = np.cumsum(np.abs(nu.masses)[o])
    # include every atom at the same radius
    last = np.searchsorted(r, r, side="right") - 1
    return float(np.max(cum[last] / (1.0 + r) ** nu.dim))


def uniform_growth_constant(nu):
    """``C`` with ``|nu|(B(t, r)) <= C (1 + r)^d`` for every center ``t``.

    Derived from the translation bound by covering a ball of radius ``r`` with
    cubes of side ``2 / sqrt(d)``, each inside an open unit ball.
    """
    d = nu.dim
    return translation_bound(nu) * ((1.0 + np.sqrt(d)) * (1 + 1e-9)) ** d


def read_points_csv(path):
    """Point set from a CSV file with one point per row."""
    pts = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    return pts


def write_points_csv(path, points):
    """One point per row; a flat array is a list of 1-d points."""
    pts = np.asarray(points, dtype=float)
    pts = pts.reshape(-1, 1) if pts.ndim == 1 else as_points(pts)
    np.savetxt(path, pts, delimiter=",", fmt="%.17g")


def from_points(points, masses=None, window_radius=None, sep_radius=None):
    """Measure on a bare point set; unit masses unless given."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if masses is None:
        masses = np.ones(pts.shape[0])
    if window_radius is None:
        window_radius = float(np.linalg.norm(pts, axis=1).max()) if pts.shape[0] else 1.0
    return AtomicMeasure(pts, masses, window_radius, sep_radius, dim=pts.shape[1])
