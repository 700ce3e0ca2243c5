"""Small array and serialization helpers shared by the modules."""

import json
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DimensionError


def as_points(x, dim=None):
    """Coerce ``x`` to a float array of shape ``(n, d)``.

    A bare scalar or 1-D array is read as a list of points when ``dim == 1``
    and as a single point otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if dim == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(f"expected points of shape (n, d), got {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


def is_single_point(x, dim):
    """Whether ``x`` denotes one point (as opposed to a list of points)."""
    nd = np.ndim(x)
    return nd == 0 or (nd == 1 and dim > 1)


def as_vector(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"expected a {dim}-vector, got length {v.shape[0]}")
    return v


def lex_order(points):
    """Indices sorting the rows of ``points`` lexicographically."""
    points = np.asarray(points)
    if points.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    keys = tuple(points[:, j] for j in range(points.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


def cluster_points(points, tol):
    """Label rows of ``points`` so that rows within ``tol`` share a label.

    Labels are transitive, so a chain of close points collapses to one cluster.
    Points are first binned into cells of diameter ``tol``; cells whose
    representatives lie within ``3 tol`` are then joined, so points up to
    about ``5 tol`` apart may share a label. Binning keeps dense clusters
    (thousands of near-identical points) cheap. Returns ``(labels, n_clusters)``.
    """
    n = points.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    if tol <= 0:
        _, labels = np.unique(points, axis=0, return_inverse=True)
        labels = labels.ravel()
        return labels, int(labels.max()) + 1
    cell = tol / np.sqrt(points.shape[1])
    keys = np.floor(points / cell).astype(np.int64)
    if keys.shape[1] == 1:
        keys = keys.ravel()
    _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    reps = points[first]
    m = reps.shape[0]
    pairs = cKDTree(reps).query_pairs(3 * tol, output_type="ndarray")
    if not len(pairs):
        return inv, m
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    ncomp, lab = connected_components(graph, directed=False)
    return lab[inv], ncomp


def merge_points(points, values, tol):
    """Identify points within ``tol`` and add their values.

    Returns ``(points, values)`` sorted lexicographically; each cluster is
    represented by its lexicographically smallest member.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=complex)
    n, d = points.shape
    if n == 0:
        return points.reshape(0, d), values.reshape(0)
    labels, ncomp = cluster_points(points, tol)
    order = lex_order(points)
    lab_sorted = labels[order]
    _, first = np.unique(lab_sorted, return_index=True)
    # representative index per label, in label order
    reps = np.empty(ncomp, dtype=np.int64)
    reps[lab_sorted[first]] = order[first]
    summed = np.bincount(labels, weights=values.real, minlength=ncomp) + 1j * np.bincount(
        labels, weights=values.imag, minlength=ncomp
    )
    out_pts = points[reps]
    o = lex_order(out_pts)
    return out_pts[o], summed[o]


# --- serialization -------------------------------------------------------------


def _fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = f"{x:.17g}"
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=1):
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def loads(text):
    return json.loads(text)
