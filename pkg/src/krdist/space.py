"""Finite metric spaces: point sets, greedy coverings, Voronoi partitions.

A space is given either by coordinates (Euclidean metric, distances computed
on demand) or by an explicit symmetric distance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


class PointSet:
    """Finite metric space.

    Exactly one of ``points`` / ``dmat`` must be given.

    Args:
        points: (n, d) array of coordinates; metric is Euclidean.
        dmat: (n, n) symmetric nonnegative distance matrix with zero diagonal.
        dimension_hint: optional ambient dimension, stored as-is.
    """

    def __init__(self, points=None, dmat=None, dimension_hint=None):
        if (points is None) == (dmat is None):
            raise ValueError("give exactly one of points / dmat")
        if points is not None:
            pts = np.atleast_2d(np.asarray(points, dtype=float))
            if pts.size == 0:
                raise ValueError("empty space")
            if not np.all(np.isfinite(pts)):
                raise ValueError("non-finite coordinates")
            self.points = pts
            self._dmat = None
        else:
            D = np.asarray(dmat, dtype=float)
            if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
                raise ValueError("distance matrix must be square and nonempty")
            if not np.all(np.isfinite(D)) or np.any(D < 0):
                raise ValueError("distances must be finite and nonnegative")
            if not np.allclose(D, D.T, rtol=0, atol=1e-12 * (1 + D.max())):
                raise ValueError("distance matrix must be symmetric")
            if np.any(np.abs(np.diag(D)) > 0):
                raise ValueError("distance matrix diagonal must be zero")
            self.points = None
            self._dmat = 0.5 * (D + D.T)
        self.dimension_hint = dimension_hint

    def __len__(self):
        if self.points is not None:
            return self.points.shape[0]
        return self._dmat.shape[0]

    @property
    def n_points(self):
        return len(self)

    @property
    def has_coordinates(self):
        return self.points is not None

    def distance(self, i, j):
        return float(self.pairwise([i], [j])[0, 0])

    def pairwise(self, rows, cols):
        """Distance submatrix between the index lists ``rows`` and ``cols``."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        if self._dmat is not None:
            return self._dmat[np.ix_(rows, cols)]
        return cdist(self.points[rows], self.points[cols])

    def distances_from(self, i):
        """Distances from point ``i`` to every point, shape (n,)."""
        if self._dmat is not None:
            return self._dmat[i].copy()
        return np.linalg.norm(self.points - self.points[i], axis=1)

    def diameter(self, chunk=2048):
        """Largest pairwise distance (chunked so big coordinate sets fit)."""
        n = len(self)
        if self._dmat is not None:
            return float(self._dmat.max())
        best = 0.0
        for start in range(0, n, chunk):
            block = cdist(self.points[start:start + chunk], self.points)
            best = max(best, float(block.max()))
        return best


@dataclass
class Covering:
    """A radius-``radius`` covering of a PointSet by a subset of its points.

    ``assignment[k]`` is the covering-center point index owning point ``k``;
    the cells partition the index set.
    """

    space: PointSet
    center_indices: np.ndarray
    radius: float
    assignment: np.ndarray

    @property
    def n_cells(self):
        return len(self.center_indices)

    def cells(self):
        """List of index arrays, one per center, in center order."""
        out = []
        for c in self.center_indices:
            out.append(np.flatnonzero(self.assignment == c))
        return out


def _farthest_point_sequence(space, subset=None):
    """Greedy farthest-point order of ``subset`` (default: all points).

    Seeded at the first subset element; ties broken by lowest index
    (np.argmax picks the first maximum).  Returns (order, radii) where
    radii[k] is the covering radius achieved by the first k+1 centers.
    """
    if subset is None:
        subset = np.arange(len(space))
    subset = np.asarray(subset, dtype=int)
    ns = len(subset)
    order = np.empty(ns, dtype=int)
    radii = np.empty(ns, dtype=float)
    order[0] = subset[0]
    best = space.pairwise([subset[0]], subset)[0]
    radii[0] = best.max()
    for k in range(1, ns):
        nxt = int(np.argmax(best))
        order[k] = subset[nxt]
        d_new = space.pairwise([subset[nxt]], subset)[0]
        np.minimum(best, d_new, out=best)
        radii[k] = best.max()
    return order, radii


def greedy_covering(space: PointSet, eps: float) -> Covering:
    """Farthest-point greedy covering at radius ``eps``.

    Every point ends within ``eps`` of its assigned center, and the center
    count is at most the eps/2-packing number.  Deterministic: seeded at
    index 0, ties by lowest index.
    """
    if len(space) == 0:
        raise ValueError("empty space")
    if eps <= 0:
        raise ValueError("eps must be positive")
    order, radii = _farthest_point_sequence(space)
    # first k with covering radius <= eps
    k = int(np.argmax(radii <= eps)) + 1 if np.any(radii <= eps) else len(order)
    centers = order[:k]
    return voronoi_partition(space, centers, radius=eps)


def voronoi_partition(space: PointSet, centers, radius=None) -> Covering:
    """Assign every point to its nearest center.

    Ties go to the center appearing earliest in ``centers``, matching a
    sequential carve-out of cells.  ``radius`` defaults to the realized
    maximum point-to-center distance.
    """
    centers = np.asarray(centers, dtype=int)
    if centers.size == 0:
        raise ValueError("centers must be nonempty")
    if np.any(centers < 0) or np.any(centers >= len(space)):
        raise ValueError("center index out of range")
    D = space.pairwise(centers, np.arange(len(space)))
    pos = np.argmin(D, axis=0)  # first minimum = earliest center wins ties
    assignment = centers[pos]
    realized = float(D[pos, np.arange(len(space))].max())
    return Covering(space=space, center_indices=centers,
                    radius=realized if radius is None else float(radius),
                    assignment=assignment)


def covering_number_profile(space: PointSet, eps_grid):
    """Greedy cover sizes over an ascending grid of radii.

    One farthest-point sweep serves all radii, so sizes are exactly
    nonincreasing in eps.
    """
    eps_grid = list(eps_grid)
    if len(eps_grid) == 0:
        raise ValueError("empty eps grid")
    arr = np.asarray(eps_grid, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("eps values must be positive")
    if np.any(np.diff(arr) < 0):
        raise ValueError("eps grid must be ascending")
    _, radii = _farthest_point_sequence(space)
    out = []
    for eps in arr:
        covered = radii <= eps
        size = int(np.argmax(covered)) + 1 if np.any(covered) else len(radii)
        out.append((float(eps), size))
    return out


@dataclass
class CoveringExponentFit:
    alpha_hat: float
    r2: float
    n_used: int


def fit_covering_exponent(profile) -> CoveringExponentFit:
    """Log-log slope of cover size against radius; alpha_hat = -slope.

    Only the exponent is estimated; the multiplicative constant of the
    covering bound is an upper-bound constant and is not reported.
    """
    eps = np.array([e for e, _ in profile], dtype=float)
    size = np.array([s for _, s in profile], dtype=float)
    keep = size > 0
    eps, size = eps[keep], size[keep]
    if len(eps) < 2:
        raise ValueError("need at least two profile points")
    x, y = np.log(eps), np.log(size)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / tss if tss > 0 else 1.0
    return CoveringExponentFit(alpha_hat=float(-slope), r2=r2, n_used=len(eps))


def check_metric_triples(space: PointSet, n_samples: int, seed: int = 0):
    """Sample triples and return the worst triangle-inequality defect.

    Nonpositive means the (sampled) triangle inequality holds.
    """
    rng = np.random.default_rng(seed)
    n = len(space)
    worst = -np.inf
    for _ in range(n_samples):
        i, j, k = rng.integers(0, n, size=3)
        d_ij = space.distance(i, j)
        d_ik = space.distance(i, k)
        d_kj = space.distance(k, j)
        worst = max(worst, d_ij - (d_ik + d_kj))
    return worst
