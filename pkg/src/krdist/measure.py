"""Finite nonnegative measures on a PointSet, stored sparsely."""

from __future__ import annotations

import numpy as np

from .space import Covering, PointSet


class DiscreteMeasure:
    """Sparse nonnegative measure: (index, weight) pairs over a PointSet.

    Indices are identities: atoms at identical coordinates are kept apart
    unless merged explicitly (see ``merge_duplicate_atoms``).
    """

    def __init__(self, space: PointSet, indices, weights):
        indices = np.asarray(indices, dtype=int)
        weights = np.asarray(weights, dtype=float)
        if indices.shape != weights.shape or indices.ndim != 1:
            raise ValueError("indices and weights must be 1-d and equal length")
        if indices.size and (indices.min() < 0 or indices.max() >= len(space)):
            raise ValueError("support index out of range")
        if len(np.unique(indices)) != len(indices):
            raise ValueError("duplicate support indices")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        self.space = space
        self.indices = indices
        self.weights = weights

    @property
    def mass(self):
        return float(self.weights.sum())

    def weight_at(self, index):
        hit = np.flatnonzero(self.indices == index)
        return float(self.weights[hit[0]]) if hit.size else 0.0

    def __repr__(self):
        return f"DiscreteMeasure({len(self.indices)} atoms, mass={self.mass:.6g})"


def total_mass(m: DiscreteMeasure) -> float:
    return m.mass


def scale(m: DiscreteMeasure, a: float) -> DiscreteMeasure:
    if a < 0:
        raise ValueError("scale factor must be nonnegative")
    return DiscreteMeasure(m.space, m.indices.copy(), m.weights * a)


def project_to_covering(m: DiscreteMeasure, cov: Covering) -> DiscreteMeasure:
    """Push each atom onto the covering center of its Voronoi cell.

    Output is supported on the covering centers and preserves total mass
    (up to accumulation rounding).
    """
    if cov.space is not m.space:
        raise ValueError("mismatched space")
    centers = np.asarray(cov.center_indices, dtype=int)
    center_pos = {int(c): k for k, c in enumerate(centers)}
    out = np.zeros(len(centers))
    for idx, w in zip(m.indices, m.weights):
        out[center_pos[int(cov.assignment[idx])]] += w
    return DiscreteMeasure(m.space, centers.copy(), out)


def tv_distance(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    """Total variation distance sup_B |m1(B) - m2(B)|.

    Equals the larger of the summed positive and summed negative parts of
    the signed weight difference.
    """
    if m1.space is not m2.space:
        raise ValueError("mismatched space")
    union = np.union1d(m1.indices, m2.indices)
    w1 = np.zeros(len(union))
    w2 = np.zeros(len(union))
    w1[np.searchsorted(union, m1.indices)] = m1.weights
    w2[np.searchsorted(union, m2.indices)] = m2.weights
    diff = w1 - w2
    pos = float(diff[diff > 0].sum())
    neg = float(-diff[diff < 0].sum())
    return max(pos, neg)


def merge_duplicate_atoms(m: DiscreteMeasure) -> DiscreteMeasure:
    """Merge atoms sitting at exactly duplicated points (distance zero).

    Merged weight lands on the lowest involved index.
    """
    if not m.indices.size:
        return DiscreteMeasure(m.space, m.indices.copy(), m.weights.copy())
    if m.space.has_coordinates:
        coords = m.space.points[m.indices]
        _, inv = np.unique(coords, axis=0, return_inverse=True)
    else:
        D = m.space.pairwise(m.indices, m.indices)
        n = len(m.indices)
        group = np.arange(n)
        for i in range(n):
            same = np.flatnonzero(D[i] == 0.0)
            group[same] = group[same].min()
        _, inv = np.unique(group, return_inverse=True)
    n_groups = inv.max() + 1
    idx_out = np.full(n_groups, np.iinfo(int).max)
    w_out = np.zeros(n_groups)
    for g, idx, w in zip(inv, m.indices, m.weights):
        idx_out[g] = min(idx_out[g], idx)
        w_out[g] += w
    order = np.argsort(idx_out)
    return DiscreteMeasure(m.space, idx_out[order], w_out[order])
