"""Weighted digraphs, switching topology schedules and their Laplacians.

Convention: ``weights[i, j] > 0`` means agent ``i`` receives from agent ``j``,
i.e. there is an arc ``j -> i``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "WeightedDigraph",
    "TopologySchedule",
    "laplacian",
    "check_laplacian",
    "row_sum_tolerance",
    "has_spanning_tree",
    "graph_at",
    "spanning_tree_gap_intervals",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedDigraph:
    """Nonnegative arc-weight matrix; self-loops are dropped on construction."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError(f"weights must be a non-empty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("arc weights must be nonnegative")
        np.fill_diagonal(w, 0.0)
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self):
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


@dataclass(frozen=True)
class TopologySchedule:
    """Piecewise-constant ``W(t)``: segment ``k`` is active on
    ``[t_start[k], t_start[k+1])``; the last one up to ``horizon_end``."""

    segments: tuple
    horizon_end: float

    def __post_init__(self):
        segs = tuple((float(t), g if isinstance(g, WeightedDigraph) else WeightedDigraph(g))
                     for t, g in self.segments)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        starts = [t for t, _ in segs]
        if starts[0] != 0.0:
            raise ValueError("first segment must start at t = 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be strictly increasing")
        if not float(self.horizon_end) > starts[-1]:
            raise ValueError("horizon_end must exceed the last segment start")
        if len({g.n for _, g in segs}) != 1:
            raise ValueError("all segment graphs must have the same vertex count")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "horizon_end", float(self.horizon_end))

    @classmethod
    def constant(cls, graph, horizon_end):
        return cls(((0.0, graph),), horizon_end)

    @property
    def n(self):
        return self.segments[0][1].n

    @property
    def starts(self):
        return [t for t, _ in self.segments]

    def segment_index(self, t):
        """Index of the segment active at ``t``; times past the horizon map to the last."""
        if t < 0:
            raise ValueError(f"time {t} precedes the schedule start")
        return bisect.bisect_right(self.starts, t) - 1

    def bounds(self, k):
        """``(start, end)`` of segment ``k``; the last one ends at ``horizon_end``."""
        start = self.segments[k][0]
        end = self.segments[k + 1][0] if k + 1 < len(self.segments) else self.horizon_end
        return start, end


def laplacian(g):
    """``L = diag(W 1) - W`` for a :class:`WeightedDigraph`."""
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def row_sum_tolerance(lap):
    return 1e-12 * max(1.0, float(np.linalg.norm(lap)))


def check_laplacian(lap, tol=None):
    """Raise ``ValueError`` unless every row of ``lap`` sums to zero."""
    lap = np.asarray(lap)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ValueError(f"Laplacian must be square, got shape {lap.shape}")
    if tol is None:
        tol = row_sum_tolerance(lap)
    resid = float(np.max(np.abs(lap.sum(axis=1)))) if lap.size else 0.0
    if resid > tol:
        raise ValueError(f"rows do not sum to zero (max |row sum| = {resid:.3e}, tol {tol:.3e})")
    return lap


def has_spanning_tree(g):
    """True iff some vertex reaches every other along directed arcs.

    Condenses the graph into strongly connected components; a directed
    spanning tree exists iff exactly one component receives no arc from
    the others.
    """
    w = g.weights
    if g.n == 1:
        return True
    # csgraph edge (r, c) means r -> c; arc j -> i carries weight w[i, j]
    adj = (w.T > 0).astype(np.int8)
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    receives = np.zeros(ncomp, dtype=bool)
    dst, src = np.nonzero(w > 0)
    cross = labels[dst] != labels[src]
    receives[labels[dst[cross]]] = True
    return int(np.count_nonzero(~receives)) == 1


def graph_at(schedule, t):
    """Graph active at time ``t`` in ``[0, horizon_end]`` (segments are left-closed)."""
    if not 0.0 <= t <= schedule.horizon_end:
        raise ValueError(f"t = {t} outside [0, {schedule.horizon_end}]")
    return schedule.segments[schedule.segment_index(t)][1]


def spanning_tree_gap_intervals(schedule):
    """Maximal positive-length intervals on which the topology has no spanning tree.

    Adjacent disconnected segments are merged.
    """
    gaps = []
    for k, (_, g) in enumerate(schedule.segments):
        if has_spanning_tree(g):
            continue
        start, end = schedule.bounds(k)
        if end <= start:
            continue
        if gaps and gaps[-1][1] == start:
            gaps[-1] = (gaps[-1][0], end)
        else:
            gaps.append((start, end))
    return gaps
