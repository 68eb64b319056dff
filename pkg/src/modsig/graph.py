"""Undirected weighted multigraphs, community assignments and degree splits.

Nodes are interned to dense indices in first-appearance order. Parallel
edge records are summed into one weight per unordered pair, so a
multi-edge count network and a weighted network share a representation.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError

__all__ = [
    "Graph",
    "CommunityAssignment",
    "DegreeDecomposition",
    "build_graph",
    "within_between_degrees",
    "degree_quartiles",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph with aggregated non-negative edge weights.

    Edges are stored once per unordered pair as three parallel arrays
    ``rows < cols`` sorted lexicographically by ``(row, col)``.

    Attributes
    ----------
    labels : tuple of str
        Node label for each dense index.
    rows, cols : ndarray of int64
        Endpoints of each stored edge, ``rows[e] < cols[e]``.
    weights : ndarray of float64
        Aggregated weight ``A_ij`` of each stored edge.
    degree : ndarray of float64
        ``d_i = sum_{j != i} A_ij``.
    total_degree : float
        ``sum_i d_i``, twice the total edge weight.
    """

    labels: tuple[str, ...]
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    degree: np.ndarray = field(init=False)
    total_degree: float = field(init=False)
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        rows = _frozen(np.asarray(self.rows, dtype=np.int64))
        cols = _frozen(np.asarray(self.cols, dtype=np.int64))
        weights = _frozen(np.asarray(self.weights, dtype=np.float64))
        degree = np.bincount(rows, weights, minlength=n) + np.bincount(cols, weights, minlength=n)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "degree", _frozen(degree))
        object.__setattr__(self, "total_degree", float(degree.sum()))
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @classmethod
    def from_arrays(cls, labels: Sequence[str], rows, cols, weights) -> Graph:
        """Build from index arrays, aggregating duplicates and dropping zero weights.

        Pairs may be given in either orientation. Self-loops are rejected.
        """
        n = len(labels)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if rows.shape != cols.shape or rows.shape != weights.shape:
            raise GraphError("rows, cols and weights must have the same length")
        if np.any(rows == cols):
            raise GraphError("self-loop in edge arrays")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
            raise GraphError("edge endpoint out of range")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise GraphError("edge weights must be finite and non-negative")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        code = lo * n + hi
        uniq, inv = np.unique(code, return_inverse=True)
        agg = np.bincount(inv, weights, minlength=uniq.size)
        keep = agg > 0
        uniq, agg = uniq[keep], agg[keep]
        return cls(tuple(labels), uniq // n, uniq % n, agg)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        """Number of node pairs carrying positive weight."""
        return int(self.weights.size)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def index_of(self, label: str) -> int:
        return self._index[label]

    def has_node(self, label: str) -> bool:
        return label in self._index

    def is_integer_valued(self) -> bool:
        return bool(np.all(self.weights == np.round(self.weights)))

    def isolated(self) -> np.ndarray:
        """Indices of nodes with zero degree."""
        return np.flatnonzero(self.degree == 0)

    def induced(self, nodes) -> Graph:
        """Subgraph on ``nodes`` (indices, kept in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        r, c = remap[self.rows], remap[self.cols]
        keep = (r >= 0) & (c >= 0)
        return Graph.from_arrays([self.labels[i] for i in nodes], r[keep], c[keep], self.weights[keep])

    def to_dense(self) -> np.ndarray:
        """Symmetric weight matrix with zero diagonal. O(n^2) memory."""
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.weights
        a[self.cols, self.rows] = self.weights
        return a

    def edge_records(self) -> list[tuple[str, str, float]]:
        return [
            (self.labels[i], self.labels[j], float(w))
            for i, j, w in zip(self.rows.tolist(), self.cols.tolist(), self.weights)
        ]


def build_graph(
    edge_records: Iterable[tuple[str, str] | tuple[str, str, float]],
    *,
    drop_self_loops: bool = False,
    nodes: Iterable[str] = (),
) -> Graph:
    """Intern labels and aggregate ``(u, v[, weight])`` records into a Graph.

    Missing weights default to 1. Nodes listed in ``nodes`` are interned
    first, so isolated nodes can be represented.

    Raises
    ------
    GraphError
        On a self-loop (unless ``drop_self_loops``) or on a negative or
        non-finite weight.
    """
    index: dict[str, int] = {}
    for lab in nodes:
        index.setdefault(str(lab), len(index))
    rows, cols, weights = [], [], []
    for k, rec in enumerate(edge_records):
        if len(rec) == 2:
            u, v = rec
            w = 1.0
        elif len(rec) == 3:
            u, v, w = rec
            w = float(w)
        else:
            raise GraphError(f"edge record {k} must have 2 or 3 fields, got {len(rec)}")
        if not math.isfinite(w) or w < 0:
            raise GraphError(f"edge record {k} ({u!r}, {v!r}): weight must be finite and >= 0, got {w}")
        u, v = str(u), str(v)
        if u == v:
            if drop_self_loops:
                index.setdefault(u, len(index))
                continue
            raise GraphError(f"edge record {k}: self-loop on node {u!r}")
        i = index.setdefault(u, len(index))
        j = index.setdefault(v, len(index))
        rows.append(i)
        cols.append(j)
        weights.append(w)
    return Graph.from_arrays(list(index), rows, cols, weights)


@dataclass(frozen=True, eq=False)
class CommunityAssignment:
    """Fixed partition of nodes into ``K`` groups.

    ``group_of[i]`` is a dense group index in ``[0, K)``; ``labels[k]`` is
    the covariate value that defined group ``k``.
    """

    group_of: np.ndarray
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        g = _frozen(np.asarray(self.group_of, dtype=np.int64).copy())
        object.__setattr__(self, "group_of", g)
        K = len(self.labels)
        if K < 1 or g.size < K:
            raise GraphError(f"need 1 <= K <= n, got K={K}, n={g.size}")
        if g.min() < 0 or g.max() >= K or np.unique(g).size != K:
            raise GraphError("group indices must be dense in [0, K)")

    @classmethod
    def from_values(cls, values: Sequence[Hashable]) -> CommunityAssignment:
        """Groups from per-node covariate values, numbered by first appearance."""
        lookup: dict[Hashable, int] = {}
        g = [lookup.setdefault(v, len(lookup)) for v in values]
        if not g:
            raise GraphError("empty assignment")
        return cls(np.asarray(g), tuple(lookup))

    @property
    def n(self) -> int:
        return int(self.group_of.size)

    @property
    def K(self) -> int:
        return len(self.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.group_of, minlength=self.K)

    def restrict(self, nodes) -> CommunityAssignment:
        """Assignment on a node subset; empty groups are removed."""
        values = [self.labels[k] for k in self.group_of[np.asarray(nodes, dtype=np.int64)]]
        return CommunityAssignment.from_values(values)

    def same_group(self, i: int, j: int) -> bool:
        return bool(self.group_of[i] == self.group_of[j])


@dataclass(frozen=True)
class DegreeDecomposition:
    d_within: np.ndarray
    d_between: np.ndarray


def _check_cover(g: Graph, a: CommunityAssignment):
    if a.n != g.n:
        raise GraphError(f"assignment covers {a.n} nodes but graph has {g.n}")


def within_between_degrees(g: Graph, a: CommunityAssignment) -> DegreeDecomposition:
    """Split each degree into weight to same-group and to other-group neighbours."""
    _check_cover(g, a)
    same = a.group_of[g.rows] == a.group_of[g.cols]
    w = np.where(same, g.weights, 0.0)
    d_w = np.bincount(g.rows, w, minlength=g.n) + np.bincount(g.cols, w, minlength=g.n)
    return DegreeDecomposition(d_w, g.degree - d_w)


def degree_quartiles(g: Graph) -> tuple[float, float, float]:
    """25th, 50th and 75th degree percentiles, linear interpolation between order statistics."""
    if g.n == 0:
        raise GraphError("degree quartiles of an empty graph")
    q1, q2, q3 = np.percentile(g.degree, [25, 50, 75])
    return float(q1), float(q2), float(q3)
