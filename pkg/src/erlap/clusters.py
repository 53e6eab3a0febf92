"""Connected-cluster decomposition, classification, and census statistics.

A cluster is a maximal connected subgraph; isolated vertices count as
one-vertex clusters.  Decomposition uses union-find (path compression,
union by size) followed by vectorized relabeling, so per-graph cost stays
near-linear and the heavy lifting downstream is left to the eigensolves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .ensemble import Graph, degree_sequence

__all__ = [
    "Cluster",
    "ClassFlags",
    "ClusterDecomposition",
    "CensusAccumulator",
    "CensusReport",
    "decompose",
    "classify",
    "census",
    "cluster_of_vertex",
]


class ClassFlags(NamedTuple):
    is_isolated: bool
    is_tree: bool
    is_linear_chain: bool
    is_cyclic: bool


@dataclass(frozen=True)
class Cluster:
    """One maximal connected cluster in local coordinates.

    ``vertices`` holds the global vertex ids sorted ascending; ``edges``
    holds the internal edges re-indexed to 0..size-1 (position in the sorted
    vertex list), canonical i < j rows in lexicographic order.
    """

    vertices: np.ndarray
    edges: np.ndarray
    is_isolated: bool
    is_tree: bool
    is_linear_chain: bool
    is_cyclic: bool

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def local_degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.size).astype(np.int64)

    def flags(self) -> ClassFlags:
        return ClassFlags(self.is_isolated, self.is_tree, self.is_linear_chain, self.is_cyclic)

    def __repr__(self) -> str:
        return f"Cluster(size={self.size}, edges={self.n_edges})"


def classify(cluster: Cluster) -> ClassFlags:
    """Recompute class flags from the cluster's own vertex/edge data.

    A connected cluster on n vertices is a tree iff it has n-1 internal
    edges (single vertices are degenerate trees); a linear chain is a tree
    with n >= 2 and no vertex of degree > 2, leaving exactly two endpoints
    of degree 1 and n-2 interior vertices of degree 2.
    """
    n = cluster.size
    m = cluster.n_edges
    is_isolated = n == 1
    is_tree = m == n - 1
    is_cyclic = m >= n
    is_linear = bool(is_tree and n >= 2 and cluster.local_degrees().max() <= 2)
    return ClassFlags(is_isolated, is_tree, is_linear, is_cyclic)


def _make_cluster(vertices: np.ndarray, local_edges: np.ndarray) -> Cluster:
    vertices = np.ascontiguousarray(vertices, dtype=np.int64)
    local_edges = np.ascontiguousarray(local_edges, dtype=np.int64).reshape(-1, 2)
    vertices.setflags(write=False)
    local_edges.setflags(write=False)
    n = vertices.shape[0]
    m = local_edges.shape[0]
    is_isolated = n == 1
    is_tree = m == n - 1
    is_cyclic = m >= n
    if is_tree and n >= 2:
        degs = np.bincount(local_edges.ravel(), minlength=n)
        is_linear = bool(degs.max() <= 2)
    else:
        is_linear = False
    return Cluster(vertices, local_edges, is_isolated, is_tree, is_linear, is_cyclic)


class ClusterDecomposition:
    """Partition of a graph into its maximal connected clusters.

    Clusters are numbered 0..K-1 by ascending smallest member vertex.  The
    per-vertex labels and per-cluster size/edge-count arrays are computed
    eagerly (cheap, vectorized); full :class:`Cluster` records are built
    lazily because hot loops (census, batched eigensolves) only need the
    arrays.
    """

    def __init__(self, graph: Graph, labels: np.ndarray):
        n = graph.n
        k = int(labels.max()) + 1 if n else 0
        self.graph = graph
        self.labels = labels
        self.n_clusters = k
        self.sizes = np.bincount(labels, minlength=k).astype(np.int64)
        edges = graph.edges
        self.edge_labels = labels[edges[:, 0]] if edges.shape[0] else np.empty(0, dtype=np.int64)
        self.edge_counts = np.bincount(self.edge_labels, minlength=k).astype(np.int64)
        # vertex_order groups vertices by cluster, ascending inside each cluster
        self.vertex_order = np.argsort(labels, kind="stable").astype(np.int64)
        self.vertex_starts = np.concatenate(([0], np.cumsum(self.sizes))).astype(np.int64)
        pos = np.empty(n, dtype=np.int64)
        pos[self.vertex_order] = np.arange(n, dtype=np.int64) - np.repeat(
            self.vertex_starts[:-1], self.sizes
        )
        self.local_index = pos
        self.edge_order = np.argsort(self.edge_labels, kind="stable").astype(np.int64)
        self.edge_starts = np.concatenate(([0], np.cumsum(self.edge_counts))).astype(np.int64)
        ordered = edges[self.edge_order] if edges.shape[0] else edges
        # local_edges rows follow edge_order (grouped by cluster), not the
        # graph's original edge order; edge_labels_grouped is the matching
        # per-row cluster label
        self.local_edges = pos[ordered] if ordered.shape[0] else np.empty((0, 2), dtype=np.int64)
        self.edge_labels_grouped = (
            self.edge_labels[self.edge_order] if edges.shape[0] else self.edge_labels
        )
        self._flag_arrays = None
        self._clusters = None

    def class_flag_arrays(self):
        """Boolean arrays (isolated, tree, linear, cyclic) indexed by cluster."""
        if self._flag_arrays is None:
            deg = degree_sequence(self.graph)
            max_deg = np.zeros(self.n_clusters, dtype=np.int64)
            np.maximum.at(max_deg, self.labels, deg)
            isolated = self.sizes == 1
            tree = self.edge_counts == self.sizes - 1
            linear = tree & (self.sizes >= 2) & (max_deg <= 2)
            cyclic = self.edge_counts >= self.sizes
            self._flag_arrays = (isolated, tree, linear, cyclic)
        return self._flag_arrays

    def cluster(self, k: int) -> Cluster:
        if not 0 <= k < self.n_clusters:
            raise IndexError(f"cluster index {k} out of range")
        vs, ve = self.vertex_starts[k], self.vertex_starts[k + 1]
        es, ee = self.edge_starts[k], self.edge_starts[k + 1]
        return _make_cluster(self.vertex_order[vs:ve], self.local_edges[es:ee])

    @property
    def clusters(self) -> tuple[Cluster, ...]:
        if self._clusters is None:
            self._clusters = tuple(self.cluster(k) for k in range(self.n_clusters))
        return self._clusters

    def cluster_of_vertex(self, v: int) -> Cluster:
        if not 0 <= v < self.graph.n:
            raise ValueError(f"vertex {v} out of range for n={self.graph.n}")
        return self.cluster(int(self.labels[v]))

    def __repr__(self) -> str:
        return f"ClusterDecomposition(n={self.graph.n}, clusters={self.n_clusters})"


def decompose(g: Graph) -> ClusterDecomposition:
    """Union-find partition: vertices share a cluster iff a path joins them."""
    n = g.n
    parent = list(range(n))
    size = [1] * n
    for a, b in g.edges.tolist():
        # find with path halving
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    roots = np.asarray(parent, dtype=np.int64)
    while True:
        jumped = roots[roots]
        if np.array_equal(jumped, roots):
            break
        roots = jumped
    uniq, inverse = np.unique(roots, return_inverse=True)
    # relabel clusters by their smallest member so numbering is canonical
    first_vertex = np.full(uniq.shape[0], n, dtype=np.int64)
    np.minimum.at(first_vertex, inverse, np.arange(n, dtype=np.int64))
    rank = np.empty(uniq.shape[0], dtype=np.int64)
    rank[np.argsort(first_vertex)] = np.arange(uniq.shape[0], dtype=np.int64)
    return ClusterDecomposition(g, rank[inverse])


def cluster_of_vertex(d: ClusterDecomposition, v: int) -> Cluster:
    """The unique cluster containing vertex ``v``."""
    return d.cluster_of_vertex(v)


def _grow(arr: np.ndarray, length: int) -> np.ndarray:
    if arr.shape[0] >= length:
        return arr
    out = np.zeros(length, dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


class CensusAccumulator:
    """Order-independent accumulation of per-size cluster counts.

    All counters are integers, so merging partial accumulators is exact,
    associative, and commutative; parallel reductions over realizations
    cannot change the result.
    """

    def __init__(self, n_vertices: int, edge_prob: float):
        self.n_vertices = int(n_vertices)
        self.edge_prob = float(edge_prob)
        self.n_reps = 0
        cap = 64
        self.clusters_by_size = np.zeros(cap, dtype=np.int64)
        self.trees_by_size = np.zeros(cap, dtype=np.int64)
        self.linear_by_size = np.zeros(cap, dtype=np.int64)
        self.sq_clusters_by_size = np.zeros(cap, dtype=np.int64)
        self.total_clusters = 0
        self.sq_total_clusters = 0
        self.vertices_on_trees = 0

    def add(self, d: ClusterDecomposition) -> None:
        if d.graph.n != self.n_vertices:
            raise ValueError(
                f"mixed ensembles: accumulator has N={self.n_vertices}, got N={d.graph.n}"
            )
        _, tree, linear, _ = d.class_flag_arrays()
        counts = np.bincount(d.sizes)
        need = counts.shape[0]
        self._ensure(need)
        self.clusters_by_size[:need] += counts
        self.sq_clusters_by_size[:need] += counts * counts
        tcounts = np.bincount(d.sizes[tree], minlength=need)
        self.trees_by_size[: tcounts.shape[0]] += tcounts
        lcounts = np.bincount(d.sizes[linear], minlength=need)
        self.linear_by_size[: lcounts.shape[0]] += lcounts
        self.total_clusters += int(d.n_clusters)
        self.sq_total_clusters += int(d.n_clusters) ** 2
        self.vertices_on_trees += int(d.sizes[tree].sum())
        self.n_reps += 1

    def _ensure(self, length: int) -> None:
        if length > self.clusters_by_size.shape[0]:
            self.clusters_by_size = _grow(self.clusters_by_size, length)
            self.trees_by_size = _grow(self.trees_by_size, length)
            self.linear_by_size = _grow(self.linear_by_size, length)
            self.sq_clusters_by_size = _grow(self.sq_clusters_by_size, length)

    def merge(self, other: "CensusAccumulator") -> None:
        if (self.n_vertices, self.edge_prob) != (other.n_vertices, other.edge_prob):
            raise ValueError("cannot merge censuses over different (N, p) ensembles")
        self._ensure(other.clusters_by_size.shape[0])
        n = other.clusters_by_size.shape[0]
        self.clusters_by_size[:n] += other.clusters_by_size
        self.trees_by_size[:n] += other.trees_by_size
        self.linear_by_size[:n] += other.linear_by_size
        self.sq_clusters_by_size[:n] += other.sq_clusters_by_size
        self.total_clusters += other.total_clusters
        self.sq_total_clusters += other.sq_total_clusters
        self.vertices_on_trees += other.vertices_on_trees
        self.n_reps += other.n_reps

    def report(self) -> "CensusReport":
        top = int(np.max(np.nonzero(self.clusters_by_size)[0])) + 1 if self.total_clusters else 1
        return CensusReport(
            n_vertices=self.n_vertices,
            edge_prob=self.edge_prob,
            n_reps=self.n_reps,
            clusters_by_size=self.clusters_by_size[:top].copy(),
            trees_by_size=self.trees_by_size[:top].copy(),
            linear_by_size=self.linear_by_size[:top].copy(),
            sq_clusters_by_size=self.sq_clusters_by_size[:top].copy(),
            total_clusters=self.total_clusters,
            vertices_on_trees=self.vertices_on_trees,
        )


@dataclass(frozen=True)
class CensusReport:
    """Aggregated cluster census over ``n_reps`` realizations of one ensemble.

    Arrays are indexed by cluster size (index 0 unused).  The empirical
    number density tau_hat(n) is (mean clusters of size n per realization)/N;
    the size distribution of the cluster covering a fixed vertex follows as
    n * N * density, which ties the two counting conventions together.
    """

    n_vertices: int
    edge_prob: float
    n_reps: int
    clusters_by_size: np.ndarray
    trees_by_size: np.ndarray
    linear_by_size: np.ndarray
    sq_clusters_by_size: np.ndarray
    total_clusters: int
    vertices_on_trees: int

    def __post_init__(self):
        if self.n_reps < 1:
            raise ValueError("census needs at least one realization")
        if np.any(self.linear_by_size > self.trees_by_size) or np.any(
            self.trees_by_size > self.clusters_by_size
        ):
            raise ValueError("inconsistent census counts (linear <= tree <= total violated)")
        sizes = np.arange(self.clusters_by_size.shape[0], dtype=np.int64)
        if int((sizes * self.clusters_by_size).sum()) != self.n_vertices * self.n_reps:
            raise ValueError("census does not cover all vertices")

    @property
    def max_size(self) -> int:
        return self.clusters_by_size.shape[0] - 1

    def tau_hat(self) -> np.ndarray:
        """Empirical mean number density of clusters per size (index = size)."""
        return self.clusters_by_size / (self.n_reps * self.n_vertices)

    def tau_hat_se(self) -> np.ndarray:
        """Standard error of tau_hat across realizations (NaN when R == 1)."""
        r = self.n_reps
        out = np.full(self.clusters_by_size.shape[0], np.nan)
        if r < 2:
            return out
        s1 = self.clusters_by_size.astype(np.float64)
        s2 = self.sq_clusters_by_size.astype(np.float64)
        var = (s2 - s1 * s1 / r) / (r - 1)
        np.maximum(var, 0.0, out=var)
        return np.sqrt(var / r) / self.n_vertices

    def vertex_size_prob_hat(self) -> np.ndarray:
        """Empirical distribution of the size of a fixed vertex's cluster.

        Enumeration invariance relates the two counting conventions:
        P{size = n} equals n times the per-size cluster density tau_hat(n).
        """
        sizes = np.arange(self.clusters_by_size.shape[0], dtype=np.float64)
        return sizes * self.tau_hat()

    def tree_fraction(self) -> float:
        """Fraction of all vertex slots lying on tree clusters."""
        return self.vertices_on_trees / (self.n_reps * self.n_vertices)

    def mean_cluster_density(self) -> float:
        """Mean K/N over the accumulated realizations."""
        return self.total_clusters / (self.n_reps * self.n_vertices)


def census(
    decompositions: Iterable[ClusterDecomposition], edge_prob: float
) -> CensusReport:
    """Aggregate a stream of decompositions sharing one (N, p) ensemble."""
    acc = None
    for d in decompositions:
        if acc is None:
            acc = CensusAccumulator(d.graph.n, edge_prob)
        acc.add(d)
    if acc is None:
        raise ValueError("census needs at least one decomposition")
    return acc.report()
