"""Per-cluster Laplacian spectra, whole-graph spectra, IDS estimation, moments.

The graph Laplacian L = D - A is block diagonal over clusters, so the graph
spectrum is the multiset union of small per-cluster eigenproblems.  Clusters
are grouped by size and solved as stacked dense symmetric eigenproblems,
which keeps the LAPACK loop in C even when a realization holds thousands of
tiny clusters.  Each connected cluster has a one-dimensional kernel; the
smallest computed eigenvalue is replaced by an exact 0.0 so that zero counts
(and hence the spectral value at the lower edge) never depend on a floating
point threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .clusters import Cluster, ClusterDecomposition, decompose
from .ensemble import Graph, GraphSpec, degree_sequence, sample_graph

__all__ = [
    "EigensolverError",
    "ClusterSpectrum",
    "GraphSpectrum",
    "IdsEstimate",
    "MomentSamples",
    "laplacian_of_cluster",
    "adjacency_of_cluster",
    "quadratic_form",
    "eigenvalues_cluster",
    "path_emin_reference",
    "graph_spectrum",
    "cluster_min_gaps",
    "empirical_ids",
    "spectral_moment",
    "moment_samples",
]

DEFAULT_SIZE_CAP = 2000
MAX_MOMENT_POWER = 12


class EigensolverError(RuntimeError):
    """Diagnostic eigensolver failure carrying the offending cluster."""

    def __init__(self, message: str, cluster: Cluster | None = None):
        super().__init__(message)
        self.cluster = cluster


def laplacian_of_cluster(c: Cluster) -> np.ndarray:
    """Dense integer Laplacian D - A of a cluster in local coordinates."""
    n = c.size
    lap = np.zeros((n, n), dtype=np.int64)
    if c.n_edges:
        i, j = c.edges[:, 0], c.edges[:, 1]
        lap[i, j] = -1
        lap[j, i] = -1
        deg = c.local_degrees()
        lap[np.arange(n), np.arange(n)] = deg
    return lap


def adjacency_of_cluster(c: Cluster) -> np.ndarray:
    """Dense 0/1 adjacency matrix of a cluster in local coordinates."""
    n = c.size
    adj = np.zeros((n, n), dtype=np.int64)
    if c.n_edges:
        i, j = c.edges[:, 0], c.edges[:, 1]
        adj[i, j] = 1
        adj[j, i] = 1
    return adj


def quadratic_form(c: Cluster, phi) -> float:
    """Energy sum over edges of |phi_i - phi_j|^2; equals <phi, L phi>."""
    phi = np.asarray(phi)
    if phi.shape != (c.size,):
        raise ValueError(f"vector of length {phi.shape} does not match cluster size {c.size}")
    if c.n_edges == 0:
        return 0.0
    diff = phi[c.edges[:, 0]] - phi[c.edges[:, 1]]
    return float(np.sum(np.abs(diff) ** 2))


@dataclass(frozen=True)
class ClusterSpectrum:
    """Sorted Laplacian eigenvalues of one connected cluster.

    The leading entry is exactly 0.0 (kernel bookkeeping, not thresholding);
    ``e_min`` is the smallest nonzero eigenvalue, defined for size >= 2.
    """

    size: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = self.eigenvalues
        if ev.shape != (self.size,):
            raise ValueError("spectrum length must equal cluster size")
        if ev[0] != 0.0:
            raise ValueError("leading eigenvalue must be exactly zero")
        if self.size >= 2 and not ev[1] > 0.0:
            raise ValueError("connected cluster must have a one-dimensional kernel")
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be sorted ascending")

    @property
    def e_min(self) -> float | None:
        return float(self.eigenvalues[1]) if self.size >= 2 else None


def eigenvalues_cluster(c: Cluster, size_cap: int = DEFAULT_SIZE_CAP) -> ClusterSpectrum:
    """Dense symmetric eigensolve of one connected cluster.

    Raises :class:`EigensolverError` (with the cluster attached) when the
    cluster exceeds ``size_cap`` or LAPACK fails to converge.
    """
    n = c.size
    if n > size_cap:
        raise EigensolverError(
            f"cluster of size {n} exceeds the eigensolver size cap {size_cap}", cluster=c
        )
    if n == 1:
        return ClusterSpectrum(1, np.zeros(1))
    try:
        vals = np.linalg.eigvalsh(laplacian_of_cluster(c).astype(np.float64))
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver failed to converge: {exc}", cluster=c) from exc
    if vals[0] < -1e-9:
        raise EigensolverError(
            f"computed eigenvalue {vals[0]!r} violates nonnegativity", cluster=c
        )
    vals[0] = 0.0
    return ClusterSpectrum(n, vals)


def path_emin_reference(n: int) -> float:
    """Closed-form smallest nonzero Laplacian eigenvalue of the n-vertex path.

    Equals 2(1 - cos(pi/n)), which stays below 12/n^2 for every n >= 2.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"path needs n >= 2 vertices, got {n!r}")
    return 2.0 * (1.0 - math.cos(math.pi / n))


@dataclass(frozen=True)
class GraphSpectrum:
    """All N Laplacian eigenvalues of a graph, pooled over its clusters."""

    eigenvalues: np.ndarray
    kernel_dim: int

    def __post_init__(self):
        if int(np.count_nonzero(self.eigenvalues == 0.0)) != self.kernel_dim:
            raise ValueError("number of exact zeros must equal the cluster count")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted ascending")

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _grouped_eigenvalues(d: ClusterDecomposition, size_cap: int, matrix: str):
    """Eigenvalues of all clusters with size >= 2, grouped by cluster size.

    Returns a list of (size, cluster_ids, values) with ``values`` of shape
    (count, size), each row sorted ascending.  For ``matrix == "laplacian"``
    the smallest eigenvalue per cluster is pinned to exact zero.
    """
    sizes = d.sizes
    top = int(sizes.max()) if sizes.size else 0
    if top > size_cap:
        k = int(np.argmax(sizes))
        raise EigensolverError(
            f"cluster of size {top} exceeds the eigensolver size cap {size_cap}",
            cluster=d.cluster(k),
        )
    out = []
    labels = d.edge_labels_grouped
    esizes = sizes[labels] if labels.size else labels
    le = d.local_edges
    slot_of_cluster = np.empty(d.n_clusters, dtype=np.int64)
    for s in np.unique(sizes):
        s = int(s)
        if s < 2:
            continue
        ids = np.nonzero(sizes == s)[0]
        c = ids.shape[0]
        slot_of_cluster[ids] = np.arange(c, dtype=np.int64)
        mask = esizes == s
        slots = slot_of_cluster[labels[mask]]
        li = le[mask, 0]
        lj = le[mask, 1]
        flat = np.zeros(c * s * s, dtype=np.float64)
        off = 1.0 if matrix == "adjacency" else -1.0
        base = slots * (s * s)
        flat[base + li * s + lj] = off
        flat[base + lj * s + li] = off
        if matrix == "laplacian":
            np.add.at(flat, base + li * s + li, 1.0)
            np.add.at(flat, base + lj * s + lj, 1.0)
        mats = flat.reshape(c, s, s)
        try:
            vals = np.linalg.eigvalsh(mats)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(
                f"stacked eigensolver failed for size {s}: {exc}",
                cluster=d.cluster(int(ids[0])),
            ) from exc
        if matrix == "laplacian":
            low = float(vals[:, 0].min())
            if low < -1e-9:
                bad = int(ids[int(np.argmin(vals[:, 0]))])
                raise EigensolverError(
                    f"computed eigenvalue {low!r} violates nonnegativity",
                    cluster=d.cluster(bad),
                )
            vals[:, 0] = 0.0
        out.append((s, ids, vals))
    return out


def graph_spectrum(
    g: Graph, d: ClusterDecomposition, size_cap: int = DEFAULT_SIZE_CAP
) -> GraphSpectrum:
    """Multiset union of per-cluster spectra; kernel dimension equals K."""
    if d.graph is not g:
        if d.graph.n != g.n or not (d.graph == g):
            raise ValueError("decomposition does not belong to this graph")
    parts = [np.zeros(int(np.count_nonzero(d.sizes == 1)))]
    for _, _, vals in _grouped_eigenvalues(d, size_cap, "laplacian"):
        parts.append(vals.ravel())
    eigs = np.concatenate(parts)
    eigs.sort()
    return GraphSpectrum(eigs, d.n_clusters)


def cluster_min_gaps(d: ClusterDecomposition, size_cap: int = DEFAULT_SIZE_CAP):
    """Cluster ids, sizes, and smallest nonzero eigenvalues of every cluster
    with at least two vertices."""
    ids_out = []
    sizes_out = []
    gaps_out = []
    for s, ids, vals in _grouped_eigenvalues(d, size_cap, "laplacian"):
        ids_out.append(ids)
        sizes_out.append(np.full(ids.shape[0], s, dtype=np.int64))
        gaps_out.append(vals[:, 1])
    if not sizes_out:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    return np.concatenate(ids_out), np.concatenate(sizes_out), np.concatenate(gaps_out)


@dataclass(frozen=True)
class IdsEstimate:
    """Monte Carlo estimate of the eigenvalue counting function on a grid.

    ``sigma`` are means over realizations of N^{-1} #{eigenvalues <= E}
    (closed right endpoint); ``sigma0`` is the mean cluster count per vertex,
    computed structurally from the decomposition and never from thresholded
    eigenvalues.  ``delta_sigma`` is the per-realization difference
    sigma(E) - sigma(0) re-averaged, carrying its own standard error since
    the two terms are correlated.
    """

    n: int
    p: float
    n_reps: int
    energies: np.ndarray
    sigma: np.ndarray
    sigma_se: np.ndarray
    sigma0: float
    sigma0_se: float
    delta_sigma: np.ndarray
    delta_sigma_se: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.sigma) < 0):
            raise ValueError("sigma must be nondecreasing along the grid")
        if np.any(self.sigma > 1.0) or np.any(self.sigma < self.sigma0 - 1e-15):
            raise ValueError("sigma must lie between sigma0 and 1")


def _validate_grid(grid) -> np.ndarray:
    e = np.asarray(grid, dtype=np.float64)
    if e.ndim != 1 or e.size == 0:
        raise ValueError("energy grid must be a nonempty 1-d array")
    if np.any(e <= 0.0):
        raise ValueError("energy grid must be strictly positive")
    if np.any(np.diff(e) <= 0.0):
        raise ValueError("energy grid must be strictly increasing")
    return e


def _ids_one(spec: GraphSpec, r: int, grid: np.ndarray, size_cap: int):
    g = sample_graph(spec, r)
    d = decompose(g)
    spectrum = graph_spectrum(g, d, size_cap)
    counts = np.searchsorted(spectrum.eigenvalues, grid, side="right")
    return counts.astype(np.int64), int(d.n_clusters)


def _ids_chunk(args):
    spec, rs, grid, size_cap = args
    return [(r, _ids_one(spec, r, grid, size_cap)) for r in rs]


def _run_chunked(worker, spec, n_reps: int, extra: tuple, workers: int):
    """Evaluate ``worker`` over realization indices, results in index order.

    The per-realization function is pure, so a process pool changes only the
    wall time, never the collected values.
    """
    indices = list(range(n_reps))
    if workers <= 1:
        chunks = [indices]
    else:
        step = max(1, math.ceil(n_reps / (workers * 4)))
        chunks = [indices[i : i + step] for i in range(0, n_reps, step)]
    args = [(spec, rs, *extra) for rs in chunks]
    if workers <= 1:
        nested = [worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(worker, args))
    flat = [item for chunk in nested for item in chunk]
    flat.sort(key=lambda kv: kv[0])
    return [value for _, value in flat]


def empirical_ids(
    spec: GraphSpec,
    n_reps: int,
    grid,
    workers: int = 1,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> IdsEstimate:
    """Monte Carlo IDS estimate over ``n_reps`` realizations of ``spec``.

    Standard errors require at least two realizations and come out as NaN
    for a single one.
    """
    e = _validate_grid(grid)
    if n_reps < 1:
        raise ValueError("need at least one realization")
    results = _run_chunked(_ids_chunk, spec, n_reps, (e, size_cap), workers)
    counts = np.stack([c for c, _ in results])
    ks = np.asarray([k for _, k in results], dtype=np.int64)
    n = spec.n_vertices
    sigma = counts.mean(axis=0) / n
    sigma0 = float(ks.mean()) / n
    deltas = (counts - ks[:, None]) / n
    delta = deltas.mean(axis=0)
    if n_reps >= 2:
        sigma_se = counts.std(axis=0, ddof=1) / (n * math.sqrt(n_reps))
        sigma0_se = float(ks.std(ddof=1)) / (n * math.sqrt(n_reps))
        delta_se = deltas.std(axis=0, ddof=1) / math.sqrt(n_reps)
    else:
        sigma_se = np.full(e.shape, np.nan)
        sigma0_se = math.nan
        delta_se = np.full(e.shape, np.nan)
    return IdsEstimate(
        n=n,
        p=spec.edge_prob,
        n_reps=n_reps,
        energies=e,
        sigma=sigma,
        sigma_se=sigma_se,
        sigma0=sigma0,
        sigma0_se=sigma0_se,
        delta_sigma=delta,
        delta_sigma_se=delta_se,
    )


def spectral_moment(s: GraphSpectrum, k: int) -> float:
    """k-th spectral moment N^{-1} sum(lambda^k); k = 0 gives 1 exactly."""
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_MOMENT_POWER:
        raise ValueError(f"moment order must be an integer in [0, {MAX_MOMENT_POWER}]")
    if k == 0:
        return 1.0
    return float(np.mean(s.eigenvalues**k))


@dataclass(frozen=True)
class MomentSamples:
    """Per-realization spectral moments for the Laplacian, degrees, adjacency.

    Row r of each array holds N^{-1} Tr[M^{2k}] for realization r and the
    powers listed in ``two_ks``.  Means and standard errors derive from the
    rows, so parallel collection order cannot change them.
    """

    n: int
    p: float
    n_reps: int
    two_ks: tuple[int, ...]
    lap: np.ndarray
    deg: np.ndarray
    adj: np.ndarray

    def _col(self, two_k: int) -> int:
        try:
            return self.two_ks.index(two_k)
        except ValueError:
            raise ValueError(f"power {two_k} was not collected (have {self.two_ks})") from None

    def mean_se(self, kind: str, two_k: int) -> tuple[float, float]:
        arr = {"laplacian": self.lap, "degree": self.deg, "adjacency": self.adj}[kind]
        col = arr[:, self._col(two_k)]
        mean = float(col.mean())
        se = float(col.std(ddof=1) / math.sqrt(self.n_reps)) if self.n_reps >= 2 else math.nan
        return mean, se

    def slack_samples(self, k: int) -> np.ndarray:
        """Per-realization slack 2^{2k-1}(deg + adj) - lap for the 2k moment."""
        col = self._col(2 * k)
        return (2.0 ** (2 * k - 1)) * (self.deg[:, col] + self.adj[:, col]) - self.lap[:, col]


def _moment_one(spec: GraphSpec, r: int, two_ks: tuple[int, ...], size_cap: int):
    g = sample_graph(spec, r)
    d = decompose(g)
    deg = degree_sequence(g).astype(np.float64)
    lap_groups = _grouped_eigenvalues(d, size_cap, "laplacian")
    adj_groups = _grouped_eigenvalues(d, size_cap, "adjacency")
    n = float(g.n)
    lap_row = np.empty(len(two_ks))
    deg_row = np.empty(len(two_ks))
    adj_row = np.empty(len(two_ks))
    for col, two_k in enumerate(two_ks):
        lap_row[col] = sum(float(np.sum(v**two_k)) for _, _, v in lap_groups) / n
        adj_row[col] = sum(float(np.sum(v**two_k)) for _, _, v in adj_groups) / n
        deg_row[col] = float(np.sum(deg**two_k)) / n
    return lap_row, deg_row, adj_row


def _moment_chunk(args):
    spec, rs, two_ks, size_cap = args
    return [(r, _moment_one(spec, r, two_ks, size_cap)) for r in rs]


def moment_samples(
    spec: GraphSpec,
    n_reps: int,
    k_max: int,
    workers: int = 1,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> MomentSamples:
    """Collect per-realization moments M^Delta, M^D, M^A at powers 2..2*k_max."""
    if not 1 <= k_max <= MAX_MOMENT_POWER // 2:
        raise ValueError(f"k_max must lie in [1, {MAX_MOMENT_POWER // 2}]")
    if n_reps < 1:
        raise ValueError("need at least one realization")
    two_ks = tuple(2 * k for k in range(1, k_max + 1))
    rows = _run_chunked(_moment_chunk, spec, n_reps, (two_ks, size_cap), workers)
    return MomentSamples(
        n=spec.n_vertices,
        p=spec.edge_prob,
        n_reps=n_reps,
        two_ks=two_ks,
        lap=np.stack([r[0] for r in rows]),
        deg=np.stack([r[1] for r in rows]),
        adj=np.stack([r[2] for r in rows]),
    )
