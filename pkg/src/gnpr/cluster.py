"""Clustering on distance matrices or embeddings, plus partition scores.

Three paradigms: agglomerative hierarchical clustering (average or Ward
linkage, Lance-Williams updates, smallest-pair-index tie breaking),
k-means++ with Lloyd iterations on an embedding, and affinity
propagation on similarities -d^2.  All are deterministic given their
inputs and seed.  Partition agreement is scored with the adjusted Rand
index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .metrics import DistanceMatrix, Embedding

LINKAGES = ("average", "ward")

# fixed internal stream used only to break exact message ties in
# affinity propagation; not related to any user-facing seed
_AP_JITTER_SEED = 181818


@dataclass(frozen=True)
class Partition:
    """Cluster labels 0..n_clusters-1 for N items."""

    labels: np.ndarray
    n_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("labels must be a non-empty vector")
        if self.n_clusters < 1:
            raise ValueError("need at least one cluster")
        if labels.min() < 0 or labels.max() >= self.n_clusters:
            raise ValueError(f"labels outside 0..{self.n_clusters - 1}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration trace: one (id_a, id_b, height, size) row per merge.

    Ids follow the usual convention: 0..N-1 are the original items, the
    merge at step s creates cluster N+s.
    """

    merges: np.ndarray

    def __post_init__(self):
        self.merges.setflags(write=False)


def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters by order of first appearance."""
    labels = np.asarray(labels)
    mapping: dict[int, int] = {}
    out = np.empty(labels.size, dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def _as_matrix(d) -> np.ndarray:
    values = d.values if isinstance(d, DistanceMatrix) else np.asarray(d, dtype=np.float64)
    n = values.shape[0]
    if values.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {values.shape}")
    if np.abs(values - values.T).max(initial=0.0) > 1e-12:
        raise ValueError("distance matrix is not symmetric")
    return values


def hc_cluster(d, linkage: str, n_clusters: int) -> tuple[Partition, Dendrogram]:
    """Agglomerative clustering cut to exactly n_clusters.

    linkage "average" updates inter-cluster distances with the
    size-weighted arithmetic mean; "ward" applies the Ward update on
    squared distances (heights are reported on the distance scale).
    Ties in the minimum linkage go to the smallest pair index.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}, expected one of {LINKAGES}")
    values = _as_matrix(d)
    n = values.shape[0]
    if not (1 <= n_clusters <= n):
        raise ValueError(f"n_clusters must be in 1..{n}, got {n_clusters}")

    # working matrix: squared distances for ward, plain for average;
    # merged-away rows/columns and the diagonal are parked at +inf, so
    # np.argmin lands on the smallest active pair (row-major order =
    # smallest pair index on ties)
    m = values * values if linkage == "ward" else values.copy()
    np.fill_diagonal(m, np.inf)
    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=np.int64)
    node_id = np.arange(n, dtype=np.int64)
    merges = np.empty((n - 1, 4))
    merge_members: list[tuple[int, int]] = []

    for step in range(n - 1):
        flat = int(np.argmin(m))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        # ward criterion values can dip below zero by float error on
        # non-Euclidean metric inputs; keep heights real
        height = np.sqrt(max(m[i, j], 0.0)) if linkage == "ward" else m[i, j]
        new_size = size[i] + size[j]
        a, b = sorted((node_id[i], node_id[j]))
        merges[step] = (a, b, height, new_size)
        merge_members.append((i, j))

        k = np.flatnonzero(active)
        k = k[(k != i) & (k != j)]
        if linkage == "average":
            m[i, k] = (size[i] * m[i, k] + size[j] * m[j, k]) / new_size
        else:
            m[i, k] = ((size[i] + size[k]) * m[i, k] + (size[j] + size[k]) * m[j, k]
                       - size[k] * m[i, j]) / (new_size + size[k])
        m[k, i] = m[i, k]
        m[j, :] = np.inf
        m[:, j] = np.inf
        active[j] = False
        size[i] = new_size
        node_id[i] = n + step

    # replay the first n - n_clusters merges to get the requested cut
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in merge_members[: n - n_clusters]:
        parent[find(j)] = find(i)
    roots = np.array([find(x) for x in range(n)])
    partition = Partition(labels=canonical_labels(roots), n_clusters=n_clusters)
    return partition, Dendrogram(merges=merges)


@dataclass(frozen=True)
class KMeansResult:
    partition: Partition
    inertia: float
    centers: np.ndarray


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    """Lloyd iterations until the assignment stops changing."""
    n, q = x.shape[0], centers.shape[0]
    dist = np.empty((n, q))
    assign = np.full(n, -1, dtype=np.int64)
    inertia_history = []
    for _ in range(max_iter):
        for c in range(q):
            diff = x - centers[c]
            dist[:, c] = (diff * diff).sum(axis=1)
        new_assign = np.argmin(dist, axis=1)
        inertia_history.append(float(dist[np.arange(n), new_assign].sum()))
        if (new_assign == assign).all():
            break
        assign = new_assign
        for c in range(q):
            members = assign == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # re-seed an emptied cluster at the worst-fit point
                worst = int(np.argmax(dist[np.arange(n), assign]))
                centers[c] = x[worst]
    return assign, inertia_history[-1], centers, inertia_history


def kmeanspp(e, n_clusters: int, seed: int, restarts: int = 10,
             max_iter: int = 300) -> KMeansResult:
    """k-means++ seeding plus Lloyd, best inertia over restarts.

    The first center is uniform, later ones are drawn proportionally to
    the squared distance to the nearest already-chosen center.
    """
    x = e.vectors if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64)
    n = x.shape[0]
    if not (1 <= n_clusters <= n):
        raise ValueError(f"n_clusters must be in 1..{n}, got {n_clusters}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)

    best = None
    for _ in range(restarts):
        centers = np.empty((n_clusters, x.shape[1]))
        centers[0] = x[int(rng.integers(n))]
        diff = x - centers[0]
        dsq = (diff * diff).sum(axis=1)
        for c in range(1, n_clusters):
            total = dsq.sum()
            if total > 0:
                idx = int(rng.choice(n, p=dsq / total))
            else:
                idx = int(rng.integers(n))
            centers[c] = x[idx]
            diff = x - centers[c]
            dsq = np.minimum(dsq, (diff * diff).sum(axis=1))
        assign, inertia, centers, _ = _lloyd(x, centers, max_iter)
        if best is None or inertia < best[1]:
            best = (assign, inertia, centers)

    assign, inertia, centers = best
    labels = canonical_labels(assign)
    return KMeansResult(
        partition=Partition(labels=labels, n_clusters=int(labels.max()) + 1),
        inertia=inertia, centers=centers)


@dataclass(frozen=True)
class APResult:
    partition: Partition
    exemplars: np.ndarray
    n_iter: int
    converged: bool


def _ap_step(s: np.ndarray, r: np.ndarray, a: np.ndarray, damping: float):
    """One damped responsibility/availability update."""
    n = s.shape[0]
    idx = np.arange(n)
    amax = a + s
    first = np.argmax(amax, axis=1)
    best = amax[idx, first]
    amax[idx, first] = -np.inf
    second = amax.max(axis=1)
    r_new = s - best[:, None]
    r_new[idx, first] = s[idx, first] - second
    r = damping * r + (1.0 - damping) * r_new

    rp = np.maximum(r, 0.0)
    np.fill_diagonal(rp, np.diagonal(r))
    a_new = rp.sum(axis=0)[None, :] - rp
    diag = np.diagonal(a_new).copy()
    a_new = np.minimum(a_new, 0.0)
    np.fill_diagonal(a_new, diag)
    a = damping * a + (1.0 - damping) * a_new
    return r, a


def affinity_propagation(d, preference: float | None = None, damping: float = 0.9,
                         max_iter: int = 1000, convergence_iter: int = 15) -> APResult:
    """Exemplar clustering by responsibility/availability passing.

    Similarities are -d^2; the shared preference defaults to the median
    off-diagonal similarity.  Messages are damped as
    damping*old + (1-damping)*new; the run stops once the exemplar set
    has been stable for convergence_iter iterations.  A deterministic
    jitter (1e-10 of the similarity span, fixed internal stream) breaks
    exactly symmetric instances that would otherwise never elect an
    exemplar.
    """
    if not (0.5 <= damping < 1.0):
        raise ValueError(f"damping must be in [0.5, 1), got {damping}")
    values = _as_matrix(d)
    n = values.shape[0]
    if n == 1:
        return APResult(Partition(np.zeros(1, dtype=np.int64), 1),
                        exemplars=np.array([0]), n_iter=0, converged=True)

    s = -(values * values)
    off = s[~np.eye(n, dtype=bool)]
    pref = float(np.median(off)) if preference is None else float(preference)
    np.fill_diagonal(s, pref)
    span = float(s.max() - s.min())
    jitter_rng = np.random.default_rng(_AP_JITTER_SEED)
    s = s + (1e-10 * span + 1e-300) * jitter_rng.standard_normal((n, n))

    r = np.zeros((n, n))
    a = np.zeros((n, n))
    exemplars = np.zeros(n, dtype=bool)
    stable = 0
    it = 0
    for it in range(1, max_iter + 1):
        r, a = _ap_step(s, r, a, damping)
        current = (np.diagonal(a) + np.diagonal(r)) > 0
        if current.any() and (current == exemplars).all():
            stable += 1
            if stable >= convergence_iter:
                exemplars = current
                break
        else:
            stable = 0
        exemplars = current

    converged = stable >= convergence_iter
    ex = np.flatnonzero(exemplars)
    if ex.size == 0:
        # no exemplar ever elected: everything in one cluster
        labels = np.zeros(n, dtype=np.int64)
        return APResult(Partition(labels, 1), exemplars=np.array([], dtype=np.int64),
                        n_iter=it, converged=False)
    assign = np.argmax(s[:, ex], axis=1)
    assign[ex] = np.arange(ex.size)
    labels = canonical_labels(assign)
    return APResult(Partition(labels, int(labels.max()) + 1),
                    exemplars=ex, n_iter=it, converged=converged)


def _labels_of(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else np.asarray(p)


def ari(p, q) -> float:
    """Hubert-Arabie adjusted Rand index between two partitions.

    Computed from the contingency table in exact integer arithmetic;
    only the final division rounds.  1 for identical partitions up to
    relabeling, about 0 for independent ones.  The doubly degenerate
    case (both partitions trivial) returns 1.
    """
    pa = _labels_of(p)
    qa = _labels_of(q)
    if pa.shape != qa.shape:
        raise ValueError(f"partitions differ in length: {pa.shape} vs {qa.shape}")
    n = pa.size
    _, pa_inv = np.unique(pa, return_inverse=True)
    _, qa_inv = np.unique(qa, return_inverse=True)
    table = np.zeros((pa_inv.max() + 1, qa_inv.max() + 1), dtype=np.int64)
    np.add.at(table, (pa_inv, qa_inv), 1)

    def comb2(v) -> int:
        return int(sum(int(x) * (int(x) - 1) // 2 for x in np.ravel(v)))

    index = comb2(table)
    sum_a = comb2(table.sum(axis=1))
    sum_b = comb2(table.sum(axis=0))
    pairs = n * (n - 1) // 2
    num = 2 * index * pairs - 2 * sum_a * sum_b
    den = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if den == 0:
        return 1.0  # both partitions trivial; they can only agree
    return num / den


def write_partition_csv(series_ids, partition, path) -> None:
    labels = _labels_of(partition)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["series_id", "label"])
        for sid, lab in zip(series_ids, labels):
            writer.writerow([sid, int(lab)])


def write_dendrogram_csv(dendrogram: Dendrogram, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["cluster_a", "cluster_b", "height", "size"])
        for a, b, h, sz in dendrogram.merges:
            writer.writerow([int(a), int(b), f"{h:.17g}", int(sz)])
