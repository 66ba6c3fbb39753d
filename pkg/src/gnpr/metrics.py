"""Distances between series: the rank/histogram distance and baselines.

The headline distance combines a dependence term (squared differences
of rank statistics, normalized so antimonotonic pairs sit at 1) with a
distribution term (squared Hellinger distance between shared-grid
histograms), weighted by theta in [0, 1]:

    d(i, j)^2 = theta * dep_sq(i, j) + (1 - theta) * dist_sq(i, j)

Both terms live in [0, 1], so d does too.  For 0 < theta < 1 the result
is a metric on sampled panels.  A closed form for bivariate Gaussians
(the parametric counterpart, "gpr") and the classical L2 and
Pearson-correlation distances are provided as baselines and oracles.

Full pairwise matrices are computed over the upper triangle, optionally
split across threads; every pair value is computed by the same
expression regardless of the split, so results are bit-identical for
any thread count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .panel import Panel
from .representation import BinnedDensity, GnprRepresentation

SYMMETRY_TOL = 1e-12

KINDS = ("gnpr", "gpr", "l2", "pearson")


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    return theta


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric N x N distances with a zero diagonal.

    kind is one of "gnpr", "gpr", "l2", "pearson" (None for matrices
    read back from disk); gnpr and gpr entries must lie in [0, 1].
    """

    values: np.ndarray
    kind: str | None
    series_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = v.shape[0]
        if v.shape != (n, n):
            raise ValueError(f"distance matrix must be square, got shape {v.shape}")
        if len(self.series_ids) != n:
            raise ValueError("series id count does not match matrix size")
        if self.kind is not None and self.kind not in KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if (np.diag(v) != 0.0).any():
            raise ValueError("distance matrix diagonal must be exactly zero")
        if np.abs(v - v.T).max() > SYMMETRY_TOL:
            raise ValueError("distance matrix is not symmetric")
        if self.kind in ("gnpr", "gpr") and ((v < 0).any() or (v > 1).any()):
            raise ValueError(f"{self.kind} distances must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_series(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GaussianParams:
    """Mean and standard deviation of one Gaussian margin."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Embedding:
    """Coordinates whose squared Euclidean distances equal d^2.

    Row i concatenates the scaled rank vector (length T) and the scaled
    square-root histogram masses (length B) of series i.
    """

    vectors: np.ndarray
    theta: float

    def __post_init__(self):
        self.vectors.setflags(write=False)


def dep_distance_sq(ranks_x, ranks_y) -> float:
    """Squared dependence distance between two rank vectors.

    Takes ranks in rank units (1..T, average ranks under ties) and
    returns 3/(T(T^2-1)) * sum (rx - ry)^2.  On tie-free data this
    equals (1 - rho_S)/2 with rho_S the sample Spearman correlation,
    exactly: the sum of squared integer differences is exact in floats
    and only the final division rounds.
    """
    rx = np.asarray(ranks_x, dtype=np.float64)
    ry = np.asarray(ranks_y, dtype=np.float64)
    if rx.shape != ry.shape:
        raise ValueError(f"rank vectors differ in length: {rx.shape} vs {ry.shape}")
    t = rx.size
    if t < 2:
        raise ValueError(f"need at least 2 observations, got {t}")
    d = rx - ry
    return 3.0 * float(np.sum(d * d)) / (t * (t * t - 1))


def dist_distance_sq(p: BinnedDensity, q: BinnedDensity) -> float:
    """Squared Hellinger distance between two shared-grid histograms."""
    if p.grid != q.grid:
        raise ValueError("densities binned on different grids")
    s = np.sqrt(p.masses) - np.sqrt(q.masses)
    v = 0.5 * float(np.sum(s * s))
    return min(1.0, max(0.0, v))


def gnpr_distance(rep: GnprRepresentation, i: int, j: int, theta: float) -> float:
    """Distance between series i and j of a representation."""
    theta = _check_theta(theta)
    n = rep.n_series
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"series index out of range for N={n}: ({i}, {j})")
    d1sq = dep_distance_sq(rep.ranks.raw[i], rep.ranks.raw[j])
    d0sq = dist_distance_sq(rep.densities[i], rep.densities[j])
    return float(np.sqrt(min(1.0, theta * d1sq + (1.0 - theta) * d0sq)))


def _upper_rows(n: int, threads: int, fill_row) -> None:
    """Run fill_row(i) for i in 0..n-2, optionally across threads.

    Rows are dealt round-robin; each call writes a disjoint slice, so
    the result does not depend on the schedule.
    """
    if threads <= 1 or n <= 2:
        for i in range(n - 1):
            fill_row(i)
        return
    def run(block):
        for i in block:
            fill_row(i)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run, [range(w, n - 1, threads) for w in range(threads)]))


def _symmetrize(upper: np.ndarray) -> np.ndarray:
    full = upper + upper.T
    np.fill_diagonal(full, 0.0)
    return full


def pairwise_dep_sq(rep: GnprRepresentation, threads: int = 1) -> np.ndarray:
    """All-pairs squared dependence distances (full symmetric matrix)."""
    raw = rep.ranks.raw
    n, t = raw.shape
    denom = t * (t * t - 1)
    out = np.zeros((n, n))

    def fill_row(i):
        diff = raw[i + 1:] - raw[i]
        out[i, i + 1:] = 3.0 * (diff * diff).sum(axis=1) / denom

    _upper_rows(n, threads, fill_row)
    return _symmetrize(out)


def pairwise_dist_sq(rep: GnprRepresentation, threads: int = 1) -> np.ndarray:
    """All-pairs squared Hellinger distances (full symmetric matrix)."""
    sm = rep.sqrt_masses()
    n = sm.shape[0]
    out = np.zeros((n, n))

    def fill_row(i):
        diff = sm[i + 1:] - sm[i]
        out[i, i + 1:] = 0.5 * (diff * diff).sum(axis=1)

    _upper_rows(n, threads, fill_row)
    return np.clip(_symmetrize(out), 0.0, 1.0)


def combine_components(dep_sq: np.ndarray, dist_sq: np.ndarray, theta: float,
                       series_ids) -> DistanceMatrix:
    """Mix precomputed component matrices into a distance matrix."""
    theta = _check_theta(theta)
    sq = theta * dep_sq + (1.0 - theta) * dist_sq
    values = np.sqrt(np.clip(sq, 0.0, 1.0))
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(values=values, kind="gnpr", series_ids=tuple(series_ids))


def distance_matrix(rep: GnprRepresentation, theta: float, threads: int = 1) -> DistanceMatrix:
    """Full pairwise distance matrix of a representation."""
    dep = pairwise_dep_sq(rep, threads)
    dist = pairwise_dist_sq(rep, threads)
    return combine_components(dep, dist, theta, rep.series_ids)


def gnpr_embedding(rep: GnprRepresentation, theta: float) -> Embedding:
    """Coordinates reproducing the squared distance as a scalar product.

    Row i is [sqrt(3*theta/(T(T^2-1))) * rank_i(t)]_t followed by
    [sqrt((1-theta)/2) * sqrt(mass_i(k))]_k, so squared Euclidean
    distances between rows equal gnpr_distance(...)**2.
    """
    theta = _check_theta(theta)
    t = rep.length
    rank_scale = np.sqrt(3.0 * theta / (t * (t * t - 1)))
    dens_scale = np.sqrt((1.0 - theta) / 2.0)
    vectors = np.hstack([rank_scale * rep.ranks.raw, dens_scale * rep.sqrt_masses()])
    return Embedding(vectors=vectors, theta=theta)


def gpr_gaussian_distance(x: GaussianParams, y: GaussianParams, rho_s: float,
                          theta: float) -> float:
    """Closed-form distance between two Gaussians.

    rho_s is the Spearman correlation of the pair (see
    pearson_to_spearman_gaussian to convert a Pearson correlation).
    """
    theta = _check_theta(theta)
    if not (-1.0 <= rho_s <= 1.0):
        raise ValueError(f"rho_s must be in [-1, 1], got {rho_s}")
    d1sq = (1.0 - rho_s) / 2.0
    ssum = x.sigma * x.sigma + y.sigma * y.sigma
    bc = np.sqrt(2.0 * x.sigma * y.sigma / ssum) * np.exp(-0.25 * (x.mu - y.mu) ** 2 / ssum)
    d0sq = 1.0 - bc
    return float(np.sqrt(min(1.0, max(0.0, theta * d1sq + (1.0 - theta) * d0sq))))


def pearson_to_spearman_gaussian(rho: float) -> float:
    """Spearman correlation implied by a Pearson correlation under a
    bivariate Gaussian: (6/pi) * arcsin(rho / 2)."""
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"rho must be in [-1, 1], got {rho}")
    return float(6.0 / np.pi * np.arcsin(rho / 2.0))


def l2_distance_empirical(x, y) -> float:
    """Mean squared difference between two equal-length series."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"series differ in length: {x.shape} vs {y.shape}")
    if x.size < 1:
        raise ValueError("need at least one observation")
    d = x - y
    return float(np.sum(d * d)) / x.size


def l2_gaussian_closed_form(x: GaussianParams, y: GaussianParams, rho: float) -> float:
    """E[(X-Y)^2] for a bivariate Gaussian pair with correlation rho."""
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"rho must be in [-1, 1], got {rho}")
    return (x.mu - y.mu) ** 2 + (x.sigma - y.sigma) ** 2 + 2.0 * x.sigma * y.sigma * (1.0 - rho)


def pearson_distance(x, y) -> float:
    """(1 - sample Pearson correlation) / 2, in [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"series differ in length: {x.shape} vs {y.shape}")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(np.sum(dx * dx))
    vy = float(np.sum(dy * dy))
    if vx == 0.0 or vy == 0.0:
        raise ValueError("correlation undefined for zero-variance series")
    rho = float(np.sum(dx * dy)) / np.sqrt(vx * vy)
    return min(1.0, max(0.0, (1.0 - rho) / 2.0))


def _zscores(panel: Panel) -> np.ndarray:
    v = panel.values
    mu = v.mean(axis=1, keepdims=True)
    sd = v.std(axis=1, keepdims=True)
    if (sd == 0).any():
        i = int(np.argwhere(sd[:, 0] == 0)[0][0])
        raise ValueError(f"correlation undefined for zero-variance series {panel.series_ids[i]}")
    return (v - mu) / sd


def l2_distance_matrix(panel: Panel, threads: int = 1) -> DistanceMatrix:
    """Pairwise mean squared differences between raw series."""
    v = panel.values
    n, t = v.shape
    out = np.zeros((n, n))

    def fill_row(i):
        diff = v[i + 1:] - v[i]
        out[i, i + 1:] = (diff * diff).sum(axis=1) / t

    _upper_rows(n, threads, fill_row)
    return DistanceMatrix(values=_symmetrize(out), kind="l2", series_ids=panel.series_ids)


def _pearson_corr_matrix(panel: Panel, threads: int = 1) -> np.ndarray:
    z = _zscores(panel)
    n, t = z.shape
    out = np.zeros((n, n))

    def fill_row(i):
        diff = z[i + 1:] - z[i]
        # ||z_i - z_j||^2 = 2T(1 - rho)
        out[i, i + 1:] = (diff * diff).sum(axis=1) / (2.0 * t)

    _upper_rows(n, threads, fill_row)
    return np.clip(1.0 - _symmetrize(out), -1.0, 1.0)


def pearson_distance_matrix(panel: Panel, threads: int = 1) -> DistanceMatrix:
    """Pairwise (1 - Pearson correlation) / 2 over a panel."""
    rho = _pearson_corr_matrix(panel, threads)
    values = np.clip((1.0 - rho) / 2.0, 0.0, 1.0)
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(values=values, kind="pearson", series_ids=panel.series_ids)


def gpr_distance_matrix(panel: Panel, theta: float, threads: int = 1) -> DistanceMatrix:
    """Closed-form Gaussian distances from fitted moments.

    Fits a mean and standard deviation per series and a Pearson
    correlation per pair, converts the correlation to its Gaussian
    Spearman equivalent, and applies the closed form.
    """
    theta = _check_theta(theta)
    v = panel.values
    mu = v.mean(axis=1)
    sigma = v.std(axis=1, ddof=1)
    if (sigma <= 0).any():
        i = int(np.argwhere(sigma <= 0)[0][0])
        raise ValueError(f"gpr undefined for zero-variance series {panel.series_ids[i]}")
    rho = _pearson_corr_matrix(panel, threads)
    rho_s = 6.0 / np.pi * np.arcsin(rho / 2.0)
    ssum = sigma[:, None] ** 2 + sigma[None, :] ** 2
    bc = np.sqrt(2.0 * np.outer(sigma, sigma) / ssum)
    bc *= np.exp(-0.25 * (mu[:, None] - mu[None, :]) ** 2 / ssum)
    sq = theta * (1.0 - rho_s) / 2.0 + (1.0 - theta) * (1.0 - bc)
    values = np.sqrt(np.clip(sq, 0.0, 1.0))
    values = np.triu(values, 1)
    values = values + values.T
    return DistanceMatrix(values=values, kind="gpr", series_ids=panel.series_ids)


def l2_embedding(panel: Panel) -> Embedding:
    """Coordinates whose squared distances equal the L2 distance."""
    return Embedding(vectors=panel.values / np.sqrt(panel.length), theta=1.0)


def pearson_embedding(panel: Panel) -> Embedding:
    """Coordinates whose squared distances equal the Pearson distance."""
    z = _zscores(panel)
    return Embedding(vectors=z / (2.0 * np.sqrt(panel.length)), theta=1.0)


def write_distance_csv(dm: DistanceMatrix, path) -> None:
    """Square CSV: header row/column of ids, 17 significant digits."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([""] + list(dm.series_ids))
        for i, sid in enumerate(dm.series_ids):
            writer.writerow([sid] + [f"{x:.17g}" for x in dm.values[i]])


def read_distance_csv(path, kind: str | None = None) -> DistanceMatrix:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[0] != "":
            raise ValueError(f"{path}: expected empty corner cell in header")
        ids = tuple(header[1:])
        rows = []
        row_ids = []
        for row in reader:
            if not row:
                continue
            row_ids.append(row[0])
            rows.append([float(c) for c in row[1:]])
    if tuple(row_ids) != ids:
        raise ValueError(f"{path}: row ids do not match header ids")
    return DistanceMatrix(values=np.array(rows), kind=kind, series_ids=ids)
