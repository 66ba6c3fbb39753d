"""Non-parametric representation of a panel: ranks plus binned densities.

Each series is mapped to (a) its vector of normalized rank statistics,
which carries all the dependence information, and (b) a histogram
density estimate on a grid shared by the whole panel, which carries the
distribution information.  The pair is all the distance computations in
:mod:`gnpr.metrics` ever look at.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .panel import Panel

DEFAULT_BIN_COUNT = 100

MASS_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RankMatrix:
    """Per-series rank statistics.

    Attributes
    ----------
    ranks : np.ndarray, shape (N, T)
        Normalized ranks in (0, 1]; entry (i, t) is the rank of
        observation t within series i divided by T.  Ties get the
        average of the ranks they occupy.
    raw : np.ndarray, shape (N, T)
        The same ranks in rank units (1..T, halves under ties).  Kept
        separately because the dependence distance is defined on rank
        units and integer arithmetic there is exact.
    """

    ranks: np.ndarray
    raw: np.ndarray

    def __post_init__(self):
        self.ranks.setflags(write=False)
        self.raw.setflags(write=False)

    @property
    def n_series(self) -> int:
        return self.raw.shape[0]

    @property
    def length(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True)
class Grid:
    """Uniform binning grid: bin k is [origin + k*h, origin + (k+1)*h)."""

    origin: float
    bandwidth: float
    bin_count: int

    def __post_init__(self):
        if not (self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.bin_count < 1:
            raise ValueError(f"bin_count must be >= 1, got {self.bin_count}")

    @property
    def top(self) -> float:
        return self.origin + self.bin_count * self.bandwidth


@dataclass(frozen=True)
class BinnedDensity:
    """Histogram masses on a shared grid; masses sum to one."""

    masses: np.ndarray
    grid: Grid

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=np.float64)
        if masses.shape != (self.grid.bin_count,):
            raise ValueError(f"expected {self.grid.bin_count} masses, got shape {masses.shape}")
        if (masses < 0).any():
            raise ValueError("histogram masses must be nonnegative")
        if abs(masses.sum() - 1.0) > MASS_SUM_TOL:
            raise ValueError(f"histogram masses sum to {masses.sum()!r}, expected 1")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)


@dataclass(frozen=True)
class GnprRepresentation:
    """The (ranks, densities) image of a panel, in panel order."""

    ranks: RankMatrix
    densities: tuple[BinnedDensity, ...]
    grid: Grid
    series_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.densities) != self.ranks.n_series:
            raise ValueError("rank and density series counts differ")
        if len(self.series_ids) != self.ranks.n_series:
            raise ValueError("series id count differs from series count")

    @property
    def n_series(self) -> int:
        return self.ranks.n_series

    @property
    def length(self) -> int:
        return self.ranks.length

    def sqrt_masses(self) -> np.ndarray:
        """Square roots of all histogram masses, stacked N x B."""
        return np.sqrt(np.stack([d.masses for d in self.densities]))


def empirical_margins(panel: Panel) -> RankMatrix:
    """Rank every observation within its own series.

    Returns normalized ranks (rank / T); ties are resolved by the
    average of the ranks the tied group occupies, so each row of
    tie-free data is a permutation of {1/T, ..., T/T}.
    """
    raw = rankdata(panel.values, method="average", axis=1)
    return RankMatrix(ranks=raw / panel.length, raw=raw)


def shared_grid(panel: Panel, bin_count: int = DEFAULT_BIN_COUNT) -> Grid:
    """Build one grid covering the pooled range of the whole panel.

    The bandwidth is (max - min) / bin_count, widened by float ulps if
    needed so the top edge provably covers the maximum.  A constant
    panel gets bandwidth 1.
    """
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    lo = float(panel.values.min())
    hi = float(panel.values.max())
    if hi == lo:
        return Grid(origin=lo, bandwidth=1.0, bin_count=bin_count)
    h = (hi - lo) / bin_count
    while lo + bin_count * h < hi:
        h = float(np.nextafter(h, np.inf))
    return Grid(origin=lo, bandwidth=h, bin_count=bin_count)


def histogram_density(series, grid: Grid, series_id: str | None = None) -> BinnedDensity:
    """Bin one series on `grid`; masses are counts / T.

    Bins are left-closed right-open except the last, which also takes
    the top edge.  A value outside [origin, top] raises.
    """
    x = np.asarray(series, dtype=np.float64)
    who = f" in series {series_id}" if series_id is not None else ""
    if x.min() < grid.origin or x.max() > grid.top:
        bad = x[(x < grid.origin) | (x > grid.top)][0]
        raise ValueError(f"observation {bad!r}{who} outside grid [{grid.origin}, {grid.top}]")
    idx = np.floor((x - grid.origin) / grid.bandwidth).astype(np.int64)
    # top edge is closed: values landing on it fold into the last bin
    np.clip(idx, 0, grid.bin_count - 1, out=idx)
    masses = np.bincount(idx, minlength=grid.bin_count) / x.size
    return BinnedDensity(masses=masses, grid=grid)


def build_representation(panel: Panel, bin_count: int = DEFAULT_BIN_COUNT) -> GnprRepresentation:
    """Ranks plus shared-grid densities for every series of the panel."""
    ranks = empirical_margins(panel)
    grid = shared_grid(panel, bin_count)
    densities = tuple(
        histogram_density(panel.values[i], grid, series_id=panel.series_ids[i])
        for i in range(panel.n_series)
    )
    return GnprRepresentation(ranks=ranks, densities=densities, grid=grid,
                              series_ids=panel.series_ids)
