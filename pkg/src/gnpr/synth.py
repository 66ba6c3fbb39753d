"""Labeled synthetic panels from a factor model.

Each series is beta times one of K shared factors plus an idiosyncratic
noise term drawn from one of D distributions:

    X_i = beta * Y_k(i) + Z_d(i),   k(i) = ceil(i*K/N),  d(i) = (i-1) mod D + 1

(1-based i), giving Q = K*D ground-truth clusters of p = N/(K*D) series
each: series in the same correlation cluster share a factor, series in
the same distribution cluster share a noise law.

Generation draws one uniform per variate in a fixed order (for each
time step: the K factors, then the N noise terms) from a seeded PCG64
stream and maps them through the inverse cdf of the target
distribution, so a (spec, seed) pair always yields the same panel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri, stdtrit

from .panel import Panel, default_ids

_SQRT2 = float(np.sqrt(2.0))
_SQRT3 = float(np.sqrt(3.0))
_LAPLACE_SCALE = 1.0 / _SQRT2  # variance 2*b^2 = 1
_TINY = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class Normal:
    """Gaussian with the given mean and variance."""

    mean: float
    variance: float

    def __post_init__(self):
        if not (self.variance > 0):
            raise ValueError(f"variance must be positive, got {self.variance}")


@dataclass(frozen=True)
class Laplace:
    """Laplace(0, 1/sqrt(2)): mean 0, variance 1."""


@dataclass(frozen=True)
class StudentT3:
    """Student t with 3 degrees of freedom scaled by 1/sqrt(3):
    mean 0, variance 1, heavy tails."""


Distribution = Normal | Laplace | StudentT3


def dist_code(dist: Distribution) -> str:
    """Compact string form: N(mean,variance), L, or S."""
    if isinstance(dist, Normal):
        return f"N({dist.mean:g},{dist.variance:g})"
    if isinstance(dist, Laplace):
        return "L"
    if isinstance(dist, StudentT3):
        return "S"
    raise ValueError(f"unknown distribution {dist!r}")


def parse_dist(code: str) -> Distribution:
    code = code.strip()
    if code == "L":
        return Laplace()
    if code == "S":
        return StudentT3()
    m = re.fullmatch(r"N\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)", code)
    if m:
        return Normal(mean=float(m.group(1)), variance=float(m.group(2)))
    raise ValueError(f"cannot parse distribution code {code!r}")


def quantile(dist: Distribution, u):
    """Inverse cdf, vectorized over u in (0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    if isinstance(dist, Normal):
        return dist.mean + np.sqrt(dist.variance) * ndtri(u)
    if isinstance(dist, Laplace):
        return -_LAPLACE_SCALE * np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))
    if isinstance(dist, StudentT3):
        return stdtrit(3, u) / _SQRT3
    raise ValueError(f"unknown distribution {dist!r}")


def sample(dist: Distribution, rng: np.random.Generator, size=None):
    """Draw from a distribution: one uniform per variate through the
    inverse cdf."""
    u = rng.random(size)
    u = np.where(u == 0.0, _TINY, u)
    out = quantile(dist, u)
    return float(out) if size is None else out


@dataclass(frozen=True)
class SyntheticSpec:
    """Factor-model parameters.

    N series of length T in K correlation clusters times D distribution
    clusters; beta is the factor loading.  noise_dists has one entry
    per distribution cluster.
    """

    N: int
    T: int
    K: int
    D: int
    beta: float
    factor_dist: Distribution
    noise_dists: tuple[Distribution, ...]
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "noise_dists", tuple(self.noise_dists))
        if self.N < 1 or self.T < 2 or self.K < 1 or self.D < 1:
            raise ValueError(f"invalid dimensions N={self.N} T={self.T} K={self.K} D={self.D}")
        if self.N % (self.K * self.D) != 0:
            raise ValueError(f"N={self.N} not divisible by K*D={self.K * self.D}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if len(self.noise_dists) != self.D:
            raise ValueError(f"need {self.D} noise distributions, got {len(self.noise_dists)}")

    @property
    def p(self) -> int:
        """Series per ground-truth cluster."""
        return self.N // (self.K * self.D)

    @property
    def Q(self) -> int:
        """Ground-truth cluster count."""
        return self.K * self.D


@dataclass(frozen=True)
class LabeledPanel:
    """A generated panel with its ground-truth cluster labels."""

    panel: Panel
    labels: np.ndarray
    spec: SyntheticSpec
    seed: int

    def __post_init__(self):
        self.labels.setflags(write=False)


def factor_indices(spec: SyntheticSpec) -> np.ndarray:
    """0-based factor index k(i)-1 per series."""
    i = np.arange(1, spec.N + 1, dtype=np.int64)
    return (i * spec.K + spec.N - 1) // spec.N - 1  # ceil(i*K/N) - 1


def noise_indices(spec: SyntheticSpec) -> np.ndarray:
    """0-based noise-distribution index d(i)-1 per series."""
    return np.arange(spec.N, dtype=np.int64) % spec.D


def ground_truth_labels(spec: SyntheticSpec) -> np.ndarray:
    """Flattened (correlation, distribution) cluster per series, 0..Q-1."""
    return factor_indices(spec) * spec.D + noise_indices(spec)


def generate(spec: SyntheticSpec, seed: int) -> LabeledPanel:
    """Sample a labeled panel; bit-reproducible for a given (spec, seed)."""
    rng = np.random.default_rng(seed)
    u = rng.random((spec.T, spec.K + spec.N))
    u[u == 0.0] = _TINY
    factors = np.empty((spec.T, spec.K))
    for k in range(spec.K):
        factors[:, k] = quantile(spec.factor_dist, u[:, k])
    noise = np.empty((spec.T, spec.N))
    d_of = noise_indices(spec)
    for d in range(spec.D):
        cols = np.flatnonzero(d_of == d)
        noise[:, cols] = quantile(spec.noise_dists[d], u[:, spec.K + cols])
    x = spec.beta * factors[:, factor_indices(spec)] + noise
    panel = Panel(np.ascontiguousarray(x.T), default_ids(spec.N))
    return LabeledPanel(panel=panel, labels=ground_truth_labels(spec), spec=spec, seed=seed)


_STD_NORMAL = Normal(0.0, 1.0)
_WIDE_NORMAL = Normal(0.0, 2.0)

_PRESETS = {
    # distribution clustering only: no factors, four noise laws
    "A": SyntheticSpec(N=200, T=5000, K=1, D=4, beta=0.0, factor_dist=_STD_NORMAL,
                       noise_dists=(_STD_NORMAL, Laplace(), StudentT3(), _WIDE_NORMAL),
                       name="A"),
    # dependence clustering only: ten heavy-tailed correlation clusters
    "B": SyntheticSpec(N=200, T=5000, K=10, D=1, beta=0.1, factor_dist=StudentT3(),
                       noise_dists=(StudentT3(),), name="B"),
    # both: five correlation clusters, each split in two distributions
    "C": SyntheticSpec(N=200, T=5000, K=5, D=2, beta=0.1, factor_dist=_STD_NORMAL,
                       noise_dists=(_STD_NORMAL, StudentT3()), name="C"),
    # convergence-study family; N and T meant to be overridden
    "G": SyntheticSpec(N=320, T=1000, K=8, D=4, beta=0.1, factor_dist=_STD_NORMAL,
                       noise_dists=(_STD_NORMAL, _WIDE_NORMAL, Laplace(), StudentT3()),
                       name="G"),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str, n: int | None = None, t: int | None = None) -> SyntheticSpec:
    """One of the named test-case specs, optionally resized."""
    try:
        spec = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}, expected one of {PRESET_NAMES}") from None
    if n is not None or t is not None:
        spec = replace(spec, N=n if n is not None else spec.N,
                       T=t if t is not None else spec.T)
    return spec


def spec_to_json(spec: SyntheticSpec, seed: int | None = None) -> dict:
    doc = {}
    if spec.name is not None:
        doc["name"] = spec.name
    doc.update({
        "N": spec.N, "T": spec.T, "K": spec.K, "D": spec.D, "beta": spec.beta,
        "factor_dist": dist_code(spec.factor_dist),
        "noise_dists": [dist_code(d) for d in spec.noise_dists],
    })
    if seed is not None:
        doc["seed"] = int(seed)
    return doc


def spec_from_json(doc: dict) -> tuple[SyntheticSpec, int | None]:
    """Returns the spec and the embedded seed, if any."""
    try:
        spec = SyntheticSpec(
            N=int(doc["N"]), T=int(doc["T"]), K=int(doc["K"]), D=int(doc["D"]),
            beta=float(doc["beta"]),
            factor_dist=parse_dist(doc["factor_dist"]),
            noise_dists=tuple(parse_dist(c) for c in doc["noise_dists"]),
            name=doc.get("name"),
        )
    except KeyError as exc:
        raise ValueError(f"spec document missing field {exc}") from None
    seed = doc.get("seed")
    return spec, (int(seed) if seed is not None else None)
