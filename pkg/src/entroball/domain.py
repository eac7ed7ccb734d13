"""Box domains, metrics, priors, empirical measures and sample batches."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("lo and hi must be 1-D vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError(f"empty box: lo={lo.tolist()} hi={hi.tolist()}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int = 2) -> "BoxDomain":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=-1)
        return bool(inside) if inside.ndim == 0 else inside

    def diameter(self, metric: "Metric") -> float:
        """Largest distance between two points of the box (attained at opposite corners)."""
        return float(metric.evaluate(self.lo, self.hi))


class MetricKind(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


@dataclass(frozen=True)
class Metric:
    kind: MetricKind = MetricKind.EUCLIDEAN

    @classmethod
    def from_name(cls, name: str) -> "Metric":
        try:
            return cls(MetricKind(name.lower()))
        except ValueError:
            known = ", ".join(k.value for k in MetricKind)
            raise ValueError(f"unknown metric {name!r} (expected one of: {known})") from None

    def evaluate(self, x, y) -> np.ndarray | float:
        """Distance between ``x`` and ``y``; broadcasts over leading axes."""
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.kind is MetricKind.EUCLIDEAN:
            out = np.sqrt(np.sum(diff * diff, axis=-1))
        else:
            out = np.sum(np.abs(diff), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def pairwise(self, X, Y) -> np.ndarray:
        """Distance matrix of shape ``(len(X), len(Y))``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return self.evaluate(X[:, None, :], Y[None, :, :])


EUCLIDEAN = Metric(MetricKind.EUCLIDEAN)
MANHATTAN = Metric(MetricKind.MANHATTAN)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform measure on ``N`` atoms; each atom carries mass ``1/N``."""

    points: np.ndarray
    domain: BoxDomain | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("an empirical measure needs at least one point")
        if self.domain is not None:
            if pts.shape[1] != self.domain.dim:
                raise ValueError(
                    f"points have dimension {pts.shape[1]}, domain has {self.domain.dim}"
                )
            outside = np.flatnonzero(~self.domain.contains(pts))
            if outside.size:
                i = int(outside[0])
                raise ValueError(f"point {i} = {pts[i].tolist()} lies outside the domain")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)


@dataclass(frozen=True)
class PriorModel:
    """A strictly positive density on a box together with an exact sampler.

    ``density`` maps an array of shape ``(..., n)`` to an array of shape
    ``(...)``; ``sampler(count, rng)`` returns ``count`` i.i.d. draws.
    """

    name: str
    domain: BoxDomain
    density_fn: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[int, np.random.Generator], np.ndarray]
    params: dict = field(default_factory=dict, compare=False)

    def density(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        out = self.density_fn(x)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, count: int, seed: int) -> np.ndarray:
        return self.sampler(int(count), np.random.default_rng(seed))


def make_uniform_prior(domain: BoxDomain) -> PriorModel:
    value = 1.0 / domain.volume()

    def density(x):
        return np.full(np.shape(x)[:-1], value)

    def sampler(count, rng):
        return domain.lo + (domain.hi - domain.lo) * rng.random((count, domain.dim))

    return PriorModel("uniform", domain, density, sampler)


_REJECTION_CHUNK = 4096


def _gaussian_box_mass(domain: BoxDomain, mean: np.ndarray, sigma: float) -> float:
    # isotropic Gaussian factorizes over axes
    mass = 1.0
    for lo, hi, m in zip(domain.lo, domain.hi, mean):
        a = (lo - m) / (sigma * math.sqrt(2.0))
        b = (hi - m) / (sigma * math.sqrt(2.0))
        mass *= 0.5 * (math.erf(b) - math.erf(a))
    return mass


def make_truncated_gaussian_prior(domain: BoxDomain, mean, sigma: float) -> PriorModel:
    """Isotropic Gaussian restricted to ``domain`` and renormalized.

    The normalizing constant is the exact Gaussian mass of the box. Sampling
    is by rejection from the untruncated Gaussian, so the acceptance rate
    equals that mass; a rate below 1e-3 is rejected as degenerate.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (domain.dim,):
        raise ValueError("mean must have one entry per axis")
    if not domain.contains(mean):
        raise ValueError("mean must lie inside the domain")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    box_mass = _gaussian_box_mass(domain, mean, sigma)
    if box_mass < 1e-3:
        raise ValueError(
            f"truncation keeps only {box_mass:.2e} of the Gaussian mass; "
            "rejection sampling would be degenerate"
        )
    log_norm = math.log(box_mass) + 0.5 * domain.dim * math.log(2.0 * math.pi * sigma**2)

    def density(x):
        sq = np.sum((x - mean) ** 2, axis=-1)
        return np.exp(-sq / (2.0 * sigma**2) - log_norm)

    def sampler(count, rng):
        out = np.empty((count, domain.dim))
        filled = 0
        while filled < count:
            draw = mean + sigma * rng.standard_normal((_REJECTION_CHUNK, domain.dim))
            keep = draw[domain.contains(draw)]
            take = min(count - filled, keep.shape[0])
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    return PriorModel(
        "truncated_gaussian",
        domain,
        density,
        sampler,
        params={"mean": mean.tolist(), "sigma": float(sigma)},
    )


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """A fixed set of draws from the prior, reused for every integral of a run.

    Distance tables to a given empirical measure are memoized on the batch.
    """

    points: np.ndarray
    weights: np.ndarray
    seed: int
    _costs: dict = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    def cost_matrix(self, mu: EmpiricalMeasure, metric: Metric) -> np.ndarray:
        """``d(x_m, x_i)`` for every batch point ``x_m`` and atom ``x_i``, shape ``(M, N)``."""
        key = (metric.kind, mu.points.shape, mu.points.tobytes())
        table = self._costs.get(key)
        if table is None:
            table = metric.pairwise(self.points, mu.points)
            table.setflags(write=False)
            self._costs[key] = table
        return table

    def expect(self, values) -> float:
        return float(np.dot(self.weights, values))


def draw_batch(prior: PriorModel, M: int, seed: int) -> SampleBatch:
    if M < 1:
        raise ValueError("batch size M must be at least 1")
    points = prior.sample(M, seed)
    points.setflags(write=False)
    weights = np.full(M, 1.0 / M)
    weights.setflags(write=False)
    return SampleBatch(points, weights, int(seed))
