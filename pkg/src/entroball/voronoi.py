"""Additively weighted Voronoi regions and their masses.

Region ``i`` for weights ``lam`` is the set of points where ``d(x, x_i) - lam_i``
is minimal over the atoms. The shifted minimum itself is ``phi_lambda``.
Ties go to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import BoxDomain, EmpiricalMeasure, Metric, SampleBatch


@dataclass(frozen=True)
class WeightVector:
    """A point of ``{lam : sum(lam) = 0}``; construction projects by removing the mean."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if v.ndim != 1:
            raise ValueError("weights must be a 1-D vector")
        v -= v.mean()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, N: int) -> "WeightVector":
        return cls(np.zeros(N))

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def tolist(self):
        return self.values.tolist()


@dataclass(frozen=True)
class RegionMassReport:
    masses: np.ndarray
    total: float
    batch_size: int


def _lam_array(lam, N: int) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (N,):
        raise ValueError(f"weight vector has length {lam.shape[0]}, measure has {N} atoms")
    return lam


def _shifted_costs(x, lam, mu: EmpiricalMeasure, metric: Metric) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lam = _lam_array(lam, mu.N)
    if x.ndim == 0 or x.shape[-1] != mu.dim:
        if mu.dim == 1:
            x = x[..., None]
        else:
            raise ValueError(f"points must have {mu.dim} coordinates")
    return metric.evaluate(x[..., None, :], mu.points) - lam


def phi_lambda(x, lam, mu: EmpiricalMeasure, metric: Metric):
    """``min_i d(x, x_i) - lam_i``; ``x`` may be a single point or an array of points."""
    out = _shifted_costs(x, lam, mu, metric).min(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def assign_region(x, lam, mu: EmpiricalMeasure, metric: Metric):
    """0-based index of the weighted region containing ``x`` (lowest index on ties)."""
    out = _shifted_costs(x, lam, mu, metric).argmin(axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def batch_phi_assign(batch: SampleBatch, lam, mu: EmpiricalMeasure, metric: Metric):
    """``phi_lambda`` and region index at every batch point, from the memoized cost table."""
    shifted = batch.cost_matrix(mu, metric) - _lam_array(lam, mu.N)
    idx = shifted.argmin(axis=1)
    phi = np.take_along_axis(shifted, idx[:, None], axis=1)[:, 0]
    return phi, idx


def ratio_on_batch(ratio, batch: SampleBatch) -> np.ndarray:
    """Evaluate a density ratio ``q/p`` at the batch points.

    ``ratio`` may be ``None`` (meaning ``q = p``), an array already aligned
    with the batch, an object exposing ``on_batch(batch)``, or a vectorized
    callable.
    """
    if ratio is None:
        return np.ones(batch.M)
    if hasattr(ratio, "on_batch"):
        return ratio.on_batch(batch)
    if callable(ratio):
        values = np.asarray(ratio(batch.points), dtype=float)
    else:
        values = np.asarray(ratio, dtype=float)
    if values.shape != (batch.M,):
        raise ValueError("ratio must produce one value per batch point")
    return values


def masses_from_assignment(idx: np.ndarray, weighted: np.ndarray, N: int) -> np.ndarray:
    return np.bincount(idx, weights=weighted, minlength=N)


def region_masses(batch: SampleBatch, ratio, lam, mu: EmpiricalMeasure, metric: Metric) -> RegionMassReport:
    """Importance-sampling estimate of the mass of ``q`` on each weighted region.

    Parameters
    ----------
    batch : SampleBatch
        Draws from the prior ``p``.
    ratio : callable, array or None
        ``q/p`` evaluated at batch points (``None`` for ``q = p``).
    lam : array_like, shape (N,)
        Region weights.

    Returns
    -------
    RegionMassReport
        ``masses[i] = sum_m w_m ratio(x_m) [x_m in R_i]``.
    """
    if batch.M == 0:
        raise ValueError("empty sample batch")
    r = ratio_on_batch(ratio, batch)
    _, idx = batch_phi_assign(batch, lam, mu, metric)
    masses = masses_from_assignment(idx, batch.weights * r, mu.N)
    return RegionMassReport(masses, float(masses.sum()), batch.M)


def grid_centers(domain: BoxDomain, resolution: int) -> np.ndarray:
    """Cell centers of a ``resolution x resolution`` raster, shape ``(res, res, 2)``.

    Row 0 is the top of the image (largest second coordinate), column 0 the
    left edge (smallest first coordinate).
    """
    if domain.dim != 2:
        raise ValueError("rasterization is only defined for 2-D domains")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    step = (domain.hi - domain.lo) / resolution
    xs = domain.lo[0] + step[0] * (np.arange(resolution) + 0.5)
    ys = domain.hi[1] - step[1] * (np.arange(resolution) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.stack([gx, gy], axis=-1)


def rasterize_regions(lam, mu: EmpiricalMeasure, metric: Metric, resolution: int,
                      domain: BoxDomain | None = None) -> np.ndarray:
    domain = domain or mu.domain
    if domain is None:
        raise ValueError("a domain is needed to rasterize")
    if domain.dim != 2:
        raise ValueError("rasterization is only defined for 2-D domains")
    centers = grid_centers(domain, resolution)
    return assign_region(centers, lam, mu, metric)
