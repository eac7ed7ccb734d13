"""Semi-discrete optimal transport from a density to an empirical measure.

The transport cost equals the maximum over zero-sum weight vectors ``lam`` of
``Psi(lam) = E_q[phi_lambda]``. ``Psi`` is concave with supergradient
``1/N - mass_i``, and the optimal map sends weighted region ``i`` to atom ``i``.
All integrals are sample averages over one fixed batch drawn from the prior,
with ``q`` entering through the ratio ``q/p``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import BoxDomain, EmpiricalMeasure, Metric, SampleBatch
from .voronoi import (
    RegionMassReport,
    WeightVector,
    assign_region,
    batch_phi_assign,
    masses_from_assignment,
    ratio_on_batch,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``t_k`` for supergradient ascent.

    ``harmonic`` uses ``t_k = c / k``, square summable but not summable.
    ``polyak`` scales ``c / sqrt(k)`` by ``min(1, ||g||)`` so steps shrink with
    the remaining imbalance; it is only an option for experiments.
    ``c`` defaults to ``diam(K) * sqrt(N)``: gradient entries are mass
    imbalances of size ``O(1/N)`` while the weights live on the scale of the
    diameter.
    """

    kind: str = "harmonic"
    c: float | None = None

    def step(self, k: int, c: float, grad: np.ndarray) -> float:
        if self.kind == "harmonic":
            return c / k
        if self.kind == "polyak":
            return c / math.sqrt(k) * min(1.0, float(np.linalg.norm(grad)))
        raise ValueError(f"unknown step schedule {self.kind!r}")


@dataclass(frozen=True)
class StopRule:
    grad_tol: float | None = None
    max_iter: int = 10_000

    def tol_for(self, M: int) -> float:
        return self.grad_tol if self.grad_tol is not None else 1.0 / math.sqrt(M)


@dataclass(frozen=True)
class TransportSolution:
    lambda_star: WeightVector
    wasserstein: float
    masses: RegionMassReport
    iterations: int
    grad_norm: float
    converged: bool
    seed: int
    M: int

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_star.tolist(),
            "wasserstein": self.wasserstein,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "seed": self.seed,
            "M": self.M,
            "masses": self.masses.masses.tolist(),
        }


def psi(lam, batch: SampleBatch, ratio, mu: EmpiricalMeasure, metric: Metric) -> float:
    """Sample average of ``phi_lambda(x) * q(x)/p(x)`` over the batch."""
    if batch.M == 0:
        raise ValueError("empty sample batch")
    phi, _ = batch_phi_assign(batch, lam, mu, metric)
    return batch.expect(phi * ratio_on_batch(ratio, batch))


def _psi_and_grad(lam, batch, r, mu, metric):
    phi, idx = batch_phi_assign(batch, lam, mu, metric)
    wr = batch.weights * r
    masses = masses_from_assignment(idx, wr, mu.N)
    # projection of -masses onto the zero-sum subspace
    grad = masses.mean() - masses
    return float(np.dot(wr, phi)), grad, masses


def _default_step_scale(mu: EmpiricalMeasure, metric: Metric) -> float:
    if mu.domain is not None:
        diam = mu.domain.diameter(metric)
    else:
        spread = mu.points.max(axis=0) - mu.points.min(axis=0)
        diam = max(float(metric.evaluate(spread, np.zeros_like(spread))), 1.0)
    return diam * math.sqrt(mu.N)


def maximize_psi(batch: SampleBatch, ratio, mu: EmpiricalMeasure, metric: Metric,
                 schedule: StepSchedule | None = None, stop: StopRule | None = None,
                 lam0=None, fresh_samples=None) -> TransportSolution:
    """Projected supergradient ascent on ``Psi`` over zero-sum weights.

    Parameters
    ----------
    batch : SampleBatch
        Fixed draws from the prior; every iteration reuses them.
    ratio : callable, array or None
        ``q/p`` at the batch points; ``None`` transports the prior itself.
    schedule : StepSchedule, optional
        Defaults to ``t_k = diam(K) * sqrt(N) / k``.
    stop : StopRule, optional
        Stops once the projected gradient's max-norm is at most ``grad_tol``
        (default ``1/sqrt(M)``) or after ``max_iter`` steps.
    lam0 : array_like, optional
        Starting weights (default zero, the unweighted diagram).
    fresh_samples : callable, optional
        ``k -> SampleBatch``; draws a new batch every iteration instead of the
        fixed one. Only meant for variance studies; ``ratio`` must then be a
        callable or ``None``.

    Returns
    -------
    TransportSolution
        The first iterate meeting the gradient tolerance. If the cap is hit
        first, the iterate with the largest ``Psi`` seen, flagged as not
        converged.
    """
    schedule = schedule or StepSchedule()
    stop = stop or StopRule()
    N = mu.N
    tol = stop.tol_for(batch.M)
    c = schedule.c if schedule.c is not None else _default_step_scale(mu, metric)

    lam = np.zeros(N) if lam0 is None else np.asarray(WeightVector(lam0).values, dtype=float)
    r = ratio_on_batch(ratio, batch)

    best = None
    converged = False
    k = 0
    while True:
        cur_batch = batch
        cur_r = r
        if fresh_samples is not None and k > 0:
            cur_batch = fresh_samples(k)
            cur_r = ratio_on_batch(ratio, cur_batch)
        value, grad, masses = _psi_and_grad(lam, cur_batch, cur_r, mu, metric)
        gnorm = float(np.max(np.abs(grad)))
        if best is None or value > best[0]:
            best = (value, lam.copy(), masses, gnorm)
        if gnorm <= tol:
            converged = True
            best = (value, lam.copy(), masses, gnorm)
            break
        if k >= stop.max_iter:
            break
        k += 1
        lam = lam + schedule.step(k, c, grad) * grad
        lam -= lam.mean()

    value, lam_best, masses, gnorm = best
    if not converged:
        log.warning("supergradient ascent stopped after %d iterations (|g|=%.3g > %.3g)",
                    k, gnorm, tol)
    report = RegionMassReport(masses, float(masses.sum()), batch.M)
    return TransportSolution(WeightVector(lam_best), value, report, k, gnorm,
                             converged, batch.seed, batch.M)


def transport_map(sol: TransportSolution, x, mu: EmpiricalMeasure, metric: Metric):
    """Atom index that ``x`` is sent to under the optimal plan."""
    return assign_region(x, sol.lambda_star.values, mu, metric)


class Membership(str, Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class MembershipResult:
    status: Membership
    margin: float
    wasserstein: float
    converged: bool


def ball_membership(q_ratio, mu: EmpiricalMeasure, delta: float, batch: SampleBatch,
                    metric: Metric, tol: float | None = None, **solver_kw) -> MembershipResult:
    """Decide whether ``q`` lies in the transport ball of radius ``delta`` around ``mu``.

    Equivalent to checking every moment constraint ``E_q[phi_lambda] <= delta``
    at once, since the largest of them is the transport cost.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    tol = 3.0 / math.sqrt(batch.M) if tol is None else tol
    sol = maximize_psi(batch, q_ratio, mu, metric, **solver_kw)
    w = sol.wasserstein
    if w + tol < delta:
        status = Membership.INSIDE
    elif w - tol > delta:
        status = Membership.OUTSIDE
    else:
        status = Membership.BOUNDARY
    return MembershipResult(status, delta - w, w, sol.converged)


def domain_of(mu: EmpiricalMeasure) -> BoxDomain:
    if mu.domain is None:
        raise ValueError("the empirical measure carries no domain")
    return mu.domain
