"""Two-dimensional concave dual of the single-constraint entropy problem.

For fixed weights ``lam`` the least cross-entropy density subject to
``E_q[phi_lambda] <= delta`` has the form ``q = p * exp(-1 - v*phi_lambda - u)``,
where ``(u, v)`` with ``v >= 0`` maximizes

    D(u, v) = -u - v*delta - E_p[exp(-1 - v*phi_lambda - u)].

Every expectation under ``p`` is a weighted average over a fixed sample batch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import EmpiricalMeasure, Metric, PriorModel, SampleBatch
from .voronoi import WeightVector, batch_phi_assign, phi_lambda

log = logging.getLogger(__name__)

MAX_NEWTON_ITER = 200


@dataclass(frozen=True)
class DualPair:
    u: float = -1.0
    v: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "v", float(self.v))
        if self.v < 0:
            raise ValueError("the multiplier v must be nonnegative")


@dataclass(frozen=True)
class RatioFn:
    """``q/p`` for ``q = p * exp(-1 - v*phi_lambda - u)``, evaluated in log space."""

    lam: WeightVector
    dual: DualPair
    mu: EmpiricalMeasure
    metric: Metric

    def log_ratio_from_phi(self, phi: np.ndarray) -> np.ndarray:
        return -1.0 - self.dual.v * phi - self.dual.u

    def __call__(self, x):
        phi = phi_lambda(x, self.lam.values, self.mu, self.metric)
        out = np.exp(self.log_ratio_from_phi(np.asarray(phi)))
        return float(out) if np.ndim(out) == 0 else out

    def on_batch(self, batch: SampleBatch) -> np.ndarray:
        phi, _ = batch_phi_assign(batch, self.lam.values, self.mu, self.metric)
        return np.exp(self.log_ratio_from_phi(phi))


@dataclass(frozen=True)
class EntropySolution:
    lambda_star: WeightVector
    dual: DualPair
    delta: float
    prior: PriorModel
    mass: float
    transport_cost: float
    cross_entropy: float
    converged: bool
    seed: int
    M: int
    extra: dict = field(default_factory=dict, compare=False)

    def ratio(self, mu: EmpiricalMeasure, metric: Metric) -> RatioFn:
        return RatioFn(self.lambda_star, self.dual, mu, metric)

    def density(self, x, mu: EmpiricalMeasure, metric: Metric):
        """Value of the optimal density ``q*`` at ``x``."""
        return self.prior.density(x) * self.ratio(mu, metric)(x)

    def to_dict(self) -> dict:
        out = {
            "lambda": self.lambda_star.tolist(),
            "u": self.dual.u,
            "v": self.dual.v,
            "delta": self.delta,
            "seed": self.seed,
            "M": self.M,
            "diagnostics": {
                "mass": self.mass,
                "transport_cost": self.transport_cost,
                "cross_entropy": self.cross_entropy,
            },
            "converged": self.converged,
        }
        out.update(self.extra)
        return out


def default_tol(M: int) -> float:
    return max(1e-8, 0.1 / math.sqrt(M))


def _exponent(u: float, v: float, phi: np.ndarray) -> np.ndarray:
    return -1.0 - v * phi - u


def _moments(u, v, phi, w):
    r = np.exp(_exponent(u, v, phi))
    wr = w * r
    m0 = float(wr.sum())
    m1 = float(np.dot(wr, phi))
    m2 = float(np.dot(wr, phi * phi))
    return m0, m1, m2


def _objective_from_phi(u, v, delta, phi, w) -> float:
    e = _exponent(u, v, phi)
    top = e.max()
    if top > 700.0:
        return -math.inf
    return -u - v * delta - float(np.dot(w, np.exp(e)))


def _phi(lam, batch, mu, metric):
    return batch_phi_assign(batch, np.asarray(lam, dtype=float), mu, metric)[0]


def dual_objective(pair: DualPair, lam, delta: float, batch: SampleBatch,
                   mu: EmpiricalMeasure, metric: Metric) -> float:
    return _objective_from_phi(pair.u, pair.v, delta, _phi(lam, batch, mu, metric), batch.weights)


def dual_gradient_hessian(pair: DualPair, lam, delta: float, batch: SampleBatch,
                          mu: EmpiricalMeasure, metric: Metric):
    """Gradient ``(m0 - 1, m1 - delta)`` and Hessian ``-[[m0, m1], [m1, m2]]``.

    ``m_k`` is the ``k``-th moment of ``phi_lambda`` under the unnormalized
    density ``p * exp(-1 - v*phi_lambda - u)``.
    """
    phi = _phi(lam, batch, mu, metric)
    m0, m1, m2 = _moments(pair.u, pair.v, phi, batch.weights)
    grad = np.array([m0 - 1.0, m1 - delta])
    hess = -np.array([[m0, m1], [m1, m2]])
    return grad, hess


def _optimal_u(v: float, phi: np.ndarray, w: np.ndarray) -> float:
    # closed-form maximizer in u for fixed v: makes m0 = 1
    e = -v * phi
    top = e.max()
    return -1.0 + top + math.log(float(np.dot(w, np.exp(e - top))))


@dataclass(frozen=True)
class DualResult:
    pair: DualPair
    value: float
    grad: np.ndarray
    iterations: int
    converged: bool
    m0: float
    m1: float


def _solve_from_phi(phi, w, delta, tol, start: DualPair | None = None) -> DualResult:
    u, v = (-1.0, 0.0) if start is None else (start.u, start.v)
    f = _objective_from_phi(u, v, delta, phi, w)
    if not math.isfinite(f):
        u, v = -1.0, 0.0
        f = _objective_from_phi(u, v, delta, phi, w)

    converged = False
    it = 0
    while True:
        m0, m1, m2 = _moments(u, v, phi, w)
        g = np.array([m0 - 1.0, m1 - delta])
        on_face = v <= 0.0 and g[1] <= 0.0
        if abs(g[0]) <= tol and (g[1] <= tol if on_face else abs(g[1]) <= tol):
            converged = True
            break
        if it >= MAX_NEWTON_ITER:
            break
        it += 1

        if on_face:
            direction = np.array([g[0] / m0, 0.0])
        else:
            H = -np.array([[m0, m1], [m1, m2]])
            try:
                direction = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                direction = g.copy()
            if float(direction @ g) <= 0.0:
                direction = g.copy()

        # projected backtracking (Armijo, factor 0.5)
        t = 1.0
        accepted = False
        for _ in range(60):
            nu = u + t * direction[0]
            nv = max(v + t * direction[1], 0.0)
            nf = _objective_from_phi(nu, nv, delta, phi, w)
            if nf >= f + 1e-4 * (g[0] * (nu - u) + g[1] * (nv - v)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        u, v = nu, nv
        # exact coordinate step in u keeps the iterate normalized
        nu = _optimal_u(v, phi, w)
        nf2 = _objective_from_phi(nu, v, delta, phi, w)
        if nf2 >= nf:
            u, nf = nu, nf2
        f = nf

    m0, m1, _ = _moments(u, v, phi, w)
    g = np.array([m0 - 1.0, m1 - delta])
    return DualResult(DualPair(u, v), f, g, it, converged, m0, m1)


def solve_dual(lam, delta: float, batch: SampleBatch, mu: EmpiricalMeasure, metric: Metric,
               tol: float | None = None, start: DualPair | None = None):
    """Maximize the two-dimensional dual at fixed ``lam``.

    Projected Newton iteration on ``{v >= 0}`` with Armijo backtracking,
    started from ``(-1, 0)`` (the exact optimum when the constraint is slack)
    unless ``start`` is given. Returns ``(DualPair, RatioFn, DualResult)``;
    ``DualResult.converged`` is False if 200 iterations did not reach ``tol``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    tol = default_tol(batch.M) if tol is None else tol
    lam_w = lam if isinstance(lam, WeightVector) else WeightVector(lam)
    phi = _phi(lam_w.values, batch, mu, metric)
    res = _solve_from_phi(phi, batch.weights, delta, tol, start)
    if not res.converged:
        log.warning("dual Newton did not converge (grad=%s)", res.grad)
    return res.pair, RatioFn(lam_w, res.pair, mu, metric), res


def gamma_value(lam, delta: float, batch: SampleBatch, mu: EmpiricalMeasure, metric: Metric,
                tol: float | None = None, start: DualPair | None = None):
    """Least cross-entropy under the single constraint at ``lam``, with its dual pair."""
    pair, _, res = solve_dual(lam, delta, batch, mu, metric, tol=tol, start=start)
    # the dual value at (-1, 0) is 1 - sum(w), which can round to -1e-16
    return max(res.value, 0.0), pair


def cross_entropy(ratio, batch: SampleBatch) -> float:
    """Sample estimate of ``E_p[r log r]`` where ``r = q/p``; ``r log r`` is taken as 0 at ``r = 0``."""
    if hasattr(ratio, "on_batch"):
        r = ratio.on_batch(batch)
    elif callable(ratio):
        r = np.asarray(ratio(batch.points), dtype=float)
    else:
        r = np.asarray(ratio, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    return batch.expect(terms)
