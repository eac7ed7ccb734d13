import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entroball.domain import EUCLIDEAN, MANHATTAN, BoxDomain, EmpiricalMeasure
from entroball.voronoi import (
    WeightVector,
    assign_region,
    phi_lambda,
    rasterize_regions,
    region_masses,
)


@pytest.fixture
def two_atoms_1d(interval):
    return EmpiricalMeasure(np.array([0.0, 1.0]), interval)


def test_weight_vector_projects():
    w = WeightVector([1.0, 2.0, 3.0])
    assert abs(w.values.sum()) < 1e-12
    assert np.allclose(w.values, [-1, 0, 1])


def test_phi_midpoint(two_atoms_1d):
    assert phi_lambda(0.5, [0, 0], two_atoms_1d, EUCLIDEAN) == 0.5


def test_phi_weighted(two_atoms_1d):
    assert phi_lambda(0.5, [0.2, -0.2], two_atoms_1d, EUCLIDEAN) == pytest.approx(0.3)


def test_phi_single_atom(square):
    mu = EmpiricalMeasure([[0.2, 0.4]], square)
    x = np.array([0.7, 0.1])
    assert phi_lambda(x, [0.0], mu, EUCLIDEAN) == pytest.approx(EUCLIDEAN.evaluate(x, [0.2, 0.4]))


def test_phi_length_mismatch(two_atoms_1d):
    with pytest.raises(ValueError):
        phi_lambda(0.5, [0.0, 0.0, 0.0], two_atoms_1d, EUCLIDEAN)


def test_assign_nearer_atom(two_atoms_1d):
    assert assign_region(0.25, [0, 0], two_atoms_1d, EUCLIDEAN) == 0


def test_assign_weighted_shift(two_atoms_1d):
    # 0.6 - 0.5 = 0.1 beats 0.4 + 0.5 = 0.9
    assert assign_region(0.6, [0.5, -0.5], two_atoms_1d, EUCLIDEAN) == 0


def test_assign_tie_goes_to_lowest_index(two_atoms_1d):
    assert assign_region(0.5, [0, 0], two_atoms_1d, EUCLIDEAN) == 0


def test_phi_is_a_lower_envelope(square, rng):
    mu = EmpiricalMeasure(rng.random((6, 2)), square)
    x = rng.random((200, 2))
    lam = WeightVector(rng.normal(size=6) * 0.2).values
    phi = phi_lambda(x, lam, mu, EUCLIDEAN)
    costs = EUCLIDEAN.pairwise(x, mu.points) - lam
    assert np.all(phi[:, None] <= costs + 1e-15)
    idx = assign_region(x, lam, mu, EUCLIDEAN)
    assert np.allclose(costs[np.arange(200), idx], phi)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_phi_concave_in_weights(seed, t):
    rng = np.random.default_rng(seed)
    mu = EmpiricalMeasure(rng.random((5, 2)), BoxDomain.unit(2))
    x = rng.random((50, 2))
    a, b = rng.normal(size=(2, 5)) * 0.3
    for metric in (EUCLIDEAN, MANHATTAN):
        mid = phi_lambda(x, t * a + (1 - t) * b, mu, metric)
        chord = t * phi_lambda(x, a, mu, metric) + (1 - t) * phi_lambda(x, b, mu, metric)
        assert np.all(mid >= chord - 1e-12)


def test_monotone_weight_response(square, rng):
    mu = EmpiricalMeasure(rng.random((5, 2)), square)
    x = rng.random((500, 2))
    lam = np.zeros(5)
    costs = EUCLIDEAN.pairwise(x, mu.points)
    idx = assign_region(x, lam, mu, EUCLIDEAN)
    sorted_costs = np.sort(costs, axis=1)
    margin = sorted_costs[:, 1] - sorted_costs[:, 0]
    for i in range(5):
        bumped = WeightVector(lam + 0.05 * np.eye(5)[i]).values
        new = assign_region(x, bumped, mu, EUCLIDEAN)
        keep = (idx == i) & (margin > 0.05)
        assert np.all(new[keep] == i)


def test_masses_symmetric_pair(interval_batch, interval):
    mu = EmpiricalMeasure(np.array([0.25, 0.75]), interval)
    rep = region_masses(interval_batch, None, [0, 0], mu, EUCLIDEAN)
    tol = 3 / math.sqrt(interval_batch.M)
    assert np.allclose(rep.masses, [0.5, 0.5], atol=tol)
    assert rep.total == pytest.approx(1.0, abs=1e-12)
    assert rep.batch_size == interval_batch.M


def test_masses_single_atom_exact(interval_batch, interval):
    mu = EmpiricalMeasure(np.array([0.3]), interval)
    rep = region_masses(interval_batch, None, [0.0], mu, EUCLIDEAN)
    assert rep.masses[0] == pytest.approx(1.0, abs=1e-12)


def test_masses_shifted_bisector(interval_batch, interval):
    # x - 0.25 - 0.1 = 0.75 - x + 0.1  gives a boundary at x = 0.6
    mu = EmpiricalMeasure(np.array([0.25, 0.75]), interval)
    rep = region_masses(interval_batch, None, [0.1, -0.1], mu, EUCLIDEAN)
    tol = 5 / math.sqrt(interval_batch.M)
    assert np.allclose(rep.masses, [0.6, 0.4], atol=tol)


def test_masses_use_the_ratio(interval_batch, interval):
    mu = EmpiricalMeasure(np.array([0.25, 0.75]), interval)
    # q(x) = 2x on [0, 1]: the left half carries 1/4 of the mass
    rep = region_masses(interval_batch, lambda x: 2 * x[:, 0], [0, 0], mu, EUCLIDEAN)
    tol = 5 / math.sqrt(interval_batch.M)
    assert np.allclose(rep.masses, [0.25, 0.75], atol=tol)


def _fine_grid_masses(points, lam, n=1_000_000):
    x = (np.arange(n) + 0.5) / n
    costs = np.abs(x[:, None] - points[None, :]) - lam
    return np.bincount(costs.argmin(axis=1), minlength=len(points)) / n


@pytest.mark.parametrize("points,lam", [
    ([0.1, 0.6], [0.05, -0.05]),
    ([0.2, 0.5, 0.9], [0.0, 0.0, 0.0]),
    ([0.2, 0.5, 0.9], [0.1, -0.15, 0.05]),
    ([0.7, 0.1, 0.4], [-0.05, 0.02, 0.03]),
])
def test_masses_match_interval_integrals(interval_batch, interval, points, lam):
    mu = EmpiricalMeasure(np.array(points), interval)
    rep = region_masses(interval_batch, None, lam, mu, EUCLIDEAN)
    exact = _fine_grid_masses(np.array(points), np.array(lam))
    assert np.allclose(rep.masses, exact, atol=5 / math.sqrt(interval_batch.M))


def test_masses_cover_the_domain(square_batch, square, rng):
    mu = EmpiricalMeasure(rng.random((7, 2)), square)
    lam = WeightVector(rng.normal(size=7) * 0.1).values
    rep = region_masses(square_batch, None, lam, mu, MANHATTAN)
    assert np.all(rep.masses >= 0)
    assert rep.total == pytest.approx(1.0, abs=1e-12)


def test_raster_single_atom(square):
    mu = EmpiricalMeasure([[0.4, 0.4]], square)
    grid = rasterize_regions([0.0], mu, EUCLIDEAN, 16)
    assert grid.shape == (16, 16)
    assert np.all(grid == 0)


def test_raster_unweighted_bisector(square):
    mu = EmpiricalMeasure([[0.25, 0.5], [0.75, 0.5]], square)
    grid = rasterize_regions([0.0, 0.0], mu, EUCLIDEAN, 64)
    assert np.all(grid[:, :32] == 0)
    assert np.all(grid[:, 32:] == 1)


def test_raster_rejects_non_2d(interval):
    mu = EmpiricalMeasure(np.array([0.5]), interval)
    with pytest.raises(ValueError):
        rasterize_regions([0.0], mu, EUCLIDEAN, 16)
    with pytest.raises(ValueError):
        rasterize_regions([0.0, 0.0], EmpiricalMeasure([[0.2, 0.2], [0.8, 0.8]], BoxDomain.unit(2)),
                          EUCLIDEAN, 1)


def _hyperbola_area_fraction(t, n=2000):
    # region 1 of atoms (0.25, 0.25), (0.75, 0.75) with weights (t, -t): d1 - d2 <= 2t
    c = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(c, c)
    d1 = np.hypot(gx - 0.25, gy - 0.25)
    d2 = np.hypot(gx - 0.75, gy - 0.75)
    return np.mean(d1 - d2 <= 2 * t)


def test_raster_weight_shift_on_diagonal(square):
    mu = EmpiricalMeasure([[0.25, 0.25], [0.75, 0.75]], square)
    fractions = []
    for t in (0.0, 0.05, 0.1, 0.2, 0.3):
        grid = rasterize_regions([t, -t], mu, EUCLIDEAN, 200)
        frac = np.mean(grid == 0)
        assert frac == pytest.approx(_hyperbola_area_fraction(t), abs=0.01)
        fractions.append(frac)
    assert all(a < b for a, b in zip(fractions, fractions[1:]))
