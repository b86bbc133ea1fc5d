"""Shared independent oracles for the test suite.

Everything here deliberately avoids the library's own integration paths:
revenue by exhaustive outcome enumeration, moments by generic numerical
quadrature of survival functions, so closed forms are checked against code
that cannot share their bugs.
"""

import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from robust_reserve.distributions import DiscreteCdf


def enumerate_revenue(points, masses, reserve, n, cost, sale_at_reserve=False):
    """Second-price auction revenue by exhaustive outcome enumeration."""
    points = list(points)
    masses = list(masses)
    total = 0.0
    for combo in itertools.product(range(len(points)), repeat=n):
        prob = math.prod(masses[i] for i in combo)
        if prob == 0.0:
            continue
        values = sorted((points[i] for i in combo), reverse=True)
        top, second = values[0], values[1]
        sold = top > reserve or (sale_at_reserve and top == reserve)
        total += prob * (max(second, reserve) if sold else cost)
    return total


def enumerate_order_statistic(points, masses, n, k):
    """E[k-th highest of n iid draws] by enumeration (k=1 is the max)."""
    total = 0.0
    for combo in itertools.product(range(len(points)), repeat=n):
        prob = math.prod(masses[i] for i in combo)
        values = sorted((points[i] for i in combo), reverse=True)
        total += prob * values[k - 1]
    return total


def quadrature_moments(dist, top=None):
    """(mean, variance) via survival-function quadrature, independent of moments()."""
    hi = dist.support_top() if top is None else top
    breaks = sorted({dist.support_bottom(), hi})
    mean, _ = integrate.quad(lambda v: 1.0 - dist.cdf(v), 0.0, hi, points=breaks, limit=500)
    second, _ = integrate.quad(
        lambda v: 2.0 * v * (1.0 - dist.cdf(v)), 0.0, hi, points=breaks, limit=500
    )
    return mean, second - mean**2


def quadrature_revenue(dist, reserve, n, cost, sale_at_reserve=False):
    """Eq-style revenue with the tail integral done by adaptive quadrature."""
    level = dist.cdf_left(reserve) if sale_at_reserve else dist.cdf(reserve)
    hi = max(dist.support_top(), reserve)
    breaks = sorted({dist.support_bottom(), hi, reserve})

    def integrand(v):
        u = dist.cdf(v)
        return 1.0 - n * u ** (n - 1) + (n - 1) * u**n

    tail = 0.0
    if hi > reserve:
        tail, _ = integrate.quad(integrand, reserve, hi, points=breaks, limit=500)
    return reserve - (reserve - cost) * level**n + tail


def random_discrete_with_mean(rng, mean, vmax, max_points=6):
    """Random step cdf on [0, vmax] whose mean is exactly ``mean`` (up to fp dust)."""
    for _ in range(100):
        size = int(rng.integers(3, max_points + 1))
        points = np.sort(rng.uniform(0.0, vmax, size=size))
        points[0] = min(points[0], mean * 0.5)
        points[-1] = max(points[-1], min(vmax, mean * 1.5))
        if np.unique(points).size != size:
            continue
        weights = rng.dirichlet(np.ones(size))
        mu = float(weights @ points)
        lo_i, hi_i = 0, size - 1
        span = points[hi_i] - points[lo_i]
        if span <= 0:
            continue
        shift = (mean - mu) / span
        weights[lo_i] -= shift
        weights[hi_i] += shift
        if weights.min() < 0:
            continue
        return DiscreteCdf(points, np.cumsum(weights))
    raise AssertionError("could not draw a feasible discrete distribution")


def mass_shift_to_cost(dist: DiscreteCdf, cost: float) -> DiscreteCdf:
    """Move all mass below ``cost`` onto it, then rescale to restore the mean.

    The construction with scale (m - c) / int_c (1 - F) keeps the mean and
    weakly raises the cdf above c.
    """
    mean = dist.moments()[0]
    grid = dist.grid
    tail_integral = max(grid[0] - cost, 0.0) + float(
        np.maximum(grid[1:] - np.maximum(grid[:-1], cost), 0.0) @ (1.0 - dist.cdf_values[:-1])
    )
    beta = (mean - cost) / tail_integral
    keep = grid > cost
    new_grid = np.concatenate([[cost], grid[keep]])
    levels = np.concatenate(
        [[beta * dist.cdf(cost) + 1.0 - beta], beta * dist.cdf_values[keep] + 1.0 - beta]
    )
    levels[-1] = 1.0
    return DiscreteCdf(new_grid, levels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
