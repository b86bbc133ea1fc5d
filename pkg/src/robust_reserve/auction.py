"""Second-price auction revenue under a reserve, exactly and by simulation.

With n iid values drawn from F, a reserve r, and a seller who keeps her own
valuation c when the good does not trade, the expected revenue is

    R(F, r) = r - (r - c) F(r)^n + int_r^inf [1 - n F^(n-1)(v) + (n-1) F^n(v)] dv.

The integrand is the survival function of the second-highest value at cdf
level F(v), so the integral is taken exactly: atom and flat pieces contribute
in closed form, linear-cdf pieces through the polynomial antiderivative, and
polynomial-quantile tails through Gauss rules of exact order in quantile
space.  No adaptive quadrature is involved anywhere.

An atom of F sitting exactly at r is ambiguous: does the good trade when the
highest value ties the reserve?  ``TieRule`` pins that down.  Under
``SALE_AT_RESERVE`` the formula uses the left limit F(r-) instead of F(r),
which reproduces the limit of shifting the atom infinitesimally above r; the
two evaluations differ by exactly (r - c) (F(r)^n - F(r-)^n).
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import _kernel
from ._rng import uniform_stream, worker_count
from .distributions import (
    AtomQuantileTail,
    AtomUniformTail,
    Binary,
    DiscreteCdf,
    Distribution,
    PointMass,
)
from .errors import InvalidSettingError, QuadratureError

_MC_CHUNK = 1 << 16


class TieRule(enum.Enum):
    """Whether an atom of the value distribution exactly at the reserve trades."""

    NO_SALE_AT_RESERVE = "no_sale_at_reserve"
    SALE_AT_RESERVE = "sale_at_reserve"


@dataclass(frozen=True)
class Bounded:
    """Known mean plus an upper bound on values: support in [0, vmax]."""

    mean: float
    vmax: float

    def __post_init__(self):
        if not (0.0 < self.mean < self.vmax):
            raise InvalidSettingError("bounded setting needs 0 < mean < vmax")


@dataclass(frozen=True)
class VarianceBound:
    """Known mean plus an upper bound on the variance; values nonnegative."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.mean > 0.0:
            raise InvalidSettingError("mean must be positive")
        if not self.variance > 0.0:
            raise InvalidSettingError("variance bound must be positive")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))


Constraint = Union[Bounded, VarianceBound]


@dataclass(frozen=True)
class AuctionSetting:
    n: int
    cost: float
    constraint: Constraint

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 2):
            raise InvalidSettingError("bidder count must be an integer >= 2")
        if not 0.0 <= self.cost < self.constraint.mean:
            raise InvalidSettingError("seller valuation must satisfy 0 <= c < mean")

    @property
    def mean(self) -> float:
        return self.constraint.mean


@dataclass(frozen=True)
class RevenueReport:
    """One simulate run: exact value, Monte Carlo estimate, provenance."""

    analytic: Optional[float]
    quadrature: float
    mc_estimate: float
    mc_stderr: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.mc_stderr < 0.0:
            raise InvalidSettingError("standard error cannot be negative")
        if self.samples <= 0:
            raise InvalidSettingError("sample count must be positive")

    def payload(self) -> dict:
        return {
            "analytic": self.analytic,
            "quadrature": self.quadrature,
            "mc_estimate": self.mc_estimate,
            "mc_stderr": self.mc_stderr,
            "samples": self.samples,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# Exact tail integrals of f(F(v)) dv over [lo, inf)
# ---------------------------------------------------------------------------

def _tail_integral(
    dist: Distribution,
    lo: float,
    n: int,
    level_func: Callable,
    level_antideriv: Callable,
) -> float:
    """Integrate ``level_func(F(v), n)`` over v in [lo, inf), exactly.

    ``level_func(1, n)`` must be 0 (a survival function), so the region above
    the support contributes nothing.
    """
    total = 0.0
    if isinstance(dist, PointMass):
        total += level_func(0.0, n) * max(dist.a - lo, 0.0)
    elif isinstance(dist, Binary):
        total += level_func(0.0, n) * max(dist.low - lo, 0.0)
        total += level_func(dist.p_low, n) * max(dist.high - max(lo, dist.low), 0.0)
    elif isinstance(dist, AtomUniformTail):
        total += level_func(0.0, n) * max(dist.atom_point - lo, 0.0)
        total += level_func(dist.atom_mass, n) * max(dist.tail_low - max(lo, dist.atom_point), 0.0)
        if dist.tail_mass > 0.0 and lo < dist.tail_high:
            v0 = max(lo, dist.tail_low)
            u0 = dist.cdf(v0) if v0 > dist.tail_low else dist.atom_mass
            slope = (dist.tail_high - dist.tail_low) / dist.tail_mass
            total += slope * (level_antideriv(1.0, n) - level_antideriv(u0, n))
    elif isinstance(dist, AtomQuantileTail):
        p = dist.params
        total += level_func(0.0, n) * max(p.rho - lo, 0.0)
        top = p.support_top
        if lo < top:
            u0 = p.q if lo <= p.rho else dist.cdf(lo)
            s = p.n * (p.n - 1)

            def integrand(u):
                return level_func(u, n) * s * _kernel.marginal_cost_deriv(u, p.n) / (2.0 * p.lambda2)

            # level_func has degree n, the quantile slope degree p.n - 2:
            # an order of max(n, p.n) + 1 integrates the product exactly.
            order = max(n, p.n) + 1
            total += _kernel.gauss_integrate(integrand, u0, 1.0, order)
    elif isinstance(dist, DiscreteCdf):
        grid = dist.grid
        total += level_func(0.0, n) * max(grid[0] - lo, 0.0)
        if grid.size > 1:
            lengths = np.maximum(grid[1:] - np.maximum(grid[:-1], lo), 0.0)
            total += float(lengths @ level_func(dist.cdf_values[:-1], n))
    else:  # pragma: no cover - unreachable for the supported variants
        raise TypeError(f"unsupported distribution {type(dist).__name__}")
    if not np.isfinite(total):
        raise QuadratureError("tail integral did not evaluate to a finite value", residual=total)
    return total


def expected_revenue(
    dist: Distribution,
    reserve: float,
    setting: AuctionSetting,
    tie: TieRule = TieRule.NO_SALE_AT_RESERVE,
) -> float:
    """Expected seller revenue (including the kept valuation c on no-trade)."""
    if reserve < 0.0:
        raise InvalidSettingError("reserve must be nonnegative")
    n, c = setting.n, setting.cost
    level = dist.cdf_left(reserve) if tie is TieRule.SALE_AT_RESERVE else dist.cdf(reserve)
    tail = _tail_integral(
        dist, reserve, n, _kernel.second_highest_survival, _kernel.second_highest_survival_antideriv
    )
    value = reserve - (reserve - c) * level**n + tail
    if not np.isfinite(value):
        raise QuadratureError("revenue did not evaluate to a finite value", residual=value)
    return float(value)


def expected_second_highest(dist: Distribution, n: int) -> float:
    """E[second-highest of n iid draws]; the r = c = 0 revenue."""
    return _tail_integral(
        dist, 0.0, n, _kernel.second_highest_survival, _kernel.second_highest_survival_antideriv
    )


def expected_max(dist: Distribution, n: int) -> float:
    """E[highest of n iid draws]; the full social surplus of any allocation."""
    return _tail_integral(dist, 0.0, n, _kernel.top_survival, _kernel.top_survival_antideriv)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _simulate_chunk(dist, reserve, n, cost, sale_at_reserve, seed, start, count):
    u = uniform_stream(seed, start * n, count * n).reshape(count, n)
    values = np.asarray(dist.quantile(u), dtype=float)
    top = values.max(axis=1)
    second = np.partition(values, n - 2, axis=1)[:, n - 2]
    sold = top > reserve
    if sale_at_reserve:
        sold |= top == reserve
    revenue = np.where(sold, np.maximum(second, reserve), cost)
    return float(revenue.sum()), float(np.square(revenue).sum())

def monte_carlo_revenue(
    dist: Distribution,
    reserve: float,
    setting: AuctionSetting,
    tie: TieRule = TieRule.NO_SALE_AT_RESERVE,
    samples: int = 1_000_000,
    seed: int = 0,
    workers: int | None = None,
) -> tuple[float, float]:
    """Simulate the auction directly; returns (estimate, standard error).

    Auction ``i`` consumes uniforms ``[i*n, (i+1)*n)`` of the seed's stream,
    so the estimate is identical for any chunking or worker count.
    """
    if samples < 1_000:
        raise InvalidSettingError("need at least 1000 samples")
    n, c = setting.n, setting.cost
    sale = tie is TieRule.SALE_AT_RESERVE
    starts = list(range(0, samples, _MC_CHUNK))
    jobs = [(s, min(_MC_CHUNK, samples - s)) for s in starts]

    def run(job):
        start, count = job
        return _simulate_chunk(dist, reserve, n, c, sale, seed, start, count)

    threads = worker_count(workers)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]

    total = 0.0
    total_sq = 0.0
    for part_sum, part_sq in parts:  # fixed chunk order => deterministic sums
        total += part_sum
        total_sq += part_sq
    mean = total / samples
    var = max(total_sq - samples * mean**2, 0.0) / (samples - 1)
    return mean, float(np.sqrt(var / samples))


def simulate_report(
    dist: Distribution,
    reserve: float,
    setting: AuctionSetting,
    tie: TieRule = TieRule.NO_SALE_AT_RESERVE,
    samples: int = 1_000_000,
    seed: int = 0,
    analytic: Optional[float] = None,
    workers: int | None = None,
) -> RevenueReport:
    """Bundle the exact evaluation with a Monte Carlo cross-check."""
    exact = expected_revenue(dist, reserve, setting, tie)
    estimate, stderr = monte_carlo_revenue(dist, reserve, setting, tie, samples, seed, workers)
    return RevenueReport(
        analytic=analytic,
        quadrature=exact,
        mc_estimate=estimate,
        mc_stderr=stderr,
        samples=samples,
        seed=seed,
    )
