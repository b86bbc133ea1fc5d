"""Maxmin pricing with a known mean and an upper bound on values.

The adversary's problem at reserve r = c reduces to minimizing an integral of
the second-highest survival function subject to the mean constraint.  Its
pointwise Lagrangian is isomorphic to a competitive firm's profit problem
with total cost ``(n-1)F^n - n F^(n-1)``: the optimal cdf level at each value
is read off a supply curve, zero below the minimum of average cost and the
larger root of "price = marginal cost" above it.  The result is a binary
worst case, and a family of binary threat distributions certifies that no
reserve beats the seller's own valuation.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._kernel import marginal_cost
from .auction import AuctionSetting, Bounded, TieRule, expected_revenue
from .distributions import Binary, Distribution, PointMass
from .errors import InvalidSettingError

_LEVEL_TOL = 1e-12


def _require_bounded(setting: AuctionSetting) -> Bounded:
    if not isinstance(setting.constraint, Bounded):
        raise InvalidSettingError("this operation needs a Bounded constraint")
    return setting.constraint


def min_avg_cost_level(n: int) -> float:
    """Cdf level minimizing the Lagrangian's average cost: 1 - 1/(n-1)^2."""
    return 1.0 - 1.0 / (n - 1) ** 2


def min_avg_cost(n: int) -> float:
    """The average-cost minimum itself: n(n-1) z(q) at the critical level."""
    return n * (n - 1) * marginal_cost(min_avg_cost_level(n), n)


def supply_curve(lam: float, n: int) -> tuple[float, ...]:
    """Pointwise argmin correspondence of the Lagrangian integrand.

    Returns the set of optimal cdf levels for multiplier ``lam``: empty
    output never occurs; the two-valued branch appears exactly at the
    average-cost minimum (equality tested at 1e-12).
    """
    critical = min_avg_cost(n)
    level = min_avg_cost_level(n)
    if lam < critical - _LEVEL_TOL:
        return (0.0,)
    if abs(lam - critical) <= _LEVEL_TOL:
        return (0.0, level)
    if lam >= 0.0:
        return (1.0,)
    # Larger root of lam = n(n-1) z(y) on [level, 1]; z is increasing there.
    lo, hi = level, 1.0
    while hi - lo > _LEVEL_TOL:
        mid = 0.5 * (lo + hi)
        if n * (n - 1) * marginal_cost(mid, n) < lam:
            lo = mid
        else:
            hi = mid
    return (0.5 * (lo + hi),)


def worst_case_floor(setting: AuctionSetting) -> float:
    """Lowest support point of the worst-case distribution (before the c clamp)."""
    bound = _require_bounded(setting)
    n, m, vmax = setting.n, bound.mean, bound.vmax
    if n == 2:
        return 0.0
    return max(m - (vmax - m) / ((n - 1) ** 2 - 1), 0.0)


def _binary_with_mean(low: float, vmax: float, mean: float) -> Binary:
    return Binary(low, vmax, (vmax - mean) / (vmax - low))


def worst_case(setting: AuctionSetting) -> Binary:
    """Revenue-minimizing distribution at reserve r = c."""
    bound = _require_bounded(setting)
    low = max(worst_case_floor(setting), setting.cost)
    return _binary_with_mean(low, bound.vmax, bound.mean)


def threat(reserve: float, setting: AuctionSetting) -> tuple[Distribution, TieRule]:
    """Distribution holding revenue at ``reserve`` below the maxmin value.

    Threats are feasible but need not be worst case for their reserve; the
    sale-at-reserve flag encodes the limit of atoms placed just above r.
    """
    bound = _require_bounded(setting)
    m, vmax, c = bound.mean, bound.vmax, setting.cost
    floor = worst_case_floor(setting)
    if reserve >= m:
        return PointMass(m), TieRule.NO_SALE_AT_RESERVE
    if reserve < floor:
        return _binary_with_mean(floor, vmax, m), TieRule.NO_SALE_AT_RESERVE
    if reserve < c:  # only reachable when floor < c
        return _binary_with_mean(reserve, vmax, m), TieRule.SALE_AT_RESERVE
    return _binary_with_mean(reserve, vmax, m), TieRule.NO_SALE_AT_RESERVE


def bounded_gap_coeff(n: int) -> float:
    """Coefficient of (vmax - mean) in the maxmin revenue gap.

    Equals (n/(n-1)) q^(n-2) - 1 at the critical level q; for n = 2 the 0^0
    convention gives 1, matching the binary-at-zero worst case.
    """
    return n / (n - 1) * min_avg_cost_level(n) ** (n - 2) - 1.0


@dataclass(frozen=True)
class BoundedSolution:
    support_floor: float
    critical_level: float
    critical_multiplier: float
    worst_case: Binary
    maxmin_revenue: float
    price_set: tuple[float, float]
    unique: bool
    may_extend_above_cost: bool

    def payload(self) -> dict:
        return {
            "setting": "bounded",
            "support_floor": self.support_floor,
            "critical_level": self.critical_level,
            "critical_multiplier": self.critical_multiplier,
            "worst_case": self.worst_case.payload(),
            "maxmin_revenue": self.maxmin_revenue,
            "price_set": list(self.price_set),
            "unique": self.unique,
            "may_extend_above_cost": self.may_extend_above_cost,
        }


def solve(setting: AuctionSetting) -> BoundedSolution:
    """Maxmin reserve prices and revenue for the bounded-values setting.

    The seller's own valuation c is always maxmin; it is the unique maxmin
    price iff the worst case's support floor lies strictly below c.  On the
    boundary the non-unique branch applies, and the reported interval [0, c]
    may extend above c (not characterized here).
    """
    _require_bounded(setting)
    c = setting.cost
    floor = worst_case_floor(setting)
    distribution = worst_case(setting)
    revenue = expected_revenue(distribution, c, setting, TieRule.SALE_AT_RESERVE)
    unique = floor < c
    return BoundedSolution(
        support_floor=floor,
        critical_level=min_avg_cost_level(setting.n),
        critical_multiplier=min_avg_cost(setting.n),
        worst_case=distribution,
        maxmin_revenue=revenue,
        price_set=(c, c) if unique else (0.0, c),
        unique=unique,
        may_extend_above_cost=not unique,
    )
