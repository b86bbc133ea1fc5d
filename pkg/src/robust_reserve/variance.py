"""Maxmin pricing with a known mean and an upper bound on the variance.

With the support bound replaced by a variance bound, the adversary's problem
at r = c gains a second multiplier, and the pointwise Lagrangian argmin turns
the worst case into an atom at the bottom of support plus a continuous tail
whose *quantile* function is an explicit polynomial (``AtomQuantileTail``;
uniform for two bidders).  A member of the family is pinned down by its atom
location ``rho`` through a one-dimensional moment-ratio equation

    phi(q) = 1 + sigma^2 / (m - rho)^2,

where phi is strictly increasing in the atom mass q, so everything reduces to
a scalar bisection plus closed-form polynomial integrals.  Revenue at the
family's own atom location and its derivative in the reserve both have closed
forms, which is what makes the threat argument checkable numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from ._kernel import centered_cost_integrals, marginal_cost, marginal_cost_deriv
from .auction import AuctionSetting, TieRule, VarianceBound
from .bounded import bounded_gap_coeff, min_avg_cost_level
from .distributions import (
    AtomQuantileTail,
    AtomUniformTail,
    Distribution,
    PointMass,
    TailParams,
)
from .errors import DomainError, InvalidSettingError, QuadratureError, SolverError

# The tail's upper endpoint diverges as rho -> m and the atom mass approaches
# 1 like 1 - (4/3)(m - rho)^2 / sigma^2.  A double can place the mass only to
# one ulp, so the achievable relative moment accuracy degrades like
# eps / (1 - q); holding the 1e-9 moment contract caps the solvable moment
# ratio at about 1e6 (atom-mass gap ~1.3e-6).  Beyond the ceiling the threat
# construction clamps the atom there (revenue is within a hair of the
# no-trade value c by then), and the degenerate point mass takes over at the
# mean itself.
RHO_GUARD = 1e-9

_Q_CEILING = 1.0 - 1e-9
_PHI_CEILING = 1e6 + 1.0  # so the ceiling sits exactly 1e-3 sigma below the mean


def _rho_ceiling(setting: AuctionSetting) -> float:
    bound = _require_variance(setting)
    cap = bound.mean - max(RHO_GUARD, bound.sigma / math.sqrt(_PHI_CEILING - 1.0))
    return max(cap, worst_case_floor(setting))


def _require_variance(setting: AuctionSetting) -> VarianceBound:
    if not isinstance(setting.constraint, VarianceBound):
        raise InvalidSettingError("this operation needs a VarianceBound constraint")
    return setting.constraint


def _moment_ratio_raw(q: float, n: int) -> float:
    a_int, b_int = centered_cost_integrals(q, n)
    return a_int / b_int**2


def moment_ratio(q: float, n: int) -> float:
    """Ratio of the tail kernel's second moment to its squared first moment.

    phi(q) = int_q^1 (z(y)-z(q))^2 dy / (int_q^1 (z(y)-z(q)) dy)^2 with z the
    marginal-cost kernel; strictly greater than 1 for q < 1 and strictly
    increasing on [1 - 1/(n-1)^2, 1).
    """
    if q >= _Q_CEILING:
        raise DomainError(f"moment ratio diverges as q -> 1; got q = {q}")
    return _moment_ratio_raw(q, n)


def moment_ratio_scaled(q: float, n: int) -> float:
    """Mass-scaled ratio phi(q) (1 - q); bounded, still > 1 below 1."""
    return moment_ratio(q, n) * (1.0 - q)


def moment_ratio_deriv(q: float, n: int) -> float:
    """d phi / d q = 2 z'(q) (A (1-q) - B^2) / B^3, positive on the domain."""
    if q >= _Q_CEILING:
        raise DomainError(f"moment ratio diverges as q -> 1; got q = {q}")
    a_int, b_int = centered_cost_integrals(q, n)
    zp = marginal_cost_deriv(q, n)
    return 2.0 * zp * (a_int * (1.0 - q) - b_int**2) / b_int**3


def worst_case_floor(setting: AuctionSetting) -> float:
    """Lowest support point of the worst-case distribution (before the c clamp)."""
    bound = _require_variance(setting)
    level = min_avg_cost_level(setting.n)
    spread = bound.sigma / math.sqrt(_moment_ratio_raw(level, setting.n) - 1.0)
    return max(bound.mean - spread, 0.0)


def _check_rho(rho: float, setting: AuctionSetting) -> None:
    floor = worst_case_floor(setting)
    ceiling = _rho_ceiling(setting)
    if not (floor - 1e-12 <= rho <= ceiling):
        raise DomainError(f"rho_out_of_range: need {floor} <= rho <= {ceiling}, got {rho}")


def solve_atom_mass(rho: float, setting: AuctionSetting) -> float:
    """Atom mass q(rho): the unique root of phi(q) = 1 + sigma^2/(m-rho)^2."""
    bound = _require_variance(setting)
    _check_rho(rho, setting)
    n = setting.n
    target = 1.0 + bound.variance / (bound.mean - rho) ** 2
    lo = min_avg_cost_level(n)
    if _moment_ratio_raw(lo, n) >= target:
        return lo
    hi = 1.0 - 1e-12
    while _moment_ratio_raw(hi, n) < target:
        gap = 1.0 - hi
        if gap < 1e-250:
            raise SolverError("could not bracket the atom-mass equation near q = 1")
        hi = 1.0 - gap / 16.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _moment_ratio_raw(mid, n) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    return 0.5 * (lo + hi)


def solve_tail(rho: float, setting: AuctionSetting) -> TailParams:
    """Multipliers and atom mass of the family member with atom at ``rho``.

    The first moment equation fixes lambda2, the quantile anchor fixes
    lambda1, and the second moment equation then holds automatically; its
    residual is still checked (1e-8 relative) as an internal invariant.
    """
    bound = _require_variance(setting)
    n, m = setting.n, bound.mean
    q = solve_atom_mass(rho, setting)
    s = n * (n - 1)
    a_int, b_int = centered_cost_integrals(q, n)
    two_lambda2 = s * b_int / (m - rho)
    lambda1 = s * marginal_cost(q, n) - two_lambda2 * rho
    second_lhs = s * s * a_int
    second_rhs = two_lambda2**2 * ((m - rho) ** 2 + bound.variance)
    if abs(second_lhs - second_rhs) > 1e-8 * max(abs(second_lhs), abs(second_rhs)):
        raise QuadratureError(
            "second-moment equation failed after solving the tail system",
            residual=second_lhs - second_rhs,
        )
    return TailParams(
        rho=rho,
        q=q,
        lambda1=lambda1,
        lambda2=two_lambda2 / 2.0,
        n=n,
        m=m,
        sigma=bound.sigma,
    )


def build_distribution(params: TailParams) -> Union[AtomUniformTail, AtomQuantileTail]:
    """Materialize a family member; for n = 2 the tail is exactly uniform."""
    if params.n == 2:
        return AtomUniformTail(
            atom_point=params.rho,
            atom_mass=params.q,
            tail_low=params.rho,
            tail_high=params.support_top,
        )
    return AtomQuantileTail(params)


def atom_mass_deriv(reserve: float, setting: AuctionSetting) -> float:
    """q'(r) from the implicit moment-ratio equation (implicit function theorem)."""
    bound = _require_variance(setting)
    q = solve_atom_mass(reserve, setting)
    lhs = 2.0 * bound.variance / (bound.mean - reserve) ** 3
    return lhs / moment_ratio_deriv(q, setting.n)


def closed_form_revenue(
    reserve: float,
    setting: AuctionSetting,
    tie: TieRule = TieRule.NO_SALE_AT_RESERVE,
) -> float:
    """Revenue of the family member whose atom sits exactly at the reserve.

    Without a sale at the reserve this is

        |lambda1|(m - q r) - 2 lambda2 (m^2 + sigma^2 - q r^2) - n z(q) r q + c q^n;

    the sale-at-reserve evaluation adds (r - c) q^n, the value of trading the
    all-tied event at price r instead of keeping c.
    """
    bound = _require_variance(setting)
    params = solve_tail(reserve, setting)
    n, c = setting.n, setting.cost
    q = params.q
    value = (
        -params.lambda1 * (bound.mean - q * reserve)
        - 2.0 * params.lambda2 * (bound.mean**2 + bound.variance - q * reserve**2)
        - n * marginal_cost(q, n) * reserve * q
        + c * q**n
    )
    if tie is TieRule.SALE_AT_RESERVE:
        value += (reserve - c) * q**n
    return float(value)


def closed_form_revenue_deriv(reserve: float, setting: AuctionSetting) -> float:
    """d/dr of the no-sale closed-form revenue along the family.

    Equals n(n-2) q z(q) - n q^(n-1) q'(r) (r - c): nonpositive at and above
    the seller's valuation, and exactly zero there only for two bidders.
    """
    n, c = setting.n, setting.cost
    q = solve_atom_mass(reserve, setting)
    qp = atom_mass_deriv(reserve, setting)
    return n * (n - 2) * q * marginal_cost(q, n) - n * q ** (n - 1) * qp * (reserve - c)


def worst_case(setting: AuctionSetting) -> Union[AtomUniformTail, AtomQuantileTail]:
    """Revenue-minimizing distribution at reserve r = c."""
    rho = max(worst_case_floor(setting), setting.cost)
    return build_distribution(solve_tail(rho, setting))


def threat(reserve: float, setting: AuctionSetting) -> tuple[Distribution, TieRule]:
    """Threat distribution for an arbitrary reserve (not claimed worst case).

    Just below the mean the atom location is clamped at the construction
    ceiling: the clamped member puts essentially all mass below the reserve,
    so its revenue is already within a whisker of the no-trade value c and
    dominance is preserved.
    """
    bound = _require_variance(setting)
    m, c = bound.mean, setting.cost
    floor = worst_case_floor(setting)
    if reserve >= m:
        return PointMass(m), TieRule.NO_SALE_AT_RESERVE
    rho = min(max(reserve, floor), _rho_ceiling(setting))
    if floor <= reserve < c:
        return build_distribution(solve_tail(rho, setting)), TieRule.SALE_AT_RESERVE
    return build_distribution(solve_tail(rho, setting)), TieRule.NO_SALE_AT_RESERVE


def variance_gap_coeff(n: int) -> float:
    """Coefficient of sigma in the low-variance maxmin revenue gap."""
    level = min_avg_cost_level(n)
    scaled = _moment_ratio_raw(level, n) * (1.0 - level)
    return bounded_gap_coeff(n) * math.sqrt((n - 1) ** 2 * scaled - 1.0)


@dataclass(frozen=True)
class VarianceSolution:
    support_floor: float
    worst_case: Union[AtomUniformTail, AtomQuantileTail]
    maxmin_revenue: float
    gap_coeff: Optional[float]
    price_set: tuple[float, float]
    unique: bool
    may_extend_above_cost: bool

    def payload(self) -> dict:
        return {
            "setting": "variance",
            "support_floor": self.support_floor,
            "worst_case": self.worst_case.payload(),
            "maxmin_revenue": self.maxmin_revenue,
            "gap_coeff": self.gap_coeff,
            "price_set": list(self.price_set),
            "unique": self.unique,
            "may_extend_above_cost": self.may_extend_above_cost,
        }


def solve(setting: AuctionSetting) -> VarianceSolution:
    """Maxmin reserve prices and revenue for the variance-bound setting.

    In the low-variance regime (c at or below the support floor) the worst
    case never puts mass below the reserve, every price in [0, c] is maxmin,
    and when the floor is unclamped the revenue collapses to
    mean - gap_coeff * sigma, which is verified against the direct closed
    form to 1e-9.
    """
    bound = _require_variance(setting)
    n, c, m = setting.n, setting.cost, bound.mean
    floor = worst_case_floor(setting)
    unique = floor < c
    distribution = build_distribution(solve_tail(max(floor, c), setting))
    if c <= floor:
        revenue = closed_form_revenue(floor, setting, TieRule.SALE_AT_RESERVE)
    else:
        revenue = closed_form_revenue(c, setting, TieRule.NO_SALE_AT_RESERVE)

    gap: Optional[float] = None
    level = min_avg_cost_level(n)
    unclamped = m - bound.sigma / math.sqrt(_moment_ratio_raw(level, n) - 1.0) >= 0.0
    if unclamped and c <= floor:
        gap = variance_gap_coeff(n)
        shortcut = m - gap * bound.sigma
        if abs(shortcut - revenue) > 1e-9 * max(1.0, abs(revenue)):
            raise QuadratureError(
                "closed-form revenue and gap-coefficient shortcut disagree",
                residual=shortcut - revenue,
            )
    return VarianceSolution(
        support_floor=floor,
        worst_case=distribution,
        maxmin_revenue=revenue,
        gap_coeff=gap,
        price_set=(c, c) if unique else (0.0, c),
        unique=unique,
        may_extend_above_cost=not unique,
    )
