"""Distributionally robust reserve prices for second-price auctions.

A seller facing n iid bidders knows only the mean of the value distribution
plus either an upper bound on values or an upper bound on the variance, and
prices against the worst case.  This package computes the maxmin reserve
price set, the worst-case and threat distributions, the maxmin revenue and
its large-n behavior, and ships an independent numerical adversary that
re-derives every closed form by direct search.
"""

from .auction import (
    AuctionSetting,
    Bounded,
    RevenueReport,
    TieRule,
    VarianceBound,
    expected_max,
    expected_revenue,
    expected_second_highest,
    monte_carlo_revenue,
    simulate_report,
)
from .distributions import (
    AtomQuantileTail,
    AtomUniformTail,
    Binary,
    DiscreteCdf,
    Distribution,
    PointMass,
    TailParams,
    cdf_eval,
    from_json,
    from_payload,
    moments,
    sample,
    to_json,
)
from .errors import (
    DomainError,
    InvalidDistributionError,
    InvalidSettingError,
    PricingError,
    QuadratureError,
    SolverError,
)
from . import bounded, oracle, rates, variance

__version__ = "0.1.0"


def _solver(setting: AuctionSetting):
    return bounded if isinstance(setting.constraint, Bounded) else variance


def maxmin(setting: AuctionSetting):
    """Maxmin solution for either setting (dispatches on the constraint)."""
    return _solver(setting).solve(setting)


def worst_case(setting: AuctionSetting):
    """Worst-case distribution at r = c for either setting."""
    return _solver(setting).worst_case(setting)


def threat(reserve: float, setting: AuctionSetting):
    """Threat distribution and tie rule at an arbitrary reserve."""
    return _solver(setting).threat(reserve, setting)
