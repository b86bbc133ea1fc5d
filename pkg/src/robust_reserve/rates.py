"""Large-market behavior of the maxmin revenue guarantees.

As the bidder count grows, the guarantee converges to the known mean in every
setting; what separates the settings is the rate.  With a support bound the
gap is ``coeff_n * (vmax - mean)`` with ``n^2 coeff_n -> 1/2``; with a
variance bound it is ``coeff_n * sigma`` decaying like 1/n, the same rate as
the known-marginals-with-arbitrary-correlation benchmark ``(vmax - mean)/(n-1)``.
The revenue of any ex-post individually-rational mechanism is capped by the
expected social surplus, which a degenerate point mass at the mean pins to
the mean itself, so these rates are also rates of asymptotic optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounded import bounded_gap_coeff
from .variance import variance_gap_coeff

__all__ = [
    "RateRow",
    "bounded_gap_coeff",
    "variance_gap_coeff",
    "correlated_gap",
    "rate_table",
    "loglog_slope",
]

RATE_TABLE_HEADER = "n,gap_bounded,gap_variance,gap_correlated,n_sq_alpha"


def correlated_gap(m: float, vmax: float, n: int) -> float:
    """Revenue gap when only marginals are known and correlation is arbitrary."""
    return (vmax - m) / (n - 1)


@dataclass(frozen=True)
class RateRow:
    n: int
    gap_bounded: float
    gap_variance: float
    gap_correlated: float
    n_sq_alpha: float

    def csv(self) -> str:
        return (
            f"{self.n},{self.gap_bounded!r},{self.gap_variance!r},"
            f"{self.gap_correlated!r},{self.n_sq_alpha!r}"
        )


def rate_table(m: float, vmax: float, sigma: float, n_max: int) -> list[RateRow]:
    """Gap columns for n = 2..n_max plus the scaled bounded coefficient."""
    if n_max < 3:
        raise ValueError("need n_max >= 3")
    rows = []
    for n in range(2, n_max + 1):
        alpha = bounded_gap_coeff(n)
        rows.append(
            RateRow(
                n=n,
                gap_bounded=alpha * (vmax - m),
                gap_variance=variance_gap_coeff(n) * sigma,
                gap_correlated=correlated_gap(m, vmax, n),
                n_sq_alpha=n * n * alpha,
            )
        )
    return rows


def loglog_slope(ns, values) -> float:
    """Least-squares slope of log(value) against log(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))
