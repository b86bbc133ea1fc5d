"""Large-n revenue gap coefficients and their decay rates."""

import pytest

from robust_reserve import AuctionSetting, Bounded, PointMass, expected_max
from robust_reserve import bounded, variance
from robust_reserve.rates import (
    RATE_TABLE_HEADER,
    bounded_gap_coeff,
    correlated_gap,
    loglog_slope,
    rate_table,
    variance_gap_coeff,
)


class TestCoefficients:
    def test_two_bidders_unit_coefficient(self):
        # The 0^0 convention pins the formula at 1 for n = 2; the linear gap
        # law itself only holds once the worst case's floor is interior.
        assert bounded_gap_coeff(2) == 1.0
        solution = bounded.solve(AuctionSetting(2, 0.0, Bounded(0.5, 1.0)))
        assert solution.maxmin_revenue == pytest.approx(0.5**2 / 1.0, abs=1e-12)

    def test_three_bidders_consistent_with_worst_case(self):
        assert bounded_gap_coeff(3) == pytest.approx(1.0 / 8.0, abs=1e-15)
        solution = bounded.solve(AuctionSetting(3, 0.0, Bounded(0.5, 1.0)))
        assert solution.maxmin_revenue == pytest.approx(0.5 - (1.0 / 8.0) * 0.5, abs=1e-12)

    def test_scaled_limit(self):
        assert 1000**2 * bounded_gap_coeff(1000) == pytest.approx(0.5, abs=1e-2)

    def test_scaled_band_for_moderate_n(self):
        for n in (50, 100, 300, 700, 1000):
            assert 0.4 < n * n * bounded_gap_coeff(n) < 0.6

    def test_variance_coeff_single_code_path(self):
        for n in (2, 3, 7, 40):
            assert variance_gap_coeff(n) == variance.variance_gap_coeff(n)


class TestCorrelatedGap:
    def test_formula(self):
        assert correlated_gap(0.5, 1.0, 3) == pytest.approx(0.25, abs=1e-15)
        assert correlated_gap(0.5, 1.0, 2) == pytest.approx(0.5, abs=1e-15)

    def test_vanishes_monotonically(self):
        values = [correlated_gap(0.5, 1.0, n) for n in range(2, 60)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 0.01


class TestRateTable:
    def test_rows_cover_range_and_header(self):
        rows = rate_table(0.5, 1.0, 1.0, 12)
        assert [row.n for row in rows] == list(range(2, 13))
        assert RATE_TABLE_HEADER == "n,gap_bounded,gap_variance,gap_correlated,n_sq_alpha"
        assert rows[0].csv().startswith("2,")

    def test_gaps_strictly_decreasing(self):
        rows = rate_table(0.5, 1.0, 1.0, 40)
        for field in ("gap_bounded", "gap_variance", "gap_correlated"):
            values = [getattr(row, field) for row in rows if row.n >= 3]
            assert all(v > 0.0 for v in values)
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_loglog_slopes(self):
        rows = [row for row in rate_table(0.5, 1.0, 1.0, 1000) if row.n >= 100]
        ns = [row.n for row in rows]
        assert loglog_slope(ns, [row.gap_bounded for row in rows]) == pytest.approx(-2.0, abs=0.1)
        assert loglog_slope(ns, [row.gap_variance for row in rows]) == pytest.approx(-1.0, abs=0.1)
        assert loglog_slope(ns, [row.gap_correlated for row in rows]) == pytest.approx(-1.0, abs=0.1)

    def test_nmax_validation(self):
        with pytest.raises(ValueError):
            rate_table(0.5, 1.0, 1.0, 2)


class TestSurplusCap:
    def test_point_mass_at_mean_caps_surplus(self):
        # Any ex-post IR mechanism earns at most the social surplus, and the
        # degenerate distribution pins that at the mean for every n.
        for n in (2, 3, 5, 8):
            assert expected_max(PointMass(0.7), n) == pytest.approx(0.7, abs=1e-15)

    def test_guarantees_converge_to_mean(self):
        m, vmax, sigma = 0.5, 1.0, 0.25
        big = rate_table(m, vmax, sigma, 400)[-1]
        assert big.gap_bounded < 1e-5
        assert big.gap_variance < 1e-3
