"""Acceptance suite: the package's exit criteria at their stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  Every tolerance is written out literally; none are calibrated at
runtime.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import random_discrete_with_mean, mass_shift_to_cost
from robust_reserve import (
    AuctionSetting,
    Bounded,
    TieRule,
    VarianceBound,
    expected_revenue,
    moments,
    monte_carlo_revenue,
)
from robust_reserve import bounded, variance
from robust_reserve.bounded import min_avg_cost_level
from robust_reserve.oracle import OracleConfig, minimize_revenue, verify_maxmin
from robust_reserve.rates import bounded_gap_coeff, loglog_slope, rate_table

NO_SALE = TieRule.NO_SALE_AT_RESERVE
SALE = TieRule.SALE_AT_RESERVE


def report(index, message):
    print(f"ACCEPTANCE {index}: PASS - {message}")


def test_criterion_1_example_reproduction():
    start = time.perf_counter()
    setting = AuctionSetting(3, 0.0, Bounded(0.5, 1.0))
    solution = bounded.solve(setting)
    wc = solution.worst_case
    assert abs(wc.low - 1.0 / 3.0) <= 1e-12
    assert abs(wc.high - 1.0) <= 1e-12
    assert abs(wc.p_low - 0.75) <= 1e-12
    assert abs(solution.maxmin_revenue - 7.0 / 16.0) <= 1e-10
    estimate, stderr = monte_carlo_revenue(wc, 0.0, setting, SALE, samples=1_000_000, seed=17)
    assert abs(estimate - 7.0 / 16.0) <= 4.0 * stderr
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(1, f"worst case Binary(1/3, 1, 3/4), revenue 7/16, MC within 4 stderr ({elapsed:.2f}s)")


def test_criterion_2_gap_coefficient_table():
    start = time.perf_counter()
    surds = {
        2: math.sqrt(3.0) / 3.0,
        3: math.sqrt(470.0) / 80.0,
        4: math.sqrt(21604695.0) / 25515.0,
        5: math.sqrt(8995616791.0) / 688128.0,
    }
    decimals = {3: 0.271, 4: 0.182, 5: 0.138}
    for n, value in surds.items():
        assert abs(variance.variance_gap_coeff(n) - value) <= 1e-12
    for n, value in decimals.items():
        assert abs(variance.variance_gap_coeff(n) - value) <= 5e-4
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(2, f"gap coefficients match surds to 1e-12 and 3-decimal values to 5e-4 ({elapsed:.2f}s)")


def test_criterion_3_two_bidder_variance_anchor():
    setting = AuctionSetting(2, 0.0, VarianceBound(1.0, 1.0))
    solution = variance.solve(setting)
    assert abs(solution.maxmin_revenue - 4.0 / 9.0) <= 1e-10
    direct = expected_revenue(solution.worst_case, 0.0, setting, SALE)
    assert abs(direct - 4.0 / 9.0) <= 1e-8
    estimate, stderr = monte_carlo_revenue(
        solution.worst_case, 0.0, setting, SALE, samples=1_000_000, seed=23
    )
    assert abs(estimate - 4.0 / 9.0) <= 4.0 * stderr
    report(3, "maxmin revenue 4/9 by closed form, quadrature, and Monte Carlo")


def test_criterion_4_threat_gap_at_half():
    setting = AuctionSetting(2, 0.0, VarianceBound(1.0, 1.0))
    dist, tie = variance.threat(0.5, setting)
    threat_value = expected_revenue(dist, 0.5, setting, tie)
    assert abs(threat_value - 0.32) <= 1e-10
    start = time.perf_counter()
    result = minimize_revenue(0.5, setting, NO_SALE, OracleConfig(seed=0))
    elapsed = time.perf_counter() - start
    assert result.best_revenue <= 0.2775
    assert result.constraint_residuals[0] <= 1e-6
    assert result.constraint_residuals[1] <= 1e-6
    assert elapsed < 60.0
    report(4, f"threat 0.32, oracle finds {result.best_revenue:.4f} <= 0.2775 ({elapsed:.1f}s)")


def test_criterion_5_saddle_verification():
    start = time.perf_counter()
    config = OracleConfig(tolerance=1e-6, seed=0)
    cases = [
        ("bounded c=0.4", AuctionSetting(3, 0.4, Bounded(0.5, 1.0)), True),
        ("bounded c=0.2", AuctionSetting(3, 0.2, Bounded(0.5, 1.0)), False),
        ("variance c=0", AuctionSetting(2, 0.0, VarianceBound(1.0, 1.0)), False),
    ]
    for label, setting, expect_unique in cases:
        rep = verify_maxmin(setting, r_grid_size=25, config=config)
        maxmin = rep.maxmin_revenue
        assert all(env <= maxmin + 1e-6 for _, env, _, _ in rep.rows), label
        env_at_cost = next(env for r, env, _, _ in rep.rows if r == setting.cost)
        assert abs(env_at_cost - maxmin) <= 1e-4, label
        assert rep.price_set_covered, label
        assert rep.unique == expect_unique, label
        if expect_unique:
            assert rep.empirical_unique, label
        else:
            lo, hi = rep.price_set
            covered = [r for r in rep.empirical_argmax if lo - 1e-9 <= r <= hi + 1e-9]
            grid_in_set = [r for r, _, _, _ in rep.rows if lo - 1e-9 <= r <= hi + 1e-9]
            assert len(covered) == len(grid_in_set), label
        assert not rep.violations, label
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0
    report(5, f"three saddle checks pass; uniqueness flags match ({elapsed:.1f}s)")


def test_criterion_6_rate_checks():
    assert 0.49 <= 1000**2 * bounded_gap_coeff(1000) <= 0.51
    rows = [row for row in rate_table(0.5, 1.0, 1.0, 1000) if row.n >= 100]
    ns = [row.n for row in rows]
    slope_bounded = loglog_slope(ns, [row.gap_bounded for row in rows])
    slope_variance = loglog_slope(ns, [row.gap_variance for row in rows])
    assert abs(slope_bounded - (-2.0)) <= 0.1
    assert abs(slope_variance - (-1.0)) <= 0.1
    report(
        6,
        f"n^2 alpha(1000) in [0.49, 0.51]; slopes {slope_bounded:.3f} / {slope_variance:.3f}",
    )


def test_criterion_7_property_suites():
    rng = np.random.default_rng(7)

    # Moment feasibility of every constructed distribution, 1e-8.
    checked = 0
    for _ in range(25):
        n = int(rng.integers(2, 7))
        mean = float(rng.uniform(0.5, 2.0))
        vmax = mean * float(rng.uniform(1.3, 3.0))
        cost = float(rng.uniform(0.0, 0.8) * mean)
        bset = AuctionSetting(n, cost, Bounded(mean, vmax))
        for dist in [bounded.worst_case(bset), bounded.threat(float(rng.uniform(0, mean)), bset)[0]]:
            got, _ = moments(dist)
            assert abs(got - mean) <= 1e-8
            assert dist.support_top() <= vmax + 1e-12
        sigma = float(rng.uniform(0.2, 1.0) * mean)
        vset = AuctionSetting(n, cost, VarianceBound(mean, sigma**2))
        for dist in [variance.worst_case(vset), variance.threat(float(rng.uniform(0, mean * 0.99)), vset)[0]]:
            got_mean, got_var = moments(dist)
            assert abs(got_mean - mean) <= 1e-8
            assert got_var <= sigma**2 + 1e-8
            checked += 1

    # Closed-form revenue versus the generic quadrature path, 1e-8, 100 configs.
    for _ in range(100):
        n = int(rng.integers(2, 7))
        mean = float(rng.uniform(0.5, 2.0))
        sigma = float(rng.uniform(0.2, 1.0) * mean)
        cost = float(rng.uniform(0.0, 0.5) * mean)
        vset = AuctionSetting(n, cost, VarianceBound(mean, sigma**2))
        floor = variance.worst_case_floor(vset)
        r = floor + float(rng.uniform(0.0, 1.0)) * (mean * 0.97 - floor)
        tie = SALE if rng.integers(2) else NO_SALE
        dist = variance.build_distribution(variance.solve_tail(r, vset))
        assert abs(variance.closed_form_revenue(r, vset, tie) - expected_revenue(dist, r, vset, tie)) <= 1e-8

    # Revenue derivative versus central finite differences, 1e-4 relative, 50 points.
    checked_fd = 0
    for vset in [
        AuctionSetting(2, 0.0, VarianceBound(1.0, 1.0)),
        AuctionSetting(3, 0.1, VarianceBound(1.0, 0.25)),
        AuctionSetting(4, 0.2, VarianceBound(1.0, 0.49)),
        AuctionSetting(5, 0.0, VarianceBound(1.0, 0.64)),
        AuctionSetting(6, 0.3, VarianceBound(1.0, 0.81)),
    ]:
        floor = variance.worst_case_floor(vset)
        step = 1e-5
        for r in np.linspace(max(floor, 1e-3) + 2 * step, vset.mean * 0.95, 10):
            r = float(r)
            numeric = (
                variance.closed_form_revenue(r + step, vset, NO_SALE)
                - variance.closed_form_revenue(r - step, vset, NO_SALE)
            ) / (2 * step)
            analytic = variance.closed_form_revenue_deriv(r, vset)
            assert abs(analytic - numeric) <= 1e-4 * max(abs(numeric), 1e-6)
            checked_fd += 1
    assert checked_fd == 50

    # Strict monotonicity of the moment ratio on [critical level, 1 - 1e-6].
    for n in range(2, 7):
        lo = min_avg_cost_level(n)
        grid = np.unique(np.concatenate([np.linspace(lo, 1 - 1e-3, 80), 1 - np.geomspace(1e-3, 1e-6, 40)]))
        values = [variance.moment_ratio(float(q), n) for q in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    # Mass shift weakly lowers revenue and preserves feasibility, 20 cases each.
    cost = 0.2
    bset = AuctionSetting(3, cost, Bounded(0.5, 1.0))
    for _ in range(20):
        original = random_discrete_with_mean(rng, mean=0.5, vmax=1.0)
        shifted = mass_shift_to_cost(original, cost)
        assert abs(shifted.moments()[0] - original.moments()[0]) <= 1e-12
        assert expected_revenue(shifted, cost, bset) <= expected_revenue(original, cost, bset) + 1e-12
    for _ in range(20):
        original = random_discrete_with_mean(rng, mean=1.0, vmax=3.0)
        var0 = original.moments()[1]
        vset = AuctionSetting(3, cost, VarianceBound(1.0, var0 * 1.05))
        shifted = mass_shift_to_cost(original, cost)
        assert shifted.moments()[1] <= var0 + 1e-12
        assert expected_revenue(shifted, cost, vset) <= expected_revenue(original, cost, vset) + 1e-12

    report(7, "moment feasibility, closed-vs-quadrature, derivative, monotonicity, mass shift")


def test_criterion_8_byte_identical_cli_output(tmp_path):
    dist_file = tmp_path / "wc.json"
    env = dict(os.environ)
    cmd = [
        sys.executable, "-m", "robust_reserve.cli", "maxmin",
        "--setting", "variance", "--mean", "1", "--sigma", "1",
        "--cost", "0", "--bidders", "2",
    ]
    first = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    assert first == second
    dist_file.write_text(json.dumps(json.loads(first)["worst_case"]))

    sim = [
        sys.executable, "-m", "robust_reserve.cli", "simulate",
        "--setting", "variance", "--mean", "1", "--sigma", "1",
        "--cost", "0", "--bidders", "2",
        "--dist", str(dist_file), "--reserve", "0", "--samples", "200000", "--seed", "5",
    ]
    outputs = []
    for threads in ("1", "4"):
        env["ROBUST_RESERVE_THREADS"] = threads
        outputs.append(subprocess.run(sim, capture_output=True, env=env, check=True).stdout)
    assert outputs[0] == outputs[1]
    report(8, "byte-identical CLI output across reruns and thread counts")
