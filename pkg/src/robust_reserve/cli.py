"""Command-line front end: every computation as a subcommand with JSON/CSV output.

Subcommands
-----------
maxmin        maxmin price set, worst case, and revenue for a setting
worst-case    the revenue-minimizing distribution at r = c, as JSON
threat-curve  CSV of (r, threat_revenue, maxmin_revenue) over a reserve grid
verify        numerical saddle check by the independent adversary
asymptotics   CSV of revenue-gap columns over the bidder count
simulate      Monte Carlo cross-check of a distribution/reserve pair

Exit codes: 0 success, 2 invalid flags or parameters, 3 verification found a
violated bound.  Output is byte-reproducible for fixed flags and seed; the
ROBUST_RESERVE_THREADS environment variable caps worker fan-out without
affecting results.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bounded as bounded_mod
from . import variance as variance_mod
from .auction import AuctionSetting, Bounded, TieRule, VarianceBound, expected_revenue, simulate_report
from .distributions import AtomQuantileTail, from_payload
from .errors import PricingError
from .oracle import OracleConfig, verify_maxmin
from .rates import RATE_TABLE_HEADER, rate_table

THREAT_CSV_HEADER = "r,threat_revenue,maxmin_revenue"


def _add_setting_flags(parser: argparse.ArgumentParser, need_setting: bool = True) -> None:
    if need_setting:
        parser.add_argument("--setting", choices=["bounded", "variance"], required=True)
    parser.add_argument("--mean", type=float, required=True, help="known mean of the value distribution")
    parser.add_argument("--vmax", type=float, help="upper bound on values (bounded setting)")
    parser.add_argument("--sigma", type=float, help="standard-deviation bound (variance setting)")
    parser.add_argument("--cost", type=float, default=0.0, help="seller's own valuation c")
    parser.add_argument("--bidders", type=int, required=True, help="number of bidders n")


def _add_io_flags(parser: argparse.ArgumentParser, default_format: str) -> None:
    parser.add_argument("--format", choices=["json", "csv"], default=default_format)
    parser.add_argument("--out", type=Path, help="write output here instead of stdout")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-reserve",
        description="Distributionally robust reserve prices for second-price auctions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("maxmin", help="maxmin price set, worst case, and revenue")
    _add_setting_flags(p)
    _add_io_flags(p, "json")

    p = sub.add_parser("worst-case", help="revenue-minimizing distribution at r = c")
    _add_setting_flags(p)
    _add_io_flags(p, "json")

    p = sub.add_parser("threat-curve", help="threat revenue across reserves, as CSV")
    _add_setting_flags(p)
    _add_io_flags(p, "csv")
    p.add_argument("--grid", type=int, default=200, help="number of reserve grid points")
    p.add_argument("--rmax", type=float, help="top of the reserve grid (default 1.6 * mean)")
    p.add_argument("--plot", type=Path, help="also render the curve to this image file")

    p = sub.add_parser("verify", help="independent numerical saddle check")
    _add_setting_flags(p)
    _add_io_flags(p, "json")
    p.add_argument("--grid", type=int, default=25, help="reserve grid size (>= 20)")
    p.add_argument("--oracle-grid", type=int, default=400, help="value grid size of the adversary")
    p.add_argument("--iterations", type=int, default=240, help="descent iterations per start")
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.add_argument("--plot", type=Path, help="also render the envelope to this image file")

    p = sub.add_parser("asymptotics", help="revenue-gap decay table")
    parser_group = p  # same flag names, no --setting
    _add_setting_flags(parser_group, need_setting=False)
    _add_io_flags(p, "csv")
    p.add_argument("--nmax", type=int, default=1000)
    p.add_argument("--plot", type=Path, help="also render the log-log decay plot")

    p = sub.add_parser("simulate", help="Monte Carlo revenue report for a distribution")
    _add_setting_flags(p)
    _add_io_flags(p, "json")
    p.add_argument("--dist", required=True, help="distribution JSON file, or '-' for stdin")
    p.add_argument("--reserve", type=float, required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--tie", choices=["no-sale", "sale"], default="no-sale")
    return parser


def _build_setting(args) -> AuctionSetting:
    if getattr(args, "setting", None) == "bounded":
        if args.vmax is None:
            raise PricingError("bounded setting requires --vmax")
        constraint = Bounded(args.mean, args.vmax)
    else:
        if args.sigma is None:
            raise PricingError("variance setting requires --sigma")
        constraint = VarianceBound(args.mean, args.sigma**2)
    return AuctionSetting(args.bidders, args.cost, constraint)


def _solver(setting: AuctionSetting):
    return bounded_mod if isinstance(setting.constraint, Bounded) else variance_mod


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _flat_csv(payload: dict) -> str:
    keys = sorted(payload)
    cells = []
    for key in keys:
        value = payload[key]
        cells.append(json.dumps(value) if isinstance(value, (dict, list)) else repr(value))
    return ",".join(keys) + "\n" + ",".join(cells) + "\n"


def _structured(payload: dict, args) -> str:
    return _json_text(payload) if args.format == "json" else _flat_csv(payload)


def _cmd_maxmin(args) -> int:
    setting = _build_setting(args)
    solution = _solver(setting).solve(setting)
    _emit(_structured(solution.payload(), args), args.out)
    return 0


def _cmd_worst_case(args) -> int:
    setting = _build_setting(args)
    dist = _solver(setting).worst_case(setting)
    _emit(_structured(dist.payload(), args), args.out)
    return 0


def _cmd_threat_curve(args) -> int:
    setting = _build_setting(args)
    module = _solver(setting)
    solution = module.solve(setting)
    rmax = args.rmax if args.rmax is not None else 1.6 * setting.mean
    grid = np.unique(np.concatenate([np.linspace(0.0, rmax, args.grid), [setting.cost]]))
    rows = []
    for r in grid:
        dist, flag = module.threat(float(r), setting)
        rows.append((float(r), expected_revenue(dist, float(r), setting, flag), solution.maxmin_revenue))
    if args.format == "csv":
        lines = [THREAT_CSV_HEADER] + [f"{r!r},{t!r},{mm!r}" for r, t, mm in rows]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        payload = [{"r": r, "threat_revenue": t, "maxmin_revenue": mm} for r, t, mm in rows]
        _emit(_json_text(payload), args.out)
    if args.plot is not None:
        from . import plotting

        plotting.save_threat_curve(args.plot, rows, solution.maxmin_revenue, setting.cost, setting.mean)
    return 0


def _cmd_verify(args) -> int:
    setting = _build_setting(args)
    config = OracleConfig(
        value_grid_size=args.oracle_grid,
        max_iterations=args.iterations,
        tolerance=args.tolerance,
        seed=args.seed,
    )
    report = verify_maxmin(setting, r_grid_size=args.grid, config=config)
    if args.format == "csv":
        _emit("\n".join(report.csv_lines()) + "\n", args.out)
    else:
        _emit(_json_text(report.payload()), args.out)
    if args.plot is not None:
        from . import plotting

        plotting.save_envelope(args.plot, report, setting.cost)
    return 3 if report.violations else 0


def _cmd_asymptotics(args) -> int:
    if args.vmax is None or args.sigma is None:
        raise PricingError("asymptotics requires --vmax and --sigma")
    rows = rate_table(args.mean, args.vmax, args.sigma, args.nmax)
    if args.format == "csv":
        _emit("\n".join([RATE_TABLE_HEADER] + [row.csv() for row in rows]) + "\n", args.out)
    else:
        payload = [
            {
                "n": row.n,
                "gap_bounded": row.gap_bounded,
                "gap_variance": row.gap_variance,
                "gap_correlated": row.gap_correlated,
                "n_sq_alpha": row.n_sq_alpha,
            }
            for row in rows
        ]
        _emit(_json_text(payload), args.out)
    if args.plot is not None:
        from . import plotting

        plotting.save_rate_plot(args.plot, rows)
    return 0


def _cmd_simulate(args) -> int:
    setting = _build_setting(args)
    text = sys.stdin.read() if args.dist == "-" else Path(args.dist).read_text()
    dist = from_payload(json.loads(text))
    tie = TieRule.SALE_AT_RESERVE if args.tie == "sale" else TieRule.NO_SALE_AT_RESERVE
    analytic = None
    if isinstance(dist, AtomQuantileTail) and isinstance(setting.constraint, VarianceBound):
        p = dist.params
        matches = (
            p.n == setting.n
            and abs(p.m - setting.mean) <= 1e-12
            and abs(p.sigma**2 - setting.constraint.variance) <= 1e-9
            and abs(p.rho - args.reserve) <= 1e-12
        )
        if matches:
            analytic = variance_mod.closed_form_revenue(args.reserve, setting, tie)
    report = simulate_report(
        dist, args.reserve, setting, tie, samples=args.samples, seed=args.seed, analytic=analytic
    )
    _emit(_structured(report.payload(), args), args.out)
    return 0


_COMMANDS = {
    "maxmin": _cmd_maxmin,
    "worst-case": _cmd_worst_case,
    "threat-curve": _cmd_threat_curve,
    "verify": _cmd_verify,
    "asymptotics": _cmd_asymptotics,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 2 if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except PricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
