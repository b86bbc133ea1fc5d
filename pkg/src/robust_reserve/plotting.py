"""Figure rendering for the CLI report paths.

Only the CLI imports this module, and only when ``--plot`` is given; the
library itself never touches matplotlib.  Figures carry no timestamps, so a
rerun with identical inputs produces an identical file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def save_threat_curve(path, rows, maxmin_revenue, cost, mean):
    """Plot threat revenue against the reserve with the maxmin level line."""
    r = [row[0] for row in rows]
    values = [row[1] for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(r, values, lw=1.5, label="threat revenue")
    ax.axhline(maxmin_revenue, color="tab:red", ls="--", lw=1.0, label="maxmin revenue")
    ax.axvline(cost, color="gray", ls=":", lw=1.0)
    ax.axvline(mean, color="gray", ls=":", lw=1.0)
    ax.set_xlabel("reserve price r")
    ax.set_ylabel("expected revenue")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_envelope(path, report, cost):
    """Plot the oracle's lower envelope and the threat bound from a verify run."""
    r = [row[0] for row in report.rows]
    env = [row[1] for row in report.rows]
    bound = [row[2] for row in report.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(r, env, lw=1.5, marker="o", ms=3, label="oracle lower envelope")
    ax.plot(r, bound, lw=1.0, ls="--", label="threat bound")
    ax.axhline(report.maxmin_revenue, color="tab:red", ls="--", lw=1.0, label="maxmin revenue")
    ax.axvline(cost, color="gray", ls=":", lw=1.0)
    ax.set_xlabel("reserve price r")
    ax.set_ylabel("expected revenue")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_rate_plot(path, rows):
    """Log-log revenue-gap decay for the three information settings."""
    n = [row.n for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(n, [row.gap_bounded for row in rows], lw=1.5, label="bounded values")
    ax.loglog(n, [row.gap_variance for row in rows], lw=1.5, label="variance bound")
    ax.loglog(n, [row.gap_correlated for row in rows], lw=1.5, label="correlated benchmark")
    ax.set_xlabel("bidders n")
    ax.set_ylabel("revenue gap to the mean")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
