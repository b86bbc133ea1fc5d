"""Polynomial kernels shared by the pricing modules.

Everything here is driven by the cdf-level kernel ``y**(n-1) - y**(n-2)``,
which is (up to the factor n(n-1)) the derivative of the second-highest-value
survival integrand with respect to the cdf level.  In the Lagrangian reading
of the adversary's problem it plays the role of a marginal cost curve, hence
the naming.

Numerical notes
---------------
Integrals of the centered kernel over ``[q, 1]`` are evaluated through a
Taylor shift of the polynomial to the left endpoint.  On ``q >= 1-1/(n-1)^2``
every series term is nonnegative, so the evaluation has no cancellation and
stays at machine precision all the way to ``q -> 1`` (the naive monomial
antiderivatives lose ~``eps/(1-q)^2`` there).  Quantile-space integrals use
Gauss-Legendre rules of exact polynomial order, which are exact for the
polynomial integrands that arise, not approximations.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Beyond this degree the shifted-series terms are negligible long before the
# polynomial runs out, so the series is truncated adaptively.
_TRUNCATION_REL = 1e-26
_TRUNCATION_RUN = 4


def marginal_cost(y, n: int):
    """Kernel ``y**(n-1) - y**(n-2)``, evaluated stably as ``y**(n-2)*(y-1)``.

    Nonpositive on [0, 1], zero at 1.  Accepts scalars or arrays.
    """
    y = np.asarray(y, dtype=float)
    out = y ** (n - 2) * (y - 1.0)
    return float(out) if out.ndim == 0 else out


def marginal_cost_deriv(y, n: int):
    """Derivative ``(n-1)y**(n-2) - (n-2)y**(n-3)`` of the kernel."""
    y = np.asarray(y, dtype=float)
    if n == 2:
        out = np.ones_like(y)
    else:
        out = y ** (n - 3) * ((n - 1) * y - (n - 2))
    return float(out) if out.ndim == 0 else out


def second_highest_survival(u, n: int):
    """P(second-highest of n iid draws > v) when the parent cdf at v is u."""
    u = np.asarray(u, dtype=float)
    out = 1.0 - n * u ** (n - 1) + (n - 1) * u**n
    return float(out) if out.ndim == 0 else out


def second_highest_survival_antideriv(u, n: int):
    u = np.asarray(u, dtype=float)
    out = u - u**n + (n - 1) * u ** (n + 1) / (n + 1)
    return float(out) if out.ndim == 0 else out


def top_survival(u, n: int):
    """P(highest of n iid draws > v) when the parent cdf at v is u."""
    u = np.asarray(u, dtype=float)
    out = 1.0 - u**n
    return float(out) if out.ndim == 0 else out


def top_survival_antideriv(u, n: int):
    u = np.asarray(u, dtype=float)
    out = u - u ** (n + 1) / (n + 1)
    return float(out) if out.ndim == 0 else out


def centered_cost_integrals(q: float, n: int) -> tuple[float, float]:
    """Exact ``(A, B)`` with A = int_q^1 (z(y)-z(q))^2 dy, B = int_q^1 (z(y)-z(q)) dy.

    z is the marginal-cost kernel.  Uses the Taylor expansion of
    z(q+t) - z(q) = sum_k d_k t^k with d_k = b_{k-1} - (1-q) b_k and
    b_k = C(n-2, k) q^(n-2-k); then

        B = sum_k d_k delta^(k+1)/(k+1),
        A = sum_{j,k} d_j d_k delta^(j+k+1)/(j+k+1),  delta = 1-q.

    The series is computed with delta folded in (e_k = d_k delta^k), so no
    intermediate overflows for large n, and truncated once terms vanish.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"level q must lie in [0, 1), got {q}")
    delta = 1.0 - q
    if q == 0.0:
        # z(t) - z(0): plain monomials, no shift needed.
        if n == 2:
            return 1.0 / 3.0, 0.5
        a = 1.0 / (2 * n - 1) - 1.0 / (n - 1) + 1.0 / (2 * n - 3)
        b = 1.0 / n - 1.0 / (n - 1)
        return a, b

    # c_k = C(n-2, k) q^(n-2-k) delta^k, built bottom-up so terms can be
    # dropped as soon as they stop mattering.
    c_prev = q ** (n - 2)  # c_0
    e: list[float] = []
    scale = abs(c_prev)
    run = 0
    for k in range(1, n):
        c_k = 0.0
        if k <= n - 2:
            c_k = c_prev * delta * (n - 1 - k) / (k * q)
        e_k = delta * (c_prev - c_k)  # = d_k delta^k
        e.append(e_k)
        c_prev = c_k
        scale = max(scale, abs(e_k), abs(c_k))
        if abs(e_k) < _TRUNCATION_REL * scale and abs(c_k) < _TRUNCATION_REL * scale:
            run += 1
            if run >= _TRUNCATION_RUN:
                break
        else:
            run = 0

    ek = np.array(e)
    k = np.arange(1, ek.size + 1, dtype=float)
    b_val = delta * float(np.sum(ek / (k + 1.0)))
    a_val = delta * float(np.sum(np.outer(ek, ek) / (k[:, None] + k[None, :] + 1.0)))
    return a_val, b_val


@lru_cache(maxsize=128)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1], exact to degree 2*order-1."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return (nodes + 1.0) / 2.0, weights / 2.0


def gauss_integrate(func, lo: float, hi: float, order: int) -> float:
    """Integrate ``func`` over [lo, hi] with a Gauss rule of given order."""
    if hi <= lo:
        return 0.0
    nodes, weights = gauss_rule(order)
    x = lo + (hi - lo) * nodes
    return float((hi - lo) * np.dot(weights, func(x)))
