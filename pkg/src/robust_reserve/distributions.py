"""Value-distribution representations used throughout the package.

Five variants cover everything the pricing theory needs:

* ``PointMass`` -- a degenerate distribution (the adversary's "no trade"
  endgame once the reserve exceeds the mean).
* ``Binary`` -- two-point distributions; worst cases and threats in the
  bounded-support setting are all of this form.
* ``AtomUniformTail`` -- an atom plus a uniform segment, possibly with a gap
  between them.  This is the two-bidder shape of the variance-constrained
  worst case, and the shape the numerical adversary uses for gap searches.
* ``AtomQuantileTail`` -- an atom at the bottom of support plus a continuous
  tail defined through a polynomial quantile map (the n >= 3 shape of the
  variance-constrained worst case).  The tail has no closed-form cdf, but its
  quantile function is an explicit polynomial, so every integral the package
  needs is taken in quantile space, exactly.
* ``DiscreteCdf`` -- a right-continuous step cdf on an arbitrary grid; the
  numerical adversary's search space.

All variants are immutable and safe to share across workers.  Each knows its
cdf (with left limits, so atoms are handled exactly), quantile function,
closed-form moments, and how to serialize itself to the JSON wire schema
``{"type": "point"|"binary"|"g_tail"|"atom_uniform"|"discrete", ...}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernel import centered_cost_integrals, marginal_cost
from ._rng import uniform_stream
from .errors import InvalidDistributionError

_ATOL = 1e-12


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidDistributionError(message)


@dataclass(frozen=True)
class TailParams:
    """Parameters of the atom-plus-polynomial-tail family.

    ``rho`` is the atom location (lowest support point) and ``q`` its mass.
    ``lambda1 < 0`` and ``lambda2 > 0`` are the multipliers that tilt the
    quantile map; ``n`` the bidder count; ``m``/``sigma`` the mean and
    standard deviation the member was built to match.  The quantile map on
    ``[q, 1]`` is

        Q(u) = (n(n-1) z(u) - lambda1) / (2 lambda2),   z(u) = u^(n-1) - u^(n-2),

    which is nondecreasing there and equals ``rho`` at ``u = q``.
    """

    rho: float
    q: float
    lambda1: float
    lambda2: float
    n: int
    m: float
    sigma: float

    def __post_init__(self):
        _require(self.n >= 2, "bidder count must be at least 2")
        _require(0.0 <= self.rho < self.m, "atom must sit below the mean")
        _require(self.sigma > 0.0, "sigma must be positive")
        _require(self.lambda1 < 0.0, "lambda1 must be negative")
        _require(self.lambda2 > 0.0, "lambda2 must be positive")
        floor_mass = 1.0 - 1.0 / (self.n - 1) ** 2
        _require(
            floor_mass - 1e-9 <= self.q < 1.0,
            f"atom mass {self.q} outside [{floor_mass}, 1)",
        )
        # The quantile map must pass through the atom location.
        anchor = self.lambda1 + 2.0 * self.lambda2 * self.rho
        target = self.n * (self.n - 1) * marginal_cost(self.q, self.n)
        scale = max(1.0, abs(target))
        _require(
            abs(anchor - target) <= 1e-9 * scale,
            "multipliers do not anchor the quantile map at the atom",
        )

    def quantile_tail(self, u):
        """Quantile map on [q, 1]; explicit polynomial in u."""
        u = np.asarray(u, dtype=float)
        s = self.n * (self.n - 1)
        out = np.asarray((s * marginal_cost(u, self.n) - self.lambda1) / (2.0 * self.lambda2))
        return float(out) if out.ndim == 0 else out

    @property
    def support_top(self) -> float:
        return -self.lambda1 / (2.0 * self.lambda2)


class Distribution:
    """Common interface: cdf with left limits, quantile, moments, JSON."""

    def cdf(self, v: float) -> float:
        raise NotImplementedError

    def cdf_left(self, v: float) -> float:
        """Left limit F(v-); differs from cdf(v) exactly at atoms."""
        raise NotImplementedError

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Generalized inverse Q(u) = inf{v : F(v) >= u}, vectorized."""
        raise NotImplementedError

    def moments(self) -> tuple[float, float]:
        """(mean, variance), closed form per variant."""
        raise NotImplementedError

    def support_bottom(self) -> float:
        raise NotImplementedError

    def support_top(self) -> float:
        raise NotImplementedError

    def payload(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(Distribution):
    a: float

    def __post_init__(self):
        _require(np.isfinite(self.a) and self.a >= 0.0, "point mass needs a finite value >= 0")

    def cdf(self, v):
        return 1.0 if v >= self.a else 0.0

    def cdf_left(self, v):
        return 1.0 if v > self.a else 0.0

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.a)

    def moments(self):
        return self.a, 0.0

    def support_bottom(self):
        return self.a

    def support_top(self):
        return self.a

    def payload(self):
        return {"type": "point", "a": self.a}


@dataclass(frozen=True)
class Binary(Distribution):
    low: float
    high: float
    p_low: float

    def __post_init__(self):
        _require(0.0 <= self.low < self.high, "need 0 <= low < high")
        _require(np.isfinite(self.high), "high must be finite")
        _require(0.0 <= self.p_low <= 1.0, "p_low must be a probability")

    def cdf(self, v):
        if v < self.low:
            return 0.0
        if v < self.high:
            return self.p_low
        return 1.0

    def cdf_left(self, v):
        if v <= self.low:
            return 0.0
        if v <= self.high:
            return self.p_low
        return 1.0

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= self.p_low, self.low, self.high)

    def moments(self):
        mean = self.p_low * self.low + (1.0 - self.p_low) * self.high
        second = self.p_low * self.low**2 + (1.0 - self.p_low) * self.high**2
        return mean, max(second - mean**2, 0.0)

    def support_bottom(self):
        return self.low

    def support_top(self):
        return self.high

    def payload(self):
        return {"type": "binary", "low": self.low, "high": self.high, "p_low": self.p_low}


@dataclass(frozen=True)
class AtomUniformTail(Distribution):
    """Atom of ``atom_mass`` at ``atom_point`` plus uniform on [tail_low, tail_high].

    ``atom_point <= tail_low`` is allowed to be strict (a support gap); the
    numerical adversary exploits exactly that shape.
    """

    atom_point: float
    atom_mass: float
    tail_low: float
    tail_high: float

    def __post_init__(self):
        _require(0.0 <= self.atom_point <= self.tail_low, "atom must not sit above the tail")
        _require(self.tail_low < self.tail_high, "tail needs positive length")
        _require(0.0 <= self.atom_mass <= 1.0, "atom mass must be a probability")

    @property
    def tail_mass(self) -> float:
        return 1.0 - self.atom_mass

    def cdf(self, v):
        if v < self.atom_point:
            return 0.0
        if v < self.tail_low:
            return self.atom_mass
        if v < self.tail_high:
            frac = (v - self.tail_low) / (self.tail_high - self.tail_low)
            return self.atom_mass + self.tail_mass * frac
        return 1.0

    def cdf_left(self, v):
        if v <= self.atom_point:
            return 0.0
        if v <= self.tail_low:
            return self.atom_mass
        if v <= self.tail_high:
            frac = (v - self.tail_low) / (self.tail_high - self.tail_low)
            return self.atom_mass + self.tail_mass * frac
        return 1.0

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.tail_mass <= 0.0:
            return np.full_like(u, self.atom_point)
        frac = np.clip((u - self.atom_mass) / self.tail_mass, 0.0, 1.0)
        tail = self.tail_low + (self.tail_high - self.tail_low) * frac
        return np.where(u <= self.atom_mass, self.atom_point, tail)

    def moments(self):
        mid = 0.5 * (self.tail_low + self.tail_high)
        mean = self.atom_mass * self.atom_point + self.tail_mass * mid
        tail_second = mid**2 + (self.tail_high - self.tail_low) ** 2 / 12.0
        second = self.atom_mass * self.atom_point**2 + self.tail_mass * tail_second
        return mean, max(second - mean**2, 0.0)

    def support_bottom(self):
        return self.atom_point if self.atom_mass > 0.0 else self.tail_low

    def support_top(self):
        return self.tail_high if self.tail_mass > 0.0 else self.atom_point

    def payload(self):
        return {
            "type": "atom_uniform",
            "atom_point": self.atom_point,
            "atom_mass": self.atom_mass,
            "tail_low": self.tail_low,
            "tail_high": self.tail_high,
        }


@dataclass(frozen=True)
class AtomQuantileTail(Distribution):
    params: TailParams

    def cdf(self, v):
        p = self.params
        if v < p.rho:
            return 0.0
        top = p.support_top
        if v >= top:
            return 1.0
        return self._invert_tail(float(v))

    def cdf_left(self, v):
        p = self.params
        if v <= p.rho:
            return 0.0
        # The tail is continuous, so the left limit matches the cdf there.
        return self.cdf(v)

    def _invert_tail(self, v: float) -> float:
        """Solve Q(u) = v for u in [q, 1]; Q is strictly increasing there."""
        p = self.params
        lo, hi = p.q, 1.0
        if v <= p.rho:
            return p.q
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if p.quantile_tail(mid) < v:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15:
                break
        return 0.5 * (lo + hi)

    def quantile(self, u):
        p = self.params
        u = np.asarray(u, dtype=float)
        tail = p.quantile_tail(np.clip(u, p.q, 1.0))
        return np.where(u <= p.q, p.rho, tail)

    def moments(self):
        # Integrate the quantile polynomial exactly:
        #   mean = q*rho + int_q^1 Q(u) du
        #   E v^2 = q*rho^2 + int_q^1 Q(u)^2 du
        # with Q(u) = (S (z(u) - z(q)) + w) / (2 lambda2), w = S z(q) - lambda1.
        p = self.params
        s = p.n * (p.n - 1)
        a_int, b_int = centered_cost_integrals(p.q, p.n)
        delta = 1.0 - p.q
        w = s * marginal_cost(p.q, p.n) - p.lambda1
        two_l2 = 2.0 * p.lambda2
        mean = p.q * p.rho + (s * b_int + w * delta) / two_l2
        second = p.q * p.rho**2 + (s * s * a_int + 2.0 * s * w * b_int + w * w * delta) / two_l2**2
        return mean, max(second - mean**2, 0.0)

    def support_bottom(self):
        return self.params.rho

    def support_top(self):
        return self.params.support_top

    def payload(self):
        p = self.params
        return {
            "type": "g_tail",
            "rho": p.rho,
            "q": p.q,
            "lambda1": p.lambda1,
            "lambda2": p.lambda2,
            "n": p.n,
            "m": p.m,
            "sigma": p.sigma,
        }


@dataclass(frozen=True, eq=False)
class DiscreteCdf(Distribution):
    """Right-continuous step cdf: F(v) = cdf[i] on [grid[i], grid[i+1])."""

    grid: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.cdf_values, dtype=float)
        _require(grid.ndim == 1 and grid.size >= 1, "grid must be a nonempty 1-d array")
        _require(vals.shape == grid.shape, "grid and cdf arrays must align")
        _require(bool(np.all(np.diff(grid) > 0.0)), "grid must be strictly ascending")
        _require(bool(grid[0] >= 0.0), "values must be nonnegative")
        _require(bool(np.all(vals >= -_ATOL) and np.all(vals <= 1.0 + _ATOL)), "cdf values must lie in [0, 1]")
        _require(bool(np.all(np.diff(vals) >= -_ATOL)), "cdf values must be nondecreasing")
        _require(abs(vals[-1] - 1.0) <= _ATOL, "cdf must reach 1 at the top of the grid")
        vals = np.clip(vals, 0.0, 1.0)
        vals[-1] = 1.0
        grid.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "cdf_values", vals)

    def cdf(self, v):
        idx = np.searchsorted(self.grid, v, side="right") - 1
        return float(self.cdf_values[idx]) if idx >= 0 else 0.0

    def cdf_left(self, v):
        idx = np.searchsorted(self.grid, v, side="left") - 1
        return float(self.cdf_values[idx]) if idx >= 0 else 0.0

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.cdf_values, u, side="left")
        return self.grid[np.minimum(idx, self.grid.size - 1)]

    def atom_masses(self) -> np.ndarray:
        return np.diff(self.cdf_values, prepend=0.0)

    def moments(self):
        w = self.atom_masses()
        mean = float(w @ self.grid)
        second = float(w @ self.grid**2)
        return mean, max(second - mean**2, 0.0)

    def support_bottom(self):
        w = self.atom_masses()
        return float(self.grid[np.nonzero(w > 0)[0][0]]) if np.any(w > 0) else float(self.grid[0])

    def support_top(self):
        w = self.atom_masses()
        return float(self.grid[np.nonzero(w > 0)[0][-1]]) if np.any(w > 0) else float(self.grid[-1])

    def payload(self):
        return {"type": "discrete", "grid": self.grid.tolist(), "cdf": self.cdf_values.tolist()}


AnyDistribution = Union[PointMass, Binary, AtomUniformTail, AtomQuantileTail, DiscreteCdf]


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def cdf_eval(dist: Distribution, v: float) -> float:
    """F(v); 0 below support, 1 at and above its top."""
    return dist.cdf(v)


def moments(dist: Distribution) -> tuple[float, float]:
    """(mean, variance) for any variant, closed form."""
    return dist.moments()


def sample(dist: Distribution, count: int, seed: int, offset: int = 0) -> np.ndarray:
    """Inverse-cdf sampling on the counter-based uniform stream.

    Sample ``i`` is a pure function of ``(seed, offset + i)``, so chunked and
    unchunked sampling agree exactly.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    u = uniform_stream(seed, offset, count)
    return np.asarray(dist.quantile(u), dtype=float)


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def to_json(dist: Distribution, indent: int | None = None) -> str:
    return json.dumps(dist.payload(), indent=indent)


def from_payload(payload: dict) -> Distribution:
    try:
        kind = payload["type"]
    except (TypeError, KeyError) as exc:
        raise InvalidDistributionError("distribution payload needs a 'type' key") from exc
    try:
        if kind == "point":
            return PointMass(float(payload["a"]))
        if kind == "binary":
            return Binary(float(payload["low"]), float(payload["high"]), float(payload["p_low"]))
        if kind == "atom_uniform":
            return AtomUniformTail(
                float(payload["atom_point"]),
                float(payload["atom_mass"]),
                float(payload["tail_low"]),
                float(payload["tail_high"]),
            )
        if kind == "g_tail":
            params = TailParams(
                rho=float(payload["rho"]),
                q=float(payload["q"]),
                lambda1=float(payload["lambda1"]),
                lambda2=float(payload["lambda2"]),
                n=int(payload["n"]),
                m=float(payload["m"]),
                sigma=float(payload["sigma"]),
            )
            return AtomQuantileTail(params)
        if kind == "discrete":
            return DiscreteCdf(np.asarray(payload["grid"], dtype=float), np.asarray(payload["cdf"], dtype=float))
    except KeyError as exc:
        raise InvalidDistributionError(f"missing field for variant {kind!r}: {exc}") from exc
    raise InvalidDistributionError(f"unknown distribution type {kind!r}")


def from_json(text: str) -> Distribution:
    return from_payload(json.loads(text))
