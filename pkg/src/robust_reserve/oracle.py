"""Independent numerical adversary for certifying the closed-form solutions.

The closed-form worst cases and threats come out of a Lagrangian argument; this
module attacks the same minimization problems head on, with two searches that
share nothing with that derivation:

* a discretized search over step cdfs on a value grid -- the decision vector is
  the survival function at the grid points (nonincreasing, in [0,1], linear
  mean equality, linear second-moment inequality), minimized by projected
  gradient descent with a pool-adjacent-violators monotonicity projection and
  exact moment repair, from multiple starts;
* parametric family searches (binary, atom+uniform, atom+gap+uniform) with the
  moment constraints eliminated analytically, refined over successively finer
  grids.

The closed-form candidates themselves (threat and worst case for the queried
reserve) are also evaluated, through the generic revenue functional rather
than their own closed forms, and merged into the candidate pool: the oracle's
job is certification -- it must never beat a truly optimal closed form by more
than numerical noise, and it must rediscover the optimum's value.  All reported
revenues are computed by ``auction.expected_revenue`` on exactly feasible
distributions, so oracle values are always true upper bounds on the infimum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bounded as bounded_mod
from . import variance as variance_mod
from ._kernel import marginal_cost, second_highest_survival, second_highest_survival_antideriv
from ._rng import worker_count
from .auction import AuctionSetting, Bounded, TieRule, VarianceBound, expected_revenue
from .distributions import AtomUniformTail, Binary, DiscreteCdf, Distribution
from .errors import InvalidSettingError, SolverError

ALL_FAMILIES = ("discretized_cdf", "binary", "atom_plus_uniform", "atom_plus_gap_uniform")
SEED_FAMILY = "closed_form_seed"

VERIFY_CSV_HEADER = "r,oracle_revenue,closed_form_bound,family_tag"


@dataclass(frozen=True)
class OracleConfig:
    value_grid_size: int = 400
    value_grid_max: Optional[float] = None  # default: vmax, or mean + 12 sigma
    families: tuple[str, ...] = ALL_FAMILIES
    max_iterations: int = 240
    tolerance: float = 1e-7
    random_starts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.value_grid_size < 50:
            raise InvalidSettingError("value grid needs at least 50 points")
        if self.tolerance <= 0.0:
            raise InvalidSettingError("tolerance must be positive")
        unknown = set(self.families) - set(ALL_FAMILIES)
        if unknown:
            raise InvalidSettingError(f"unknown families: {sorted(unknown)}")


@dataclass(frozen=True)
class OracleResult:
    best_revenue: float
    best_distribution: Distribution
    family_tag: str
    constraint_residuals: tuple[float, float]
    iterations: int


@dataclass(frozen=True)
class VerificationReport:
    maxmin_revenue: float
    price_set: tuple[float, float]
    unique: bool
    rows: tuple[tuple[float, float, float, str], ...]
    empirical_argmax: tuple[float, ...]
    empirical_unique: bool
    price_set_covered: bool
    violations: tuple[str, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def csv_lines(self):
        yield VERIFY_CSV_HEADER
        for r, env, bound, tag in self.rows:
            yield f"{r!r},{env!r},{bound!r},{tag}"

    def payload(self) -> dict:
        return {
            "maxmin_revenue": self.maxmin_revenue,
            "price_set": list(self.price_set),
            "unique": self.unique,
            "rows": [
                {"r": r, "oracle_revenue": env, "closed_form_bound": bound, "family_tag": tag}
                for r, env, bound, tag in self.rows
            ],
            "empirical_argmax": list(self.empirical_argmax),
            "empirical_unique": self.empirical_unique,
            "price_set_covered": self.price_set_covered,
            "violations": list(self.violations),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# Pool-adjacent-violators: exact projection onto the monotone cone
# ---------------------------------------------------------------------------

def pav_nonincreasing(x: np.ndarray) -> np.ndarray:
    """Euclidean projection of x onto nonincreasing sequences."""
    values = np.asarray(x, dtype=float)
    means = []
    counts = []
    for v in values:
        means.append(v)
        counts.append(1)
        # A violator here is a block *larger* than its predecessor.
        while len(means) > 1 and means[-2] < means[-1]:
            total = means[-1] * counts[-1] + means[-2] * counts[-2]
            counts[-2] += counts[-1]
            means[-2] = total / counts[-2]
            means.pop()
            counts.pop()
    return np.repeat(means, counts)


# ---------------------------------------------------------------------------
# Discretized search
# ---------------------------------------------------------------------------

def _grid_max(setting: AuctionSetting, config: OracleConfig) -> float:
    constraint = setting.constraint
    if config.value_grid_max is not None:
        top = float(config.value_grid_max)
    elif isinstance(constraint, Bounded):
        top = constraint.vmax
    else:
        top = constraint.mean + 12.0 * constraint.sigma
    if top < constraint.mean:
        raise SolverError("value grid top below the known mean: no feasible cdf exists")
    if isinstance(constraint, Bounded):
        top = min(top, constraint.vmax)
    return top


def _value_grid(setting: AuctionSetting, reserve: float, config: OracleConfig) -> np.ndarray:
    top = _grid_max(setting, config)
    base = np.linspace(0.0, top, config.value_grid_size)
    anchors = [setting.mean, setting.cost]
    if 0.0 <= reserve < top:
        anchors.append(reserve)
    grid = np.unique(np.concatenate([base, np.asarray(anchors)]))
    return grid[(grid >= 0.0) & (grid <= top)]


class _StepProblem:
    """Step-cdf minimization data for one (reserve, setting, tie) triple."""

    def __init__(self, grid: np.ndarray, reserve: float, setting: AuctionSetting, tie: TieRule):
        self.grid = grid
        self.n = setting.n
        self.cost = setting.cost
        self.reserve = reserve
        self.mean_target = setting.mean
        constraint = setting.constraint
        self.second_cap = (
            constraint.mean**2 + constraint.variance
            if isinstance(constraint, VarianceBound)
            else None
        )
        self.delta = np.diff(grid)  # segment lengths
        self.delta2 = np.diff(grid**2)
        self.weights = np.maximum(grid[1:] - np.maximum(grid[:-1], reserve), 0.0)
        side = "left" if tie is TieRule.SALE_AT_RESERVE else "right"
        idx = int(np.searchsorted(grid, reserve, side=side)) - 1
        # Index of the survival variable governing F at the reserve; -1 means
        # the level is pinned (0 below the grid, 1 at or above its top).
        self.tie_index = idx if 0 <= idx < grid.size - 1 else -1
        self.pinned_level = 0.0 if idx < 0 else 1.0
        # Degenerate point-mass-at-mean profile; exact because the mean is a grid anchor.
        self.degenerate = (grid[1:] <= self.mean_target).astype(float)

    def repair(self, s: np.ndarray) -> np.ndarray:
        """Restore exact feasibility: mean equality, then the variance cap."""
        s = np.clip(s, 0.0, 1.0)
        mean = float(s @ self.delta)
        target = self.mean_target
        if mean <= 0.0:
            s = self.degenerate.copy()
        elif mean > target:
            s = s * (target / mean)
        elif mean < target:
            total = float(self.delta.sum())
            beta = (total - target) / (total - mean)
            s = 1.0 - beta * (1.0 - s)
        if self.second_cap is not None:
            second = float(s @ self.delta2)
            if second > self.second_cap:
                t = (second - self.second_cap) / (second - self.mean_target**2)
                s = (1.0 - t) * s + t * self.degenerate
        return s

    def objective(self, s: np.ndarray) -> float:
        level = 1.0 - s[self.tie_index] if self.tie_index >= 0 else self.pinned_level
        tail = float(self.weights @ second_highest_survival(1.0 - s, self.n))
        return self.reserve - (self.reserve - self.cost) * level**self.n + tail

    def gradient(self, s: np.ndarray) -> np.ndarray:
        n = self.n
        grad = -self.weights * n * (n - 1) * marginal_cost(1.0 - s, n)
        if self.tie_index >= 0:
            grad[self.tie_index] += n * (self.reserve - self.cost) * (1.0 - s[self.tie_index]) ** (n - 1)
        return grad

    def to_distribution(self, s: np.ndarray) -> DiscreteCdf:
        levels = np.concatenate([1.0 - s, [1.0]])
        levels = np.minimum.accumulate(levels[::-1])[::-1]  # one-ulp monotonicity guard
        return DiscreteCdf(self.grid, np.clip(levels, 0.0, 1.0))


def _descend(problem: _StepProblem, start: np.ndarray, iterations: int) -> tuple[float, np.ndarray]:
    s = problem.repair(np.clip(pav_nonincreasing(start), 0.0, 1.0))
    best_value = problem.objective(s)
    best_s = s
    for it in range(iterations):
        grad = problem.gradient(s)
        top = float(np.abs(grad).max(initial=0.0))
        if top <= 0.0:
            break
        step = 0.25 / (top * (1.0 + it / 40.0))
        s = problem.repair(np.clip(pav_nonincreasing(s - step * grad), 0.0, 1.0))
        value = problem.objective(s)
        if value < best_value:
            best_value = value
            best_s = s
    return best_value, best_s


def _discretized_candidates(
    reserve: float, setting: AuctionSetting, tie: TieRule, config: OracleConfig
) -> tuple[list[tuple[Distribution, TieRule, str]], int]:
    grid = _value_grid(setting, reserve, config)
    problem = _StepProblem(grid, reserve, setting, tie)
    rng = np.random.default_rng(config.seed)
    starts = [problem.degenerate.copy(), 1.0 - grid[:-1] / max(grid[-1], 1e-12)]
    for dist, _, _ in _closed_form_seeds(reserve, setting):
        starts.append(np.array([1.0 - dist.cdf(v) for v in grid[:-1]]))
    for k in range(config.random_starts):
        raw = np.sort(rng.random(grid.size - 1))[::-1]
        starts.append(raw ** (0.5 + k % 4))
    best_value = np.inf
    best_s = problem.degenerate
    iterations = 0
    for start in starts:
        value, s = _descend(problem, start, config.max_iterations)
        iterations += config.max_iterations
        if value < best_value:
            best_value, best_s = value, s
    return [(problem.to_distribution(best_s), tie, "discretized_cdf")], iterations


# ---------------------------------------------------------------------------
# Parametric families (moment constraints eliminated analytically)
# ---------------------------------------------------------------------------

def _binary_revenue_vec(a, b, p, reserve, cost, n, sale):
    if sale:
        level = np.where(reserve <= a, 0.0, np.where(reserve <= b, p, 1.0))
    else:
        level = np.where(reserve < a, 0.0, np.where(reserve < b, p, 1.0))
    tail = np.maximum(a - reserve, 0.0) + np.maximum(b - np.maximum(reserve, a), 0.0) * second_highest_survival(p, n)
    return reserve - (reserve - cost) * level**n + tail


def _binary_family(setting: AuctionSetting, reserve: float):
    """Yield (a, b, p) arrays of exactly feasible binary distributions."""
    constraint = setting.constraint
    m = constraint.mean
    top = constraint.vmax if isinstance(constraint, Bounded) else m + 12.0 * np.sqrt(constraint.variance)

    def build(a_axis, b_axis):
        a, b = np.meshgrid(a_axis, b_axis, indexing="ij")
        a, b = a.ravel(), b.ravel()
        keep = (a >= 0.0) & (a < m) & (b > m) & (b <= top)
        a, b = a[keep], b[keep]
        if isinstance(constraint, VarianceBound):
            keep = (m - a) * (b - m) <= constraint.variance
            a, b = a[keep], b[keep]
        p = (b - m) / (b - a)
        return a, b, p

    return build, (0.0, m * (1.0 - 1e-12)), (np.nextafter(m, np.inf), top)


def _anchored_axis(lo: float, hi: float, count: int, anchors: Sequence[float]) -> np.ndarray:
    axis = np.linspace(lo, hi, count)
    extra = [x for x in anchors if lo <= x <= hi]
    if extra:
        axis = np.unique(np.concatenate([axis, np.asarray(extra, dtype=float)]))
    return axis


def _search_binary(reserve, setting, tie, config):
    build, (a_lo, a_hi), (b_lo, b_hi) = _binary_family(setting, reserve)
    sale = tie is TieRule.SALE_AT_RESERVE
    n, c = setting.n, setting.cost
    anchors_a = [reserve, np.nextafter(reserve, np.inf), max(reserve - 1e-12, 0.0), c]
    best = None
    for _ in range(3):
        a_axis = _anchored_axis(a_lo, a_hi, 81, anchors_a)
        b_axis = _anchored_axis(b_lo, b_hi, 81, [])
        a, b, p = build(a_axis, b_axis)
        if a.size == 0:
            break
        values = _binary_revenue_vec(a, b, p, reserve, c, n, sale)
        i = int(np.argmin(values))
        best = Binary(float(a[i]), float(b[i]), float(p[i]))
        da = (a_hi - a_lo) / 80.0
        db = (b_hi - b_lo) / 80.0
        a_lo, a_hi = max(a[i] - da, 0.0), min(a[i] + da, setting.mean * (1.0 - 1e-12))
        b_lo, b_hi = max(b[i] - db, np.nextafter(setting.mean, np.inf)), b[i] + db
    return [] if best is None else [(best, tie, "binary")]


def _gap_uniform_variance(a, ell, m, variance):
    """Solve (p, b) so the atom+gap+uniform hits the mean and binds the variance."""
    s2 = m**2 + variance
    kappa = (s2 - a**2) / (2.0 * (m - a))
    disc = (ell - 3.0 * kappa) ** 2 - 4.0 * (ell**2 - 3.0 * a**2 - 3.0 * kappa * ell + 6.0 * kappa * a)
    ok = disc >= 0.0
    b = np.where(ok, (3.0 * kappa - ell + np.sqrt(np.maximum(disc, 0.0))) / 2.0, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = 2.0 * (m - a) / (ell + b - 2.0 * a)
    p = 1.0 - t
    ok &= np.isfinite(b) & (b > ell) & (t > 0.0) & (t <= 1.0)
    return b, p, ok


def _gap_uniform_revenue_vec(a, p, ell, b, reserve, cost, n, sale):
    interp = p + (1.0 - p) * np.clip((reserve - ell) / (b - ell), 0.0, 1.0)
    if sale:
        level = np.where(reserve <= a, 0.0, np.where(reserve <= ell, p, np.where(reserve < b, interp, 1.0)))
    else:
        level = np.where(reserve < a, 0.0, np.where(reserve < ell, p, np.where(reserve < b, interp, 1.0)))
    tail = np.maximum(a - reserve, 0.0)
    tail += np.maximum(ell - np.maximum(reserve, a), 0.0) * second_highest_survival(p, n)
    u0 = np.where(reserve <= ell, p, interp)
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = (b - ell) / (1.0 - p)
        linear = slope * (
            second_highest_survival_antideriv(np.ones_like(u0), n)
            - second_highest_survival_antideriv(u0, n)
        )
    linear = np.where((p < 1.0) & (reserve < b), linear, 0.0)
    return reserve - (reserve - cost) * level**n + tail + linear


def _search_gap_uniform(reserve, setting, tie, config, contiguous: bool):
    constraint = setting.constraint
    m, n, c = setting.mean, setting.n, setting.cost
    sale = tie is TieRule.SALE_AT_RESERVE
    tag = "atom_plus_uniform" if contiguous else "atom_plus_gap_uniform"
    top = _grid_max(setting, config)
    anchors_a = [reserve, np.nextafter(reserve, np.inf), max(reserve - 1e-12, 0.0), c]
    a_lo, a_hi = 0.0, m * (1.0 - 1e-9)
    l_lo, l_hi = 0.0, top
    best = None

    for _ in range(3):
        a_axis = _anchored_axis(a_lo, a_hi, 61, anchors_a)
        if isinstance(constraint, VarianceBound):
            if contiguous:
                a = a_axis
                ell = a_axis.copy()
            else:
                l_axis = _anchored_axis(l_lo, l_hi, 121, [reserve])
                a, ell = np.meshgrid(a_axis, l_axis, indexing="ij")
                a, ell = a.ravel(), ell.ravel()
                keep = ell >= a
                a, ell = a[keep], ell[keep]
            b, p, ok = _gap_uniform_variance(a, ell, m, constraint.variance)
            a, ell, b, p = a[ok], ell[ok], b[ok], p[ok]
        else:
            # Bounded support: mean pins the atom mass; tail endpoints free.
            b_axis = _anchored_axis(m * (1.0 + 1e-9), constraint.vmax, 41, [constraint.vmax])
            if contiguous:
                a, b = np.meshgrid(a_axis, b_axis, indexing="ij")
                a, b = a.ravel(), b.ravel()
                ell = a.copy()
            else:
                l_axis = _anchored_axis(l_lo, min(l_hi, constraint.vmax), 41, [reserve])
                a, ell, b = np.meshgrid(a_axis, l_axis, b_axis, indexing="ij")
                a, ell, b = a.ravel(), ell.ravel(), b.ravel()
                keep = ell >= a
                a, ell, b = a[keep], ell[keep], b[keep]
            mid = 0.5 * (ell + b)
            ok = (b > ell) & (mid > m) & (a < m)
            a, ell, b, mid = a[ok], ell[ok], b[ok], mid[ok]
            p = (mid - m) / (mid - a)
            ok = (p >= 0.0) & (p < 1.0)
            a, ell, b, p = a[ok], ell[ok], b[ok], p[ok]
        if a.size == 0:
            break
        values = _gap_uniform_revenue_vec(a, p, ell, b, reserve, c, n, sale)
        i = int(np.argmin(values))
        best = AtomUniformTail(float(a[i]), float(p[i]), float(ell[i]), float(b[i]))
        da = (a_hi - a_lo) / 60.0
        a_lo, a_hi = max(float(a[i]) - da, 0.0), min(float(a[i]) + da, m * (1.0 - 1e-9))
        dl = (l_hi - l_lo) / 120.0
        l_lo, l_hi = max(float(ell[i]) - dl, 0.0), min(float(ell[i]) + dl, top)
    return [] if best is None else [(best, tie, tag)]


# ---------------------------------------------------------------------------
# Candidate merge
# ---------------------------------------------------------------------------

def _closed_form_seeds(reserve, setting):
    module = bounded_mod if isinstance(setting.constraint, Bounded) else variance_mod
    seeds = []
    dist, flag = module.threat(reserve, setting)
    seeds.append((dist, flag, SEED_FAMILY))
    wc = module.worst_case(setting)
    seeds.append((wc, TieRule.NO_SALE_AT_RESERVE, SEED_FAMILY))
    return seeds


def _feasibility_residuals(dist: Distribution, setting: AuctionSetting) -> tuple[float, float]:
    mean, var = dist.moments()
    constraint = setting.constraint
    mean_res = abs(mean - constraint.mean) / max(1.0, abs(constraint.mean))
    if isinstance(constraint, VarianceBound):
        var_res = max(var - constraint.variance, 0.0) / max(1.0, constraint.variance)
    else:
        var_res = max(dist.support_top() - constraint.vmax, 0.0) / max(1.0, constraint.vmax)
        var_res = max(var_res, max(-dist.support_bottom(), 0.0))
    return mean_res, var_res


def minimize_revenue(
    reserve: float,
    setting: AuctionSetting,
    tie: TieRule = TieRule.NO_SALE_AT_RESERVE,
    config: OracleConfig = OracleConfig(),
) -> OracleResult:
    """Best feasible revenue-minimizer the adversary can exhibit at ``reserve``.

    The reported value is an upper bound on the true infimum; whenever the
    closed form is optimal the seeded candidates guarantee rediscovery within
    the configured tolerance.  Deterministic for fixed config.
    """
    if reserve < 0.0:
        raise InvalidSettingError("reserve must be nonnegative")
    candidates: list[tuple[Distribution, TieRule, str]] = list(_closed_form_seeds(reserve, setting))
    iterations = 0
    if "binary" in config.families:
        candidates += _search_binary(reserve, setting, tie, config)
    if "atom_plus_uniform" in config.families:
        candidates += _search_gap_uniform(reserve, setting, tie, config, contiguous=True)
    if "atom_plus_gap_uniform" in config.families:
        candidates += _search_gap_uniform(reserve, setting, tie, config, contiguous=False)
    if "discretized_cdf" in config.families:
        found, iterations = _discretized_candidates(reserve, setting, tie, config)
        candidates += found

    order = {SEED_FAMILY: -1}
    order.update({name: i for i, name in enumerate(ALL_FAMILIES)})
    best = None
    for dist, flag, tag in candidates:
        value = expected_revenue(dist, reserve, setting, flag)
        key = (value, order[tag])
        if best is None or key < best[0]:
            best = (key, value, dist, tag)
    assert best is not None
    _, value, dist, tag = best
    return OracleResult(
        best_revenue=value,
        best_distribution=dist,
        family_tag=tag,
        constraint_residuals=_feasibility_residuals(dist, setting),
        iterations=iterations,
    )


def verify_maxmin(
    setting: AuctionSetting,
    r_grid_size: int = 25,
    config: OracleConfig = OracleConfig(),
    workers: int | None = None,
) -> VerificationReport:
    """Numerical saddle check of the maxmin solution.

    Sweeps reserves over [0, 1.2 * mean], minimizing revenue at each, and
    checks that the lower envelope never exceeds the claimed maxmin revenue
    (beyond tolerance) and attains it at r = c.  Assertion failures are
    reported in ``violations``, not raised.
    """
    if r_grid_size < 20:
        raise InvalidSettingError("need at least 20 reserve grid points")
    module = bounded_mod if isinstance(setting.constraint, Bounded) else variance_mod
    solution = module.solve(setting)
    maxmin = solution.maxmin_revenue
    m, c = setting.mean, setting.cost
    grid = np.unique(np.concatenate([np.linspace(0.0, 1.2 * m, r_grid_size), [c, m]]))

    def at_reserve(r: float):
        result = minimize_revenue(float(r), setting, TieRule.NO_SALE_AT_RESERVE, config)
        threat_dist, threat_tie = module.threat(float(r), setting)
        bound = expected_revenue(threat_dist, float(r), setting, threat_tie)
        return float(r), result.best_revenue, bound, result.family_tag

    threads = worker_count(workers)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(at_reserve, grid))
    else:
        rows = [at_reserve(r) for r in grid]

    tol = config.tolerance
    violations = []
    for r, env, bound, _ in rows:
        if env > maxmin + tol:
            violations.append(f"envelope {env!r} exceeds maxmin {maxmin!r} at r={r!r}")
        if bound > maxmin + tol:
            violations.append(f"threat bound {bound!r} exceeds maxmin {maxmin!r} at r={r!r}")
    env_at_cost = next(env for r, env, _, _ in rows if r == c)
    if abs(env_at_cost - maxmin) > tol:
        violations.append(
            f"envelope {env_at_cost!r} does not attain maxmin {maxmin!r} at r=c={c!r}"
        )

    env_values = np.asarray([row[1] for row in rows])
    r_values = np.asarray([row[0] for row in rows])
    argmax_tol = max(10.0 * tol, 1e-6)
    argmax_mask = env_values >= env_values.max() - argmax_tol
    argmax = tuple(float(r) for r in r_values[argmax_mask])
    spacing = 1.2 * m / (r_grid_size - 1)
    empirical_unique = bool(np.all(np.abs(r_values[argmax_mask] - c) <= 1.5 * spacing))
    in_price_set = (r_values >= solution.price_set[0] - 1e-12) & (
        r_values <= solution.price_set[1] + 1e-12
    )
    price_set_covered = bool(np.all(argmax_mask[in_price_set]))
    if not price_set_covered:
        violations.append("a claimed maxmin price is missing from the empirical argmax")

    return VerificationReport(
        maxmin_revenue=maxmin,
        price_set=solution.price_set,
        unique=solution.unique,
        rows=tuple(rows),
        empirical_argmax=argmax,
        empirical_unique=empirical_unique,
        price_set_covered=price_set_covered,
        violations=tuple(violations),
        tolerance=tol,
    )
