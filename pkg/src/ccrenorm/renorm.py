"""Commuting pairs and the renormalization operator on circle-map iterates.

A level-m pair of a circle map collects the two return maps
eta = F^{q_m} - p_m and xi = F^{q_{m-1}} - p_{m-1} around the critical point,
rescaled by the signed closest-return value s = F^{q_{m-1}}(0) - p_{m-1} so
that xi(0) = 1 exactly and b = eta(0) is negative (settling near a universal
value for bounded-type rotation numbers; transiently |b| may exceed 1, since
consecutive returns land on opposite sides of the critical point and only
same-side magnitudes must shrink). The seed level m = 0 uses
(q_0, q_{-1}) = (1, 0), i.e. the map itself paired with the unit translation.

Renormalization is exact integer bookkeeping: with height r (the number of
eta-steps the orbit of xi(0) stays on its side of 0), the next pair is
(eta^r o xi, eta) rescaled, whose iterate data is q' = r q_m + q_{m-1},
the continued-fraction recurrence, so heights along a tower reproduce the
CF entries of the rotation number, computed here from orbits alone and never
read from the CF. No function data is truncated at any level; the cost is
q_m lift evaluations per sample point.

Because both compositions of an iterate-backed pair are the same power of F,
the commutation residual is structurally zero and measures only accumulated
rounding; it is kept as a per-level precision canary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import (
    BudgetError,
    CombinatoricsError,
    ContractError,
    DegenerateError,
    DomainError,
    NotRenormalizableError,
    PrecisionError,
)
from .fitting import least_squares_line
from .precision import quad_tol, working_precision
from .rotation import _unfold

__all__ = [
    "Height",
    "CommutingPair",
    "PairDistance",
    "pair_from_map",
    "height",
    "renormalize",
    "pair_distance",
    "renorm_tower",
]

INF = math.inf

DEFAULT_GRID = 256
DEFAULT_HEIGHT_BUDGET = 10**6
DEFAULT_EVAL_BUDGET = 10**7


@dataclass(frozen=True)
class Height:
    """Number of eta-steps before the orbit of xi(0) crosses 0; may be infinite."""

    value: object  # int >= 0 or math.inf

    @property
    def is_finite(self) -> bool:
        return self.value != INF

    def __int__(self) -> int:
        if not self.is_finite:
            raise DomainError("height is infinite")
        return int(self.value)


@dataclass(frozen=True)
class PairDistance:
    """Sampled sup-norm distance between two normalized pairs."""

    value: mpfr
    grid_size: int


@dataclass
class CommutingPair:
    """Iterate-backed commuting pair at one renormalization level.

    q = (q_m, q_{m-1}) and p = (p_m, p_{m-1}) define the two return maps of
    the backing lift; x = (x_m, x_{m-1}) are their values at 0, with
    x_{m-1} the rescale factor. Normalized coordinates put xi(0) at 1 and
    eta(0) = x_m / x_{m-1} negative; the domains are [0, 1] for eta and
    [eta(0), 0] for xi. Consecutive returns land on opposite sides of the
    critical point but only same-side magnitudes must shrink, so |eta(0)|
    may transiently exceed 1 away from golden combinatorics. Treat
    instances as immutable.
    """

    lift: object
    level: int
    q: tuple
    p: tuple
    x: tuple
    _height_cache: object = field(default=None, repr=False)

    def __post_init__(self):
        q_hi, q_lo = self.q
        if q_hi < 1 or q_lo < 0 or q_hi < q_lo:
            raise ContractError(f"bad iterate counts {self.q}")
        x_hi, x_lo = self.x
        if x_lo == 0 or x_hi == 0:
            raise ContractError("degenerate pair: a return value vanished")
        if (x_hi > 0) == (x_lo > 0):
            raise ContractError("return values must straddle the critical point")

    @property
    def bits(self) -> int:
        return self.lift.bits

    @property
    def scale(self) -> mpfr:
        """Signed accumulated rescale factor (the previous closest return)."""
        return self.x[1]

    @property
    def xi0(self) -> mpfr:
        with working_precision(self.bits):
            return mpfr(1)

    @property
    def eta0(self) -> mpfr:
        with working_precision(self.bits):
            return self.x[0] / self.x[1]

    @property
    def domains(self) -> tuple:
        """((a, 0), (b, 0)) with a = xi(0) = 1 and b = eta(0) < 0."""
        return ((self.xi0, mpfr(0)), (self.eta0, mpfr(0)))

    # -- normalized evaluation; callers must hold working_precision(bits) --

    def _apply(self, w: mpfr, q: int, p: int) -> mpfr:
        raw = self.lift.raw
        for _ in range(q):
            w = raw(w)
        return w - p

    def eta_raw(self, t: mpfr) -> mpfr:
        s = self.x[1]
        return self._apply(s * t, self.q[0], self.p[0]) / s

    def xi_raw(self, t: mpfr) -> mpfr:
        s = self.x[1]
        return self._apply(s * t, self.q[1], self.p[1]) / s

    def eta(self, t) -> mpfr:
        with working_precision(self.bits):
            return self.eta_raw(mpfr(t))

    def xi(self, t) -> mpfr:
        with working_precision(self.bits):
            return self.xi_raw(mpfr(t))

    def xi_pulled_raw(self, t: mpfr) -> mpfr:
        """xi conjugated onto [0, 1] by the pair's own rescale h(z) = z / eta(0)."""
        b = self.x[0] / self.x[1]
        return self.xi_raw(b * t) / b

    def commutation_residual(self, samples: int = 9) -> mpfr:
        """max |eta(xi(t)) - xi(eta(t))| near 0; rounding noise only (canary)."""
        with working_precision(self.bits):
            b = self.x[0] / self.x[1]
            worst = mpfr(0)
            for i in range(samples):
                t = b + i * (abs(b) - b) / (samples - 1) if samples > 1 else mpfr(0)
                s = self.x[1]
                w = s * t
                one = (self._apply(self._apply(w, self.q[1], self.p[1]), self.q[0], self.p[0])) / s
                other = (self._apply(self._apply(w, self.q[0], self.p[0]), self.q[1], self.p[1])) / s
                worst = max(worst, abs(one - other))
            return worst

    def exponent_estimate(self, k_lo: int = 12, k_hi: int = 20) -> mpfr:
        """Log-log slope of eta(t) - eta(0) on t = 2^-k; recovers the critical exponent."""
        with working_precision(self.bits):
            e0 = self.eta_raw(mpfr(0))
            xs, ys = [], []
            for k in range(k_lo, k_hi + 1):
                t = mpfr(2) ** -k
                d = abs(self.eta_raw(t) - e0)
                if d == 0:
                    continue
                xs.append(gmpy2.log(t))
                ys.append(gmpy2.log(d))
            slope, _, _, _ = least_squares_line(xs, ys)
            return slope


def _height_scan(pair: CommutingPair, r_max: int) -> tuple:
    """(r, last_same_side_value) with r = INF for stalls/budget; orbit-honest."""
    q_hi, p_hi = pair.q[0], pair.p[0]
    with working_precision(pair.bits):
        tol = quad_tol(pair.bits)
        z = pair.x[1]
        side = z > 0
        evals = 0
        r = 0
        while r <= r_max:
            w = z
            raw = pair.lift.raw
            for _ in range(q_hi):
                w = raw(w)
            w -= p_hi
            evals += q_hi
            noise = evals * tol
            if abs(w) <= 10 * noise:
                raise DegenerateError(
                    f"orbit of xi(0) hit the critical point after {r + 1} eta-steps"
                )
            if (w > 0) != side:
                return r, z
            if abs(w - z) <= 16 * noise:
                return INF, z
            z = w
            r += 1
        return INF, z


def height(pair: CommutingPair, r_max: int = DEFAULT_HEIGHT_BUDGET) -> Height:
    """The unique r with 0 between eta^r(xi(0)) and eta^{r+1}(xi(0)).

    Infinite when the orbit never crosses within the budget (rational
    rotation number fully unwound, or budget exhausted). Exact landing on 0
    raises DegenerateError, since such a pair is not renormalizable.
    """
    if r_max < 1:
        raise DomainError(f"r_max must be >= 1, got {r_max}")
    if pair._height_cache is None:
        pair._height_cache = _height_scan(pair, r_max)[0]
    return Height(pair._height_cache)


def renormalize(pair: CommutingPair, r_max: int = DEFAULT_HEIGHT_BUDGET,
                eval_budget: int = DEFAULT_EVAL_BUDGET) -> CommutingPair:
    """One renormalization step: (eta, xi) -> (eta^r o xi, eta), rescaled.

    Pure bookkeeping on iterate data: q' = r q_m + q_{m-1} (the CF
    recurrence), p' likewise, and the new rescale factor is the current x_m.
    The height r comes from the orbit scan, never from a precomputed CF.
    """
    r, last = _height_scan(pair, r_max)
    pair._height_cache = r
    if r == INF:
        raise NotRenormalizableError(
            f"pair at level {pair.level} has infinite height (rotation number exhausted)"
        )
    if r == 0:
        raise ContractError("height 0: pair does not come from closest returns")
    q_new = r * pair.q[0] + pair.q[1]
    if q_new > eval_budget:
        raise BudgetError(f"iterate count {q_new} exceeds budget {eval_budget}")
    return CommutingPair(
        lift=pair.lift,
        level=pair.level + 1,
        q=(q_new, pair.q[0]),
        p=(r * pair.p[0] + pair.p[1], pair.p[0]),
        x=(last, pair.x[0]),
    )


def pair_from_map(map_, m: int, eval_budget: int = DEFAULT_EVAL_BUDGET) -> CommutingPair:
    """Level-m pair of a circle map from its closest-return data.

    Needs the CF of the rotation number resolvable past entry m; a rational
    that unwinds earlier raises CombinatoricsError. Independent of
    renormalize, which this must reproduce up to rescale.
    """
    if m < 0:
        raise DomainError(f"level must be >= 0, got {m}")
    unf = _unfold(map_, m, eval_budget=eval_budget)
    records = unf.records
    if len(records) < m + 2 or (unf.hit_level is not None and unf.hit_level <= m):
        raise CombinatoricsError(
            f"rotation number is rational and unwinds before level {m}"
        )
    lo = records[m]
    hi = records[m + 1]
    if hi.q > eval_budget:
        raise BudgetError(f"iterate count {hi.q} exceeds budget {eval_budget}")
    return CommutingPair(lift=map_, level=m, q=(hi.q, lo.q), p=(hi.p, lo.p), x=(hi.y, lo.y))


def pair_distance(a: CommutingPair, b: CommutingPair, grid: int = DEFAULT_GRID,
                  eval_budget: int = DEFAULT_EVAL_BUDGET) -> PairDistance:
    """C0 distance of two normalized pairs on a shared grid over [0, 1].

    max |eta_a - eta_b| plus max |xi_a - xi_b| with each xi pulled onto
    [0, 1] by its own pair's rescale. Symmetric, zero on identical pairs.
    """
    if grid < 2:
        raise DomainError(f"grid must have >= 2 points, got {grid}")
    for pair in (a, b):
        e0 = pair.eta0
        if not -1 < e0 < 0:
            raise ContractError(f"pair at level {pair.level} is not normalized: eta(0) = {e0}")
    total_iterates = grid * (sum(a.q) + sum(b.q))
    if total_iterates > eval_budget:
        raise BudgetError(f"distance call needs {total_iterates} evaluations, budget {eval_budget}")
    bits = max(a.bits, b.bits)
    with working_precision(bits):
        worst_eta = mpfr(0)
        worst_xi = mpfr(0)
        for i in range(grid):
            t = mpfr(i) / (grid - 1)
            worst_eta = max(worst_eta, abs(a.eta_raw(t) - b.eta_raw(t)))
            worst_xi = max(worst_xi, abs(a.xi_pulled_raw(t) - b.xi_pulled_raw(t)))
        return PairDistance(worst_eta + worst_xi, grid)


def renorm_tower(map_, depth: int, r_max: int = DEFAULT_HEIGHT_BUDGET,
                 eval_budget: int = DEFAULT_EVAL_BUDGET) -> list:
    """[pair_0, R pair_0, ..., R^depth pair_0] by repeated renormalization.

    Heights, eta(0) and commutation residuals are readable per level from the
    returned pairs. On precision exhaustion the error carries the pairs
    certified so far.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    pairs = [pair_from_map(map_, 0, eval_budget=eval_budget)]
    for _ in range(depth):
        try:
            pairs.append(renormalize(pairs[-1], r_max=r_max, eval_budget=eval_budget))
        except PrecisionError as exc:
            raise PrecisionError(
                f"tower certified to level {len(pairs) - 1}: {exc}",
                certified_depth=len(pairs) - 1,
                partial=pairs,
            ) from exc
    return pairs
