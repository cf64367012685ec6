"""Rotation numbers, continued fractions, and parameter solvers.

The rotation number of a lift is computed by unfolding the closest-return
structure of the orbit of 0: the return times q_n and translations p_n obey
the continued-fraction recurrence, and each CF entry r_n is read off as the
number of same-side steps of the level-n return map. This certifies entries
directly (|rho - p_n/q_n| < 1/q_n^2 for every certified n) where orbit
averaging would crawl near mode locking.

Rational rotation numbers are detected two ways: an exact hit of the orbit on
the critical point (superstable; not an error) or a one-sided stall of the
return orbit (mode-locked plateau interior), both terminating the CF with the
infinity marker. Terminated CFs are canonicalized so the last finite entry
exceeds 1 (the sole representation [1, inf] of 1/1 stays as is).

Parameter solvers exploit monotonicity of theta -> F_theta^q(0): superstable
parameters by bracketing on [0, 1], and mode-locking plateau edges as
tangency parameters, where min_x (or max_x) of F_theta^q(x) - x - p crosses
zero. Both extrema are strictly increasing in theta, so each edge is one
monotone root solve; this also handles zero-width plateaus (rigid rotations)
with no special casing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
from gmpy2 import mpfr

from .errors import (
    BudgetError,
    DomainError,
    PrecisionError,
    RangeError,
    SolverError,
)
from .precision import quad_tol, real, working_precision
from .solvers import solve_increasing

__all__ = [
    "INF",
    "ContinuedFraction",
    "RotationNumber",
    "SuperstableParameter",
    "ParameterWindow",
    "rotation_number",
    "convergents",
    "superstable_parameter",
    "cf_window",
    "irrational_parameter",
    "closest_returns",
]

# Terminator entry for rational rotation numbers.
INF = math.inf

DEFAULT_EVAL_BUDGET = 10**7


def _canonical_terminated(entries: list) -> tuple:
    """Fold [..., r, 1, inf] -> [..., r+1, inf] so the last finite entry is > 1."""
    assert entries and entries[-1] == INF
    finite = [int(e) for e in entries[:-1]]
    while len(finite) >= 2 and finite[-1] == 1:
        finite = finite[:-2] + [finite[-2] + 1]
    return tuple(finite) + (INF,)


@dataclass(frozen=True)
class ContinuedFraction:
    """Entries r_i >= 1 with an optional trailing infinity marker.

    Convergents follow p_n = r_{n-1} p_{n-1} + p_{n-2} (same for q) with
    seeds (p_-1, q_-1) = (1, 0) and (p_0, q_0) = (0, 1), so the n-th
    convergent consumes the first n entries.
    """

    entries: tuple

    def __post_init__(self):
        for i, e in enumerate(self.entries):
            if e == INF:
                if i != len(self.entries) - 1:
                    raise DomainError("infinity marker allowed only as the last entry")
            elif not isinstance(e, int) or e < 1:
                raise DomainError(f"CF entries must be integers >= 1, got {e!r}")

    @property
    def is_terminated(self) -> bool:
        return bool(self.entries) and self.entries[-1] == INF

    @property
    def finite(self) -> tuple:
        if self.is_terminated:
            return self.entries[:-1]
        return self.entries

    def convergent(self, n: int) -> tuple:
        """(p_n, q_n), coprime; n may run from 0 to the number of finite entries."""
        finite = self.finite
        if n < 0 or n > len(finite):
            raise RangeError(f"convergent {n} needs {n} entries, have {len(finite)}")
        p_prev, q_prev = 1, 0
        p, q = 0, 1
        for r in finite[:n]:
            p_prev, p = p, r * p + p_prev
            q_prev, q = q, r * q + q_prev
        return p, q

    def value(self) -> Fraction | None:
        """Exact value for a terminated CF, else None."""
        if not self.is_terminated:
            return None
        p, q = self.convergent(len(self.finite))
        return Fraction(p, q)

    @staticmethod
    def from_rational(value) -> "ContinuedFraction":
        """Canonical terminated CF of a rational in [0, 1]."""
        fr = Fraction(value)
        if not 0 <= fr <= 1:
            raise DomainError(f"rational rotation number must lie in [0, 1], got {fr}")
        if fr == 0:
            return ContinuedFraction((INF,))
        entries = []
        x = fr
        while x:
            r = x.denominator // x.numerator
            entries.append(r)
            x = Fraction(x.denominator - r * x.numerator, x.numerator)
        return ContinuedFraction(_canonical_terminated(entries + [INF]))

    @staticmethod
    def periodic(period: Sequence[int], repeats: int) -> "ContinuedFraction":
        if not period or any((not isinstance(r, int)) or r < 1 for r in period):
            raise DomainError(f"period must be nonempty integers >= 1, got {period!r}")
        return ContinuedFraction(tuple(period) * repeats)


def convergents(cf: ContinuedFraction, n: int) -> tuple:
    """The irreducible convergent (p_n, q_n) of the first n entries."""
    return cf.convergent(n)


@dataclass(frozen=True)
class RotationNumber:
    """Rotation number of the projected circle map, in [0, 1).

    certified_depth counts CF entries guaranteed correct; exact is the
    rational value when the CF terminated, else None.
    """

    value: mpfr
    cf: ContinuedFraction
    certified_depth: int
    exact: Fraction | None = None


@dataclass(frozen=True)
class SuperstableParameter:
    target: Fraction
    theta: mpfr
    residual: mpfr


@dataclass(frozen=True)
class ParameterWindow:
    """Closed parameter interval whose rotation numbers share a CF prefix.

    lo < hi except in fully degenerate cases (a zero-width plateau of the
    rigid-rotation family requested via a terminated prefix).
    """

    lo: mpfr
    hi: mpfr
    combinatorics: tuple

    @property
    def width(self) -> mpfr:
        return self.hi - self.lo

    def __contains__(self, theta) -> bool:
        return self.lo <= theta <= self.hi


# -- closest-return engine ------------------------------------------------------


@dataclass(frozen=True)
class ReturnRecord:
    """Closest return at one CF level: y = F^q(0) - p, sides alternating."""

    level: int
    q: int
    p: int
    y: mpfr


class _Unfolding:
    """Raw CF entries and closest-return records of one lift's critical orbit."""

    def __init__(self, entries, records, exact, certified, evals, hit_level=None):
        self.entries = entries        # raw entries, possibly ending with INF
        self.records = records        # ReturnRecord list, levels -1, 0, 1, ...
        self.exact = exact            # Fraction when rational, else None
        self.certified = certified    # number of certified finite entries
        self.evals = evals
        self.hit_level = hit_level    # level whose return landed exactly on 0


def _unfold(lift, max_entries: int, eval_budget: int = DEFAULT_EVAL_BUDGET) -> _Unfolding:
    """Extract CF entries by counting same-side steps of successive return maps.

    Caller receives raw (unfolded) entries; canonicalization for rationals is
    cosmetic and applied by rotation_number only. Raises PrecisionError when a
    side decision falls below the accumulated noise floor and BudgetError when
    the lift-evaluation budget runs out.
    """
    bits = lift.bits
    with working_precision(bits):
        tol = quad_tol(bits)
        f0 = lift.raw(mpfr(0))
        evals = 1
        k0 = int(gmpy2.floor(f0))
        y0 = f0 - k0
        records = [ReturnRecord(-1, 0, 1, mpfr(-1)), ReturnRecord(0, 1, k0, y0)]
        entries: list = []
        if abs(y0) <= 10 * tol:
            return _Unfolding([INF], records, Fraction(0), 0, evals, hit_level=0)
        prev, cur = records[0], records[1]
        while len(entries) < max_entries:
            side = 1 if prev.y > 0 else -1
            z = prev.y
            r = 0
            while True:
                if evals + cur.q > eval_budget:
                    raise BudgetError(
                        f"evaluation budget {eval_budget} exhausted at CF depth {len(entries)}"
                    )
                w = z
                for _ in range(cur.q):
                    w = lift.raw(w)
                w -= cur.p
                evals += cur.q
                noise = evals * tol
                if abs(w) <= 10 * noise:
                    # orbit hit the critical point: superstable rational
                    hit_q = (r + 1) * cur.q + prev.q
                    hit_p = (r + 1) * cur.p + prev.p
                    entries.append(r + 1)
                    entries.append(INF)
                    records.append(ReturnRecord(cur.level + 1, hit_q, hit_p, w))
                    return _Unfolding(
                        entries, records, Fraction(hit_p - hit_q * k0, hit_q),
                        len(entries) - 1, evals, hit_level=cur.level + 1,
                    )
                if abs(w) <= 64 * noise:
                    raise PrecisionError(
                        f"return separation below noise floor at CF depth {len(entries)}",
                        certified_depth=len(entries),
                    )
                if (w > 0) != (side > 0):
                    break
                if abs(w - z) <= 16 * noise:
                    # one-sided stall: mode-locked plateau interior
                    entries.append(INF)
                    return _Unfolding(
                        entries, records, Fraction(cur.p - cur.q * k0, cur.q),
                        len(entries) - 1, evals,
                    )
                z = w
                r += 1
            if r == 0:
                raise PrecisionError(
                    f"closest-return combinatorics broke down at CF depth {len(entries)}",
                    certified_depth=len(entries),
                )
            entries.append(r)
            nxt = ReturnRecord(cur.level + 1, r * cur.q + prev.q, r * cur.p + prev.p, z)
            records.append(nxt)
            prev, cur = cur, nxt
        return _Unfolding(entries, records, None, len(entries), evals)


def closest_returns(map_, depth: int) -> list:
    """Closest-return records (level, q_n, p_n, y_n) for levels -1..depth.

    y_n = F^{q_n}(0) - p_n alternates in sign and shrinks; q_n are exactly the
    closest-return times of the critical orbit. The list is shorter than
    requested when the rotation number is rational and unwinds first.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    unf = _unfold(map_, depth)
    return unf.records[: depth + 2]


def rotation_number(map_, depth: int) -> RotationNumber:
    """Rotation number with depth certified CF entries (fewer when rational).

    The value is the deepest certified convergent, accurate to 1/q_depth^2;
    for rational outcomes the exact fraction is attached and the CF carries
    the terminating infinity marker in canonical form.
    """
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    unf = _unfold(map_, depth)
    with working_precision(map_.bits):
        if unf.exact is not None:
            cf = ContinuedFraction(_canonical_terminated(unf.entries))
            return RotationNumber(real(unf.exact), cf, len(cf.finite), unf.exact)
        cf = ContinuedFraction(tuple(unf.entries))
        last = unf.records[-1]
        k0 = unf.records[1].p
        value = real(Fraction(last.p - last.q * k0, last.q))
        return RotationNumber(value, cf, len(unf.entries), None)


# -- parameter solvers ----------------------------------------------------------


def _as_target(target) -> Fraction:
    if isinstance(target, tuple):
        p, q = target
        if math.gcd(p, q) != 1:
            raise DomainError(f"target must be in lowest terms, got {p}/{q}")
        target = Fraction(p, q)
    fr = Fraction(target)
    if not 0 <= fr <= 1:
        raise DomainError(f"target rotation number must lie in [0, 1], got {fr}")
    return fr


def superstable_parameter(family, target, tol=None) -> SuperstableParameter:
    """theta with F_theta^q(0) = p, by bracketing the increasing map theta -> F^q(0) - p.

    The bracket [0, 1] always straddles: F_0 fixes 0 and F_1 advances one per
    step. The residual is reported and checked against tol; the default
    2^-(bits//2) is widened for large q, where d(F^q(0))/d theta grows
    geometrically and a theta resolved to the solver's x-tolerance cannot
    pin the residual tighter than that amplification allows.
    """
    fr = _as_target(target)
    p, q = fr.numerator, fr.denominator
    bits = family.bits
    with working_precision(bits):
        if tol is None:
            tol = max(mpfr(2) ** -(bits // 2), 10**4 * mpfr(q) ** 2 * mpfr(2) ** (8 - bits))
        else:
            tol = real(tol)
        x_tol = mpfr(2) ** -(bits - 8)

        def phi(theta: mpfr) -> mpfr:
            y = mpfr(0)
            lift = family.lift(theta)
            for _ in range(q):
                y = lift.raw(y)
            return y - p

        theta = solve_increasing(phi, mpfr(0), mpfr(1), x_tol)
        residual = abs(phi(theta))
        if residual > tol:
            raise SolverError(
                f"superstable residual {residual} exceeds tolerance {tol} for target {fr}"
            )
        return SuperstableParameter(fr, theta, residual)


def _golden_section_min(f, a: mpfr, b: mpfr, x_tol: mpfr, max_iter: int = 200) -> mpfr:
    """Minimum value of a unimodal-enough f on [a, b] by golden-section search."""
    invphi = (gmpy2.sqrt(mpfr(5)) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > x_tol and it < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        it += 1
    return min(f1, f2)


def _return_extremum(family, theta: mpfr, p: int, q: int, want_max: bool, x_tol: mpfr) -> mpfr:
    """Extremum over x of F_theta^q(x) - x - p (periodic in x, so [0,1) suffices)."""
    lift = family.lift(theta)

    def displacement(x: mpfr) -> mpfr:
        y = x
        for _ in range(q):
            y = lift.raw(y)
        return y - x - p

    sign = mpfr(-1) if want_max else mpfr(1)
    n_grid = max(32, 4 * q)
    h = mpfr(1) / n_grid
    best_i = 0
    best = sign * displacement(mpfr(0))
    for i in range(1, n_grid):
        v = sign * displacement(i * h)
        if v < best:
            best, best_i = v, i
    lo = (best_i - 1) * h
    hi = (best_i + 1) * h
    refined = _golden_section_min(lambda x: sign * displacement(x), lo, hi, x_tol)
    return sign * min(best, refined)


def _plateau_edge(family, fr: Fraction, upper: bool, tol: mpfr) -> mpfr:
    """Mode-locking boundary of p/q: tangency of the return displacement.

    The upper edge solves min_x[F^q(x) - x - p] = 0, the lower edge
    max_x[...] = 0; both extrema increase strictly in theta. Bracketing walks
    outward from the superstable parameter, doubling the step.
    """
    p, q = fr.numerator, fr.denominator
    bits = family.bits
    with working_precision(bits):
        v_tol = tol / 16
        x_tol = gmpy2.sqrt(v_tol) / q

        def edge_fn(theta: mpfr) -> mpfr:
            return _return_extremum(family, theta, p, q, want_max=not upper, x_tol=x_tol)

        center = superstable_parameter(family, fr).theta
        v0 = edge_fn(center)
        inside = v0 <= 0 if upper else v0 >= 0
        if not inside:
            # zero-width plateau: the superstable point is the edge, up to
            # extremum-solver noise; anything larger is a genuine failure
            if abs(v0) <= v_tol:
                return center
            raise SolverError(
                f"superstable parameter of {fr} sits outside its plateau: residual {v0}"
            )
        step = mpfr(1) / q**3
        inner = center
        sgn = 1 if upper else -1
        for _ in range(200):
            outer = center + sgn * step
            val = edge_fn(outer)
            outside = val > 0 if upper else val < 0
            if outside:
                break
            inner = outer
            step *= 2
        else:
            raise SolverError(f"could not bracket the {'upper' if upper else 'lower'} edge of {fr}")
        if upper:
            return solve_increasing(edge_fn, inner, outer, tol)
        return solve_increasing(edge_fn, outer, inner, tol)


def _window_tol(family, tol) -> mpfr:
    if tol is not None:
        return real(tol)
    return mpfr(2) ** -(family.bits // 2 + 8)


def cf_window(family, prefix, tol=None) -> ParameterWindow:
    """Closed parameter window whose rotation numbers continue the CF prefix.

    For a finite prefix of n entries the window spans every theta whose
    rotation number lies in the closed CF cylinder, whose boundary rationals
    are p_n/q_n and the mediant (p_n + p_{n-1})/(q_n + q_{n-1}); the window
    runs from the lower edge of the smaller boundary plateau to the upper
    edge of the larger one. A prefix ending with the infinity marker denotes
    a rational and yields its full mode-locking plateau.
    """
    entries = tuple(prefix.entries if isinstance(prefix, ContinuedFraction) else prefix)
    if not entries:
        raise DomainError("prefix must be nonempty")
    cf = ContinuedFraction(entries)
    bits = family.bits
    with working_precision(bits):
        tol = _window_tol(family, tol)
        if cf.is_terminated:
            fr = cf.value()
            lo = _plateau_edge(family, fr, upper=False, tol=tol)
            hi = _plateau_edge(family, fr, upper=True, tol=tol)
            return ParameterWindow(lo, hi, entries)
        n = len(entries)
        p_n, q_n = cf.convergent(n)
        p_prev, q_prev = cf.convergent(n - 1)
        ends = sorted([Fraction(p_n, q_n), Fraction(p_n + p_prev, q_n + q_prev)])
        lo = _plateau_edge(family, ends[0], upper=False, tol=tol)
        hi = _plateau_edge(family, ends[1], upper=True, tol=tol)
        return ParameterWindow(lo, hi, entries)


def irrational_parameter(family, rho, depth: int, tol=None) -> mpfr:
    """A parameter whose rotation number matches the given CF to `depth` entries.

    Uses the superstable parameter of the rational [r_0, ..., r_{depth-1}, 2]:
    appending the entry 2 keeps the terminated CF canonical (no trailing-1
    fold can disturb the matched prefix), and the resulting theta sits inside
    every requested cylinder. Far cheaper than locating window midpoints, with
    the same contract.
    """
    cf = rho if isinstance(rho, ContinuedFraction) else ContinuedFraction(tuple(rho))
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    if len(cf.finite) < depth:
        raise RangeError(f"need {depth} CF entries, have {len(cf.finite)}")
    target_cf = ContinuedFraction(cf.finite[:depth] + (2,))
    p, q = target_cf.convergent(depth + 1)
    return superstable_parameter(family, Fraction(p, q), tol).theta
