"""Analytic circle-map families with one critical point of exponent alpha.

The family is defined through the density of its lift:

    G'(x) = c(alpha, eps) * |2 sin(pi x)|^(alpha-1) * (1 + eps cos(2 pi x)),
    G(0) = 0,  c chosen so that the lift has degree 1.

alpha > 1 is the critical exponent at x = 0 (mod 1); eps in (-1, 1) is a shape
parameter giving a second, distinct family member with the same exponent. At
alpha = 3, eps = 0 the construction collapses to the classical lift
x - sin(2 pi x) / (2 pi).

Evaluation scheme. Writing t = x^2, the density factors as an exact power of
|x| times a function analytic on |t| < 1:

    G'(x) = c (2 pi)^(alpha-1) |x|^(alpha-1) * exp((alpha-1) L(t)) * (1 + eps C(t))

with L(t) = log(sin(pi x)/(pi x)) = -sum_{k>=1} zeta(2k) t^k / k and C(t) the
even cosine series. Integrating term by term gives

    G(x) = sign(x) |x|^alpha * R(t),   R(t) = sum_k r_k t^k,

valid on [-1/2, 1/2]; the symmetry G(1 - x) = 1 - G(x) covers the rest of the
period and G(x + 1) = G(x) + 1 extends to the line. Since t <= 1/4, the series
terms decay like 4^(-k) and a table of bits/2 + 24 coefficients evaluates G to
last-ulp accuracy everywhere, uniformly through the critical point.

Normalization in closed form: int_0^1 |2 sin(pi t)|^beta dt
= Gamma(beta+1) / Gamma(beta/2+1)^2, applied at beta = alpha -+ 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError
from .precision import GUARD_BITS, quad_tol, real, require_bits, working_precision

__all__ = [
    "CriticalCircleFamily",
    "CircleMapLift",
    "RigidRotationFamily",
    "RigidRotationLift",
    "build_family",
    "eval_lift",
    "eval_iterate",
    "eval_derivative",
]


def _sine_power_integral(beta: mpfr) -> mpfr:
    """int_0^1 |2 sin(pi t)|^beta dt for beta > -1."""
    return gmpy2.gamma(beta + 1) / gmpy2.gamma(beta / 2 + 1) ** 2


def _antiderivative_series(alpha: mpfr, epsilon: mpfr, nterms: int) -> tuple:
    """Coefficients r_k of R(t) with G(x) = sign(x)|x|^alpha R(x^2) on [-1/2, 1/2].

    Runs under guard precision; the caller rounds the table down to the
    target precision.
    """
    pi = gmpy2.const_pi()
    one = mpfr(1)
    # L(t) = -sum_{k>=1} zeta(2k)/k t^k
    logsinc = [mpfr(0)] + [-gmpy2.zeta(mpfr(2 * k)) / k for k in range(1, nterms)]
    # u = exp((alpha-1) L) via the derivative recurrence n u_n = sum k a L_k u_{n-k}
    a = alpha - 1
    u = [one] + [mpfr(0)] * (nterms - 1)
    for n in range(1, nterms):
        acc = mpfr(0)
        for k in range(1, n + 1):
            acc += k * a * logsinc[k] * u[n - k]
        u[n] = acc / n
    # cos(2 pi x) = sum_k (-1)^k (2 pi)^(2k) t^k / (2k)!
    cos_c = []
    p = one
    fact = one
    four_pi_sq = (2 * pi) ** 2
    for k in range(nterms):
        if k > 0:
            p *= four_pi_sq
            fact *= (2 * k - 1) * (2 * k)
        cos_c.append(((-1) ** k) * p / fact)
    # w = u * (1 + eps * cos-series)
    w = []
    for n in range(nterms):
        acc = u[n]
        for k in range(n + 1):
            acc += epsilon * cos_c[k] * u[n - k]
        w.append(acc)
    c = one / ((1 + epsilon) * _sine_power_integral(alpha - 1)
               - (epsilon / 2) * _sine_power_integral(alpha + 1))
    lead = c * (2 * pi) ** (alpha - 1)
    return c, tuple(lead * w[k] / (alpha + 2 * k) for k in range(nterms))


@dataclass(frozen=True)
class CriticalCircleFamily:
    """Two-parameter family of degree-1 circle-map lifts F_theta = theta + G.

    alpha: critical exponent (> 1) of the single critical point per period.
    epsilon: shape parameter in (-1, 1); zeros of G' stay exactly on the integers.
    c_norm: density normalization making the lift degree 1.
    antiderivative_table: series coefficients of R in G(x) = sign(x)|x|^alpha R(x^2).
    bits: working mantissa size; all evaluations run under it.
    tol: base evaluation tolerance 2^(20 - bits).
    """

    alpha: mpfr
    epsilon: mpfr
    c_norm: mpfr
    antiderivative_table: tuple
    bits: int
    tol: mpfr
    _pi: mpfr = field(repr=False, default=None)

    def lift(self, theta) -> "CircleMapLift":
        with working_precision(self.bits):
            return CircleMapLift(self, real(theta))

    # -- evaluation kernels; callers must hold working_precision(self.bits) --

    def _unit_half(self, u: mpfr) -> mpfr:
        """G(u) for u in [0, 1/2] via the series."""
        t = u * u
        acc = mpfr(0)
        for ck in reversed(self.antiderivative_table):
            acc = acc * t + ck
        return u ** self.alpha * acc

    def increment_raw(self, x: mpfr) -> mpfr:
        """G(x) for any real x: G(x+1) = G(x) + 1, G(1-u) = 1 - G(u)."""
        k = gmpy2.floor(x)
        u = x - k
        if u <= mpfr("0.5"):
            return k + self._unit_half(u)
        return k + 1 - self._unit_half(1 - u)

    def derivative_raw(self, x: mpfr) -> mpfr:
        """G'(x) in closed form, independent of the series table."""
        s = abs(2 * gmpy2.sin(self._pi * x))
        return self.c_norm * s ** (self.alpha - 1) * (1 + self.epsilon * gmpy2.cos(2 * self._pi * x))


@dataclass(frozen=True)
class CircleMapLift:
    """Lift F_theta(x) = theta + G(x) of one family member."""

    family: CriticalCircleFamily
    theta: mpfr

    @property
    def bits(self) -> int:
        return self.family.bits

    def raw(self, x: mpfr) -> mpfr:
        """One lift step; caller must hold working_precision(family.bits)."""
        return self.theta + self.family.increment_raw(x)

    def __call__(self, x) -> mpfr:
        with working_precision(self.family.bits):
            return self.raw(real(x))

    def iterate(self, x, n: int) -> mpfr:
        if n < 0:
            raise DomainError(f"iterate count must be >= 0, got {n}")
        with working_precision(self.family.bits):
            y = real(x)
            for _ in range(n):
                y = self.raw(y)
            return y

    def derivative(self, x) -> mpfr:
        with working_precision(self.family.bits):
            return self.family.derivative_raw(real(x))


def build_family(alpha, epsilon, precision: int = 128) -> CriticalCircleFamily:
    """Construct a family; the table is built with guard bits then rounded.

    alpha must exceed 1 (otherwise the density is not integrably normalizable
    with a critical point) and |epsilon| must stay below 1 (otherwise the
    density turns negative and the lift stops being monotone).
    """
    bits = require_bits(precision)
    with working_precision(bits + GUARD_BITS):
        a = real(alpha)
        e = real(epsilon)
        if a <= 1:
            raise DomainError("exponent must exceed 1")
        if abs(e) >= 1:
            raise DomainError("shape parameter breaks monotonicity")
        nterms = bits // 2 + 24
        c, table = _antiderivative_series(a, e, nterms)
    with working_precision(bits):
        return CriticalCircleFamily(
            alpha=+a,
            epsilon=+e,
            c_norm=+c,
            antiderivative_table=tuple(+ck for ck in table),
            bits=bits,
            tol=quad_tol(bits),
            _pi=gmpy2.const_pi(),
        )


# -- operation layer -----------------------------------------------------------


def eval_lift(map_: CircleMapLift, x) -> mpfr:
    """F_theta(x) = theta + G(x); total on the real line."""
    return map_(x)


def eval_iterate(map_: CircleMapLift, x, n: int) -> mpfr:
    """n-fold composition of the lift.

    Per-step rounding is at most the family tolerance; the accumulated error
    grows at most linearly in n times the orbit's derivative products, so
    deep iterates should be read with ~n * tol headroom.
    """
    return map_.iterate(x, n)


def eval_derivative(map_: CircleMapLift, x) -> mpfr:
    """F'_theta(x) = G'(x) >= 0, vanishing exactly on the integers."""
    return map_.derivative(x)


# -- rigid-rotation test double -------------------------------------------------


@dataclass(frozen=True)
class RigidRotationLift:
    """Lift x + theta; the degenerate (critical-point-free) reference map."""

    theta: mpfr
    bits: int

    @property
    def family(self) -> "RigidRotationFamily":
        return RigidRotationFamily(self.bits)

    def raw(self, x: mpfr) -> mpfr:
        return x + self.theta

    def __call__(self, x) -> mpfr:
        with working_precision(self.bits):
            return real(x) + self.theta

    def iterate(self, x, n: int) -> mpfr:
        if n < 0:
            raise DomainError(f"iterate count must be >= 0, got {n}")
        with working_precision(self.bits):
            return real(x) + n * self.theta

    def derivative(self, x) -> mpfr:
        with working_precision(self.bits):
            return mpfr(1)


@dataclass(frozen=True)
class RigidRotationFamily:
    """Family of rigid rotations; duck-types CriticalCircleFamily for solvers.

    Closed-form everything: rho(theta) = theta, zero-width mode-locking
    plateaus, three-distance partition geometry. Used as the sanity reference
    in experiments and tests.
    """

    bits: int = 128

    @property
    def tol(self) -> mpfr:
        return quad_tol(self.bits)

    def lift(self, theta) -> RigidRotationLift:
        with working_precision(self.bits):
            return RigidRotationLift(real(theta), self.bits)
