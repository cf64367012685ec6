"""Bracketing root solver for strictly increasing functions on mpfr.

scipy's solvers are float64-only and mpmath's carry their own context, so the
package brings its own: regula falsi with the Illinois modification, which
keeps a guaranteed bracket while converging superlinearly on smooth monotone
functions. Used for superstable parameters and mode-locking tangencies.
"""

from __future__ import annotations

from typing import Callable

from gmpy2 import mpfr

from .errors import SolverError


def solve_increasing(
    fn: Callable[[mpfr], mpfr],
    lo: mpfr,
    hi: mpfr,
    x_tol: mpfr,
    max_iter: int = 500,
) -> mpfr:
    """Root of an increasing function with fn(lo) <= 0 <= fn(hi).

    Returns the midpoint of the final bracket, whose width is below x_tol.
    """
    flo = fn(lo)
    fhi = fn(hi)
    if flo > 0 or fhi < 0:
        raise SolverError(f"bracket does not straddle a root: f({lo})={flo}, f({hi})={fhi}")
    if flo == 0:
        return +lo
    if fhi == 0:
        return +hi
    # Illinois state: which endpoint was replaced last.
    side = 0
    for _ in range(max_iter):
        if hi - lo <= x_tol:
            return (lo + hi) / 2
        denom = fhi - flo
        if denom <= 0:
            mid = (lo + hi) / 2
        else:
            mid = (lo * fhi - hi * flo) / denom
            # Keep the step inside the bracket; fall back to bisection when
            # the secant point crowds an endpoint (slow-side stagnation).
            span = hi - lo
            if not (lo + span / 64 < mid < hi - span / 64):
                mid = (lo + hi) / 2
        fmid = fn(mid)
        if fmid == 0:
            return mid
        if fmid < 0:
            lo, flo = mid, fmid
            if side == -1:
                fhi /= 2
            side = -1
        else:
            hi, fhi = mid, fmid
            if side == 1:
                flo /= 2
            side = 1
    raise SolverError(f"no convergence within {max_iter} iterations; bracket [{lo}, {hi}]")
