"""Least-squares line fits on mpfr sequences (log-linear rate estimation)."""

from __future__ import annotations

from gmpy2 import mpfr

from .errors import DomainError


def least_squares_line(xs, ys) -> tuple:
    """Fit y = slope*x + intercept; returns (slope, intercept, r_squared, residuals).

    r_squared is 1 for a perfect fit, and defined as 1 when the ys are
    constant (zero total variance).
    """
    n = len(xs)
    if n != len(ys) or n < 2:
        raise DomainError(f"need two or more paired points, got {len(xs)}/{len(ys)}")
    xs = [+x for x in xs]
    ys = [+y for y in ys]
    mean_x = sum(xs, mpfr(0)) / n
    mean_y = sum(ys, mpfr(0)) / n
    sxx = sum(((x - mean_x) ** 2 for x in xs), mpfr(0))
    sxy = sum(((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)), mpfr(0))
    if sxx == 0:
        raise DomainError("degenerate fit: all x values coincide")
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    residuals = [y - (slope * x + intercept) for x, y in zip(xs, ys)]
    ss_res = sum((r * r for r in residuals), mpfr(0))
    ss_tot = sum(((y - mean_y) ** 2 for y in ys), mpfr(0))
    r_squared = mpfr(1) if ss_tot == 0 else 1 - ss_res / ss_tot
    return slope, intercept, r_squared, residuals
