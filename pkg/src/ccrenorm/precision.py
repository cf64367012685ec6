"""Configurable-precision real arithmetic contract.

All kernels compute with gmpy2.mpfr under an explicitly managed precision.
The supported mantissa sizes are 53, 128 and 256 bits; a precision setting is
uniform within one computation run (each family records the bits it was built
with, and every operation on it runs under that setting). Arithmetic at a
fixed precision is deterministic: MPFR rounds correctly, so identical inputs
give identical bits.

quad_tol(bits) = 2^(20 - bits) is the base evaluation tolerance; downstream
tolerances are expressed as multiples of it.
"""

from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError

ALLOWED_BITS = (53, 128, 256)

# Extra mantissa bits used while building series coefficient tables, so the
# stored coefficients are correctly rounded at the target precision.
GUARD_BITS = 64


def require_bits(bits: int) -> int:
    if bits not in ALLOWED_BITS:
        raise DomainError(f"precision must be one of {ALLOWED_BITS}, got {bits!r}")
    return bits


@contextmanager
def working_precision(bits: int):
    """Run a block under the given mantissa size, restoring the old one after."""
    ctx = gmpy2.get_context()
    old = ctx.precision
    ctx.precision = bits
    try:
        yield
    finally:
        ctx.precision = old


def real(x) -> mpfr:
    """Convert to mpfr at the current working precision.

    Accepts mpfr, int, float, Fraction and decimal strings. Fractions are
    converted through an exact rational so the single rounding happens here.
    """
    if isinstance(x, mpfr):
        return +x
    if isinstance(x, Fraction):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    return mpfr(x)


def quad_tol(bits: int) -> mpfr:
    """Base evaluation tolerance at the given precision."""
    with working_precision(bits):
        return mpfr(2) ** (20 - bits)


def default_digits(bits: int) -> int:
    """Significant decimal digits used when rendering reports."""
    return bits // 4
