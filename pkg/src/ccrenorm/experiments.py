"""Experiment drivers: parameter-scaling universality, renormalization
convergence rate, closest-return self-similarity, and the hyperbolicity probe.

The scaling constant delta is estimated two independent ways and the two
estimators cross-check each other: primary from gaps between superstable
parameters at the block convergents of a periodic CF, secondary from the
widths of the CF-prefix parameter windows. Neither has an external
reference value; their mutual agreement is the internal oracle.

The convergence rate lambda_s comes from the sampled C0 distance between
the renormalization towers of two maps with the same rotation number.
delta > 1 together with lambda_s < 1 is the numerical signature of a
hyperbolic renormalization fixed point with one expanding direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .errors import CombinatoricsError, DomainError, PrecisionError
from .fitting import least_squares_line
from .maps import build_family
from .precision import working_precision
from .renorm import DEFAULT_EVAL_BUDGET, pair_distance, renorm_tower
from .rotation import (
    ContinuedFraction,
    cf_window,
    closest_returns,
    irrational_parameter,
    rotation_number,
    superstable_parameter,
)

# Depths matched to how many delta^-n gap levels each mantissa can resolve.
DEPTH_BY_BITS = {53: 8, 128: 14, 256: 20}

# Window widths are the expensive secondary estimator (each edge costs
# O(q_n * grid) map evaluations per solver step); they are recorded up to
# this level by default while gaps carry the full requested depth.
DEFAULT_WIDTH_DEPTH = 8

NOISE_MULTIPLIER = 1000


def default_depth(bits: int) -> int:
    try:
        return DEPTH_BY_BITS[bits]
    except KeyError:
        raise DomainError(f"no depth default for {bits} bits") from None


def _aitken(x0: mpfr, x1: mpfr, x2: mpfr) -> mpfr:
    denom = (x2 - x1) - (x1 - x0)
    if denom == 0:
        return x2
    return x2 - (x2 - x1) ** 2 / denom


@dataclass(frozen=True)
class UniversalityReport:
    """Superstable-gap and window-width scaling of one (family, CF-period) cell.

    thetas[k] is the superstable parameter at the block convergent of CF
    length (k+1)*period. gaps[k] = theta_{k+2} - theta_{k+1} is signed;
    delta_gap[k] = |gaps[k] / gaps[k+1]| is the level-(k+3) ratio estimate,
    so the last entry is the depth-level estimate. widths and delta_width
    mirror this for CF-prefix window widths. delta extrapolates the gap
    estimates (Aitken on the last three) and uncertainty is their max
    pairwise spread.
    """

    alpha: mpfr | None
    epsilon: mpfr | None
    period: tuple[int, ...]
    depth: int
    bits: int
    thetas: tuple[mpfr, ...]
    gaps: tuple[mpfr, ...]
    delta_gap: tuple[mpfr, ...]
    widths: tuple[mpfr, ...]
    delta_width: tuple[mpfr, ...]
    delta: mpfr
    uncertainty: mpfr
    certified_depth: int


def _gap_report(family, period, depth, bits, thetas, widths, certified) -> UniversalityReport:
    gaps = tuple(thetas[k + 1] - thetas[k] for k in range(len(thetas) - 1))
    delta_gap = tuple(abs(gaps[k] / gaps[k + 1]) for k in range(len(gaps) - 1))
    delta_width = tuple(widths[k] / widths[k + 1] for k in range(len(widths) - 1))
    if len(delta_gap) >= 3:
        tail = delta_gap[-3:]
        delta = _aitken(*tail)
        uncertainty = max(abs(a - b) for a in tail for b in tail)
    elif delta_gap:
        delta = delta_gap[-1]
        uncertainty = gmpy2.inf() if len(delta_gap) < 2 else abs(delta_gap[-1] - delta_gap[-2])
    else:
        delta = gmpy2.nan()
        uncertainty = gmpy2.inf()
    return UniversalityReport(
        alpha=getattr(family, "alpha", None),
        epsilon=getattr(family, "epsilon", None),
        period=tuple(period),
        depth=depth,
        bits=bits,
        thetas=tuple(thetas),
        gaps=gaps,
        delta_gap=delta_gap,
        widths=tuple(widths),
        delta_width=delta_width,
        delta=delta,
        uncertainty=uncertainty,
        certified_depth=certified,
    )


def estimate_delta(family, cf_period, depth: int,
                   width_depth: int = DEFAULT_WIDTH_DEPTH,
                   window_tol=None) -> UniversalityReport:
    """Scaling-rate report for the periodic CF built by repeating cf_period.

    Superstable parameters are located at the block convergents p_m/q_m,
    m = n * period, for n = 1..depth; gaps between consecutive ones give
    the primary ratio estimates. Window widths at the matching CF prefixes
    give the secondary estimates up to width_depth. Gaps that fall inside
    the solver noise floor end the scan with PrecisionError carrying the
    report certified so far.
    """
    period = tuple(int(r) for r in cf_period)
    if not period or any(r < 1 for r in period):
        raise DomainError(f"CF period must be nonempty positive entries, got {cf_period}")
    if depth < 4:
        raise DomainError(f"depth must be >= 4, got {depth}")
    bits = family.bits
    p = len(period)
    entries = period * (depth + 1)
    cf = ContinuedFraction(entries)
    with working_precision(bits):
        gap_floor = NOISE_MULTIPLIER * mpfr(2) ** (8 - bits)
        thetas = []
        for n in range(1, depth + 1):
            num, den = cf.convergent(n * p)
            thetas.append(superstable_parameter(family, Fraction(num, den)).theta)
            if n >= 2 and abs(thetas[-1] - thetas[-2]) <= gap_floor:
                partial = _gap_report(family, period, depth, bits,
                                      thetas[:-1], [], n - 1)
                raise PrecisionError(
                    f"superstable gap at level {n} is below the noise floor {gap_floor}",
                    certified_depth=n - 1,
                    partial=partial,
                )
        widths = []
        for n in range(1, min(depth, width_depth) + 1):
            widths.append(cf_window(family, entries[: n * p], tol=window_tol).width)
        return _gap_report(family, period, depth, bits, thetas, widths, depth)


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-level tower distances between two same-rotation-number maps.

    distances[n] is the sampled C0 pair distance at level n. The geometric
    fit runs over fit_levels (levels >= 2 above the noise floor); lambda_s
    = exp(slope) of the log-linear fit, None when fewer than two levels
    qualify (identical maps give all-zero distances).
    """

    levels: tuple[int, ...]
    distances: tuple[mpfr, ...]
    noise_floor: tuple[mpfr, ...]
    fit_levels: tuple[int, ...]
    lambda_s: mpfr | None
    r_squared: mpfr | None
    residuals: tuple[mpfr, ...]
    bits: int
    grid: int


def estimate_convergence(f, g, depth: int, grid: int = 256,
                         eval_budget: int = DEFAULT_EVAL_BUDGET) -> ConvergenceReport:
    """Distance decay between the renormalization towers of f and g.

    Both maps must certify the same CF prefix through depth + 2 entries.
    The first two levels are excluded from the fit (they carry the
    pre-asymptotic constant), as are levels whose distance sits inside the
    accumulated rounding floor.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    rho_f = rotation_number(f, depth + 2)
    rho_g = rotation_number(g, depth + 2)
    for rho, tag in ((rho_f, "first"), (rho_g, "second")):
        if rho.exact is not None or rho.certified_depth < depth + 2:
            raise CombinatoricsError(
                f"{tag} map does not certify {depth + 2} CF entries "
                f"(got {rho.certified_depth}, exact={rho.exact})"
            )
    if rho_f.cf.entries[: depth + 2] != rho_g.cf.entries[: depth + 2]:
        raise CombinatoricsError(
            f"CF prefixes differ: {rho_f.cf.entries[: depth + 2]} vs "
            f"{rho_g.cf.entries[: depth + 2]}"
        )
    bits = max(f.bits, g.bits)
    tol = max(f.family.tol, g.family.tol)
    tower_f = renorm_tower(f, depth, eval_budget=eval_budget)
    tower_g = renorm_tower(g, depth, eval_budget=eval_budget)
    with working_precision(bits):
        distances, floors = [], []
        for a, b in zip(tower_f, tower_g):
            distances.append(pair_distance(a, b, grid=grid, eval_budget=eval_budget).value)
            floors.append(NOISE_MULTIPLIER * tol * max(a.q[0], b.q[0]))
        kept = [n for n in range(2, depth + 1) if distances[n] > floors[n]]
        lam = r2 = None
        residuals = ()
        if len(kept) >= 2:
            xs = [mpfr(n) for n in kept]
            ys = [gmpy2.log(distances[n]) for n in kept]
            slope, _, r2, residuals = least_squares_line(xs, ys)
            lam = gmpy2.exp(slope)
        return ConvergenceReport(
            levels=tuple(range(depth + 1)),
            distances=tuple(distances),
            noise_floor=tuple(floors),
            fit_levels=tuple(kept),
            lambda_s=lam,
            r_squared=r2,
            residuals=tuple(residuals),
            bits=bits,
            grid=grid,
        )


def closest_return_scaling(map_, depth: int) -> list:
    """Signed ratios s_n = y_{n+1} / y_n of closest-return distances, n <= depth.

    y_n = F^{q_n}(0) - p_n alternates in sign, so every ratio is negative;
    |s_n| approaching a limit is the self-similarity signature of the
    critical orbit geometry.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    records = closest_returns(map_, depth + 1)
    if len(records) < depth + 3:
        raise CombinatoricsError(
            f"rotation number unwinds before level {depth + 1}; ratios undefined"
        )
    with working_precision(map_.bits):
        return [records[n + 2].y / records[n + 1].y for n in range(depth + 1)]


def hyperbolicity_probe(family, cf_period, depth: int):
    """(delta, lambda_s) for one family cell; passes when delta > 1 > lambda_s.

    delta comes from estimate_delta on the given family. lambda_s compares
    the towers of the epsilon = 0 and epsilon = 0.3 members at the same
    critical exponent (reusing the given family when it is one of the two).
    The rotation test-double has no shape parameter to vary, so its
    lambda_s is None and only delta is reported.
    """
    report = estimate_delta(family, cf_period, depth)
    alpha = getattr(family, "alpha", None)
    if alpha is None:
        return report.delta, None
    bits = family.bits
    fam_flat = family if family.epsilon == 0 else build_family(alpha, 0, bits)
    eps = mpfr("0.3")
    fam_bent = family if family.epsilon == eps else build_family(alpha, eps, bits)
    prefix_depth = depth + 3
    period = tuple(int(r) for r in cf_period)
    reps = -(-(prefix_depth) // len(period)) + 1
    cf = ContinuedFraction(period * reps)
    f = fam_flat.lift(irrational_parameter(fam_flat, cf, prefix_depth))
    g = fam_bent.lift(irrational_parameter(fam_bent, cf, prefix_depth))
    conv = estimate_convergence(f, g, depth)
    return report.delta, conv.lambda_s
