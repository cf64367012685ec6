"""Dynamical partitions of the circle and the adjacent-ratio rigidity test.

The level-n partition is cut by the first q_n + q_{n+1} points of the
critical orbit. Its atoms come in two generations: q_{n+1} forward images
of the closest-return arc [0, F^{q_n}(0)] and q_n images of the next one.
Instead of transporting arcs (whose circular order is delicate), atoms are
read off as the gaps between circularly consecutive orbit points; the gap
endpoints always differ by exactly q_n or q_{n+1} in orbit time, which
recovers the generation tag and iterate index combinatorially.

The rigidity test compares two maps with the same rotation number. The
conjugacy h is evaluated only on partition endpoints, orbit point to orbit
point with the same time index, so the adjacent-atom length-ratio
discrepancies d_n need no interpolation scheme. A fitted geometric decay
rate of d_n certifies smoothness of h beyond C^0: the fitted exponent
beta = -log(rate) is reported alongside the fit quality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import (
    BudgetError,
    CombinatoricsError,
    ContractError,
    DegenerateError,
    DomainError,
    PrecisionError,
)
from .fitting import least_squares_line
from .precision import real, working_precision
from .rotation import closest_returns, rotation_number

DEFAULT_EVAL_BUDGET = 10**7

# Multiplier over the accumulated endpoint rounding error below which a
# ratio discrepancy is considered indistinguishable from zero.
NOISE_MULTIPLIER = 1000


@dataclass(frozen=True)
class PartitionAtom:
    """One arc of a dynamical partition, tagged with its provenance.

    The atom is the j-th forward image of the closest-return arc of its
    generation; its endpoints are the orbit points F^{j}(0) and
    F^{j + q_generation}(0) reduced mod 1. start is the counterclockwise
    lower endpoint in [0, 1); end = start + length may exceed 1 for the
    single atom wrapping through 0.
    """

    start: mpfr
    length: mpfr
    generation: int
    index: int
    orbit_times: tuple[int, int]

    @property
    def end(self) -> mpfr:
        return self.start + self.length


@dataclass(frozen=True)
class DynamicalPartition:
    """Level-n partition of the circle by the first q_n + q_{n+1} orbit points.

    atoms are in circular order starting at 0, with disjoint interiors and
    total length 1. q = (q_n, q_{n+1}) are the two closest-return times
    involved; generation-n atoms number q_{n+1} and generation-(n+1) atoms
    number q_n.
    """

    level: int
    q: tuple[int, int]
    atoms: tuple[PartitionAtom, ...]

    @property
    def provenance(self) -> dict:
        return {atom: (atom.generation, atom.index) for atom in self.atoms}

    @property
    def total_length(self) -> mpfr:
        return sum((a.length for a in self.atoms), mpfr(0))

    def by_tag(self) -> dict:
        return {(atom.generation, atom.index): atom for atom in self.atoms}


def _orbit_points(map_, count: int) -> list:
    """[F^j(0) mod 1 for j < count], computed in one orbit pass."""
    pts = []
    z = mpfr(0)
    for _ in range(count):
        pts.append(z - gmpy2.floor(z))
        z = map_.raw(z)
    return pts


def dynamical_partition(map_, n: int, eval_budget: int = DEFAULT_EVAL_BUDGET) -> DynamicalPartition:
    """The level-n two-generation partition cut by the critical orbit.

    Requires the rotation number to be irrational-looking to depth n+1 so
    that both return times q_n and q_{n+1} are certified. Orbit points
    closer than the accumulated rounding tolerance make atom lengths
    meaningless and raise PrecisionError.
    """
    if n < 0:
        raise DomainError(f"level must be >= 0, got {n}")
    records = closest_returns(map_, n + 1)
    if len(records) < n + 3:
        raise CombinatoricsError(
            f"rotation number unwinds before level {n + 1}; no level-{n} partition"
        )
    q_n = records[n + 1].q
    q_next = records[n + 2].q
    if q_n == q_next:
        # only possible at n = 0 with leading CF entry 1: the two
        # closest-return arcs coincide and the tagging is ambiguous
        raise DegenerateError(
            "level-0 partition is ambiguous when the leading CF entry is 1"
        )
    count = q_n + q_next
    if count > eval_budget:
        raise BudgetError(f"partition needs {count} orbit points, budget {eval_budget}")
    tol = map_.family.tol
    with working_precision(map_.bits):
        pts = _orbit_points(map_, count)
        order = sorted(range(count), key=pts.__getitem__)
        sep_floor = NOISE_MULTIPLIER * count * tol
        atoms = []
        for k in range(count):
            j_lo = order[k]
            j_hi = order[(k + 1) % count]
            start = pts[j_lo]
            length = (pts[j_hi] - start) if k + 1 < count else (1 + pts[j_hi] - start)
            if length <= sep_floor:
                raise PrecisionError(
                    f"orbit points {j_lo} and {j_hi} are separated by {length}, "
                    f"inside the noise floor {sep_floor}",
                    certified_depth=n,
                )
            diff = abs(j_hi - j_lo)
            if diff == q_n:
                generation = n
            elif diff == q_next:
                generation = n + 1
            else:
                raise ContractError(
                    f"adjacent orbit points differ by {diff} steps; "
                    f"expected {q_n} or {q_next}"
                )
            atoms.append(PartitionAtom(
                start=start,
                length=length,
                generation=generation,
                index=min(j_lo, j_hi),
                orbit_times=(min(j_lo, j_hi), max(j_lo, j_hi)),
            ))
        tags = {(a.generation, a.index) for a in atoms}
        if len(tags) != count or sum(a.generation == n for a in atoms) != q_next:
            raise ContractError("atom tagging does not tile the two generations")
        return DynamicalPartition(level=n, q=(q_n, q_next), atoms=tuple(atoms))


@dataclass(frozen=True)
class RigidityReport:
    """Adjacent-atom ratio discrepancies per level and their decay fit.

    d[k] is the max over adjacent atoms I, J at level levels[k] of
    | |I|/|J| - |h(I)|/|h(J)| |, with h matching atoms by provenance tag.
    The geometric fit runs over fit_levels, the levels whose d_n exceeds
    the per-level noise floor; lambda_fit and beta = -log(lambda_fit) are
    None when fewer than two levels survive (identical maps, say).
    """

    levels: tuple[int, ...]
    d: tuple[mpfr, ...]
    noise_floor: tuple[mpfr, ...]
    fit_levels: tuple[int, ...]
    lambda_fit: mpfr | None
    beta: mpfr | None
    r_squared: mpfr | None
    residuals: tuple[mpfr, ...] = field(default=())
    bits: int = 128


def _ratio_discrepancy(part_f: DynamicalPartition, part_g: DynamicalPartition) -> mpfr:
    image = part_g.by_tag()
    worst = mpfr(0)
    atoms = part_f.atoms
    for k, atom in enumerate(atoms):
        nxt = atoms[(k + 1) % len(atoms)]
        ga = image[(atom.generation, atom.index)]
        gb = image[(nxt.generation, nxt.index)]
        gap = abs(atom.length / nxt.length - ga.length / gb.length)
        if gap > worst:
            worst = gap
        gap = abs(nxt.length / atom.length - gb.length / ga.length)
        if gap > worst:
            worst = gap
    return worst


def conjugacy_ratio_test(f, g, n_max: int, eval_budget: int = DEFAULT_EVAL_BUDGET) -> RigidityReport:
    """Ratio-distortion decay of the combinatorial conjugacy between f and g.

    Both maps must carry the same certified CF prefix through depth
    n_max + 1. For each level 1..n_max the partitions are tagged atom by
    atom, h is the tag-preserving correspondence, and d_n is the worst
    adjacent-ratio discrepancy. Levels below the rounding-noise floor are
    excluded from the decay fit.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    rho_f = rotation_number(f, n_max + 1)
    rho_g = rotation_number(g, n_max + 1)
    for rho, tag in ((rho_f, "first"), (rho_g, "second")):
        if rho.exact is not None or rho.certified_depth < n_max + 1:
            raise CombinatoricsError(
                f"{tag} map does not certify {n_max + 1} CF entries "
                f"(got {rho.certified_depth}, exact={rho.exact})"
            )
    if rho_f.cf.entries[: n_max + 1] != rho_g.cf.entries[: n_max + 1]:
        raise CombinatoricsError(
            f"CF prefixes differ: {rho_f.cf.entries[: n_max + 1]} vs "
            f"{rho_g.cf.entries[: n_max + 1]}"
        )
    bits = max(f.bits, g.bits)
    tol = max(f.family.tol, g.family.tol)
    levels, d_vals, floors = [], [], []
    with working_precision(bits):
        for n in range(1, n_max + 1):
            part_f = dynamical_partition(f, n, eval_budget=eval_budget)
            part_g = dynamical_partition(g, n, eval_budget=eval_budget)
            count = sum(part_f.q)
            min_len = min(min(a.length for a in part_f.atoms),
                          min(a.length for a in part_g.atoms))
            levels.append(n)
            d_vals.append(_ratio_discrepancy(part_f, part_g))
            floors.append(NOISE_MULTIPLIER * count * tol / min_len)
        # level 1 carries the pre-asymptotic constant; fit from level 2 up
        kept = [k for k in range(len(levels)) if levels[k] >= 2 and d_vals[k] > floors[k]]
        lam = beta = r2 = None
        residuals = ()
        if len(kept) >= 2:
            xs = [mpfr(levels[k]) for k in kept]
            ys = [gmpy2.log(d_vals[k]) for k in kept]
            slope, _, r2, residuals = least_squares_line(xs, ys)
            lam = gmpy2.exp(slope)
            beta = -slope
        return RigidityReport(
            levels=tuple(levels),
            d=tuple(d_vals),
            noise_floor=tuple(floors),
            fit_levels=tuple(levels[k] for k in kept),
            lambda_fit=lam,
            beta=beta,
            r_squared=r2,
            residuals=tuple(residuals),
            bits=bits,
        )
