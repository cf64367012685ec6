"""Dynamical partitions and the adjacent-ratio rigidity test."""

import gmpy2
import pytest
from gmpy2 import mpfr

from ccrenorm import (
    CombinatoricsError,
    DegenerateError,
    closest_returns,
    conjugacy_ratio_test,
    dynamical_partition,
)
from ccrenorm.precision import working_precision


@pytest.fixture(scope="module")
def golden_rigid_lift(rigid):
    with working_precision(128):
        return rigid.lift((gmpy2.sqrt(5) - 1) / 2)


def test_golden_level_one_has_three_atoms(golden_rigid_lift):
    part = dynamical_partition(golden_rigid_lift, 1)
    assert part.level == 1
    assert part.q == (1, 2)
    assert len(part.atoms) == 3
    gens = sorted(a.generation for a in part.atoms)
    assert gens == [1, 1, 2]  # q_2 = 2 atoms of generation 1, q_1 = 1 of generation 2
    assert part.atoms[0].start == 0


def test_atoms_tile_the_circle(golden_rigid_lift, bent, golden_cache):
    crit = bent.lift(golden_cache(bent, 15))
    for lift, n in ((golden_rigid_lift, 4), (crit, 3)):
        part = dynamical_partition(lift, n)
        with working_precision(lift.bits):
            assert abs(part.total_length - 1) < mpfr(2) ** -100
            for a, b in zip(part.atoms, part.atoms[1:]):
                assert abs(a.end - b.start) < mpfr(2) ** -100


def test_partitions_refine(golden_rigid_lift):
    coarse = dynamical_partition(golden_rigid_lift, 2)
    fine = dynamical_partition(golden_rigid_lift, 3)
    with working_precision(128):
        eps = mpfr(2) ** -100
        for atom in fine.atoms:
            assert any(
                c.start - eps <= atom.start and atom.end <= c.end + eps
                for c in coarse.atoms
            )


def test_rigid_three_distance_structure(golden_rigid_lift):
    # gap lengths of the rigid partition equal the two closest-return distances
    n = 5
    part = dynamical_partition(golden_rigid_lift, n)
    recs = closest_returns(golden_rigid_lift, n + 1)
    with working_precision(128):
        by_level = {rec.level: abs(rec.y) for rec in recs}
        for atom in part.atoms:
            want = by_level[atom.generation]
            assert abs(atom.length - want) < mpfr(2) ** -100


def test_nongolden_rigid_three_distance(rigid):
    with working_precision(128):
        lift = rigid.lift(gmpy2.sqrt(2) - 1)  # CF [2,2,2,...]
    part = dynamical_partition(lift, 3)
    assert part.q == (12, 29)  # q_3, q_4 of [2,2,2,...]
    assert len(part.atoms) == 41
    recs = closest_returns(lift, 4)
    with working_precision(128):
        by_level = {rec.level: abs(rec.y) for rec in recs}
        for atom in part.atoms:
            assert abs(atom.length - by_level[atom.generation]) < mpfr(2) ** -100


def test_generation_counts(golden_rigid_lift):
    part = dynamical_partition(golden_rigid_lift, 4)
    q_n, q_next = part.q
    gens = [a.generation for a in part.atoms]
    assert gens.count(4) == q_next
    assert gens.count(5) == q_n
    assert len(part.atoms) == q_n + q_next


def test_level_zero_golden_is_ambiguous(golden_rigid_lift):
    with pytest.raises(DegenerateError):
        dynamical_partition(golden_rigid_lift, 0)


def test_level_zero_works_off_golden(rigid):
    with working_precision(128):
        lift = rigid.lift(gmpy2.sqrt(2) - 1)
    part = dynamical_partition(lift, 0)
    assert part.q == (1, 2)
    assert len(part.atoms) == 3


def test_provenance_map(golden_rigid_lift):
    part = dynamical_partition(golden_rigid_lift, 3)
    prov = part.provenance
    assert set(prov.values()) == {(a.generation, a.index) for a in part.atoms}
    tags = part.by_tag()
    for atom in part.atoms:
        assert prov[atom] == (atom.generation, atom.index)
        assert tags[(atom.generation, atom.index)] is atom
        assert len(atom.orbit_times) == 2


def test_same_map_has_zero_discrepancy(golden_rigid_lift, rigid):
    report = conjugacy_ratio_test(golden_rigid_lift, golden_rigid_lift, 6)
    assert all(d == 0 for d in report.d)
    assert report.lambda_fit is None
    assert report.r_squared is None


def test_critical_vs_bent_ratio_decay(arnold, bent, arnold_star, bent_star):
    f = arnold.lift(arnold_star)
    g = bent.lift(bent_star)
    report = conjugacy_ratio_test(f, g, 8)
    assert report.levels[0] == 1
    assert report.d[0] > 0
    assert 0 < report.lambda_fit < 1
    assert report.beta > 0
    assert report.fit_levels[0] >= 2  # level 1 carries the transient
    assert all(d > nf for d, nf in zip(report.d, report.noise_floor))


def test_mismatched_combinatorics_rejected(arnold, bent, arnold_star):
    f = arnold.lift(arnold_star)
    g = bent.lift(mpfr("0.404"))  # lands in a plateau, rational rho
    with pytest.raises(CombinatoricsError):
        conjugacy_ratio_test(f, g, 6)
