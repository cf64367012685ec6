"""Commuting pairs, the renormalization step, towers, and the pair metric."""

import pytest
from gmpy2 import mpfr

from ccrenorm import (
    INF,
    DegenerateError,
    NotRenormalizableError,
    build_family,
    cf_window,
    height,
    irrational_parameter,
    pair_distance,
    pair_from_map,
    renorm_tower,
    renormalize,
    rotation_number,
)
from ccrenorm.precision import working_precision


@pytest.fixture(scope="module")
def golden_bent_lift(bent, golden_cache):
    return bent.lift(golden_cache(bent, 15))


@pytest.fixture(scope="module")
def silver_lift(bent):
    theta = irrational_parameter(bent, (2, 1) * 5, 10)
    return bent.lift(theta)


def test_tower_heights_follow_cf(silver_lift):
    rho = rotation_number(silver_lift, 9)
    pairs = renorm_tower(silver_lift, 7)
    got = [int(height(p)) for p in pairs]
    assert got == list(rho.cf.finite[:8])
    assert got == [2, 1, 2, 1, 2, 1, 2, 1]


def test_tower_depth_zero(golden_bent_lift):
    pairs = renorm_tower(golden_bent_lift, 0)
    assert len(pairs) == 1
    assert pairs[0].level == 0


def test_prerenormalization_identity(golden_bent_lift):
    # operator route and direct first-return extraction must coincide
    for m in range(4):
        a = renormalize(pair_from_map(golden_bent_lift, m))
        b = pair_from_map(golden_bent_lift, m + 1)
        assert pair_distance(a, b, grid=32).value < mpfr(2) ** -100


def test_gauss_action_on_heights(silver_lift):
    z0 = pair_from_map(silver_lift, 0)
    z1 = renormalize(z0)
    assert int(height(z0)) == 2
    assert int(height(z1)) == 1


def test_bookkeeping_follows_cf_recurrence(silver_lift):
    z = pair_from_map(silver_lift, 0)
    for _ in range(5):
        r = int(height(z))
        nxt = renormalize(z)
        assert nxt.q[1] == z.q[0]
        assert nxt.q[0] == r * z.q[0] + z.q[1]
        z = nxt


def test_normalization_and_domains(golden_bent_lift):
    pairs = renorm_tower(golden_bent_lift, 8)
    with working_precision(golden_bent_lift.bits):
        for pair in pairs:
            assert pair.xi0 == 1
            assert pair.eta0 < 0
        # golden combinatorics keeps every level inside (-1, 0) ...
        assert all(-1 < pair.eta0 for pair in pairs)
        # ... and same-side magnitudes always shrink (levels two apart)
        mags = [abs(pair.x[0]) for pair in pairs]
        assert all(b < a for a, b in zip(mags, mags[2:]))


def test_commutation_residual_small(golden_bent_lift):
    pairs = renorm_tower(golden_bent_lift, 6)
    for pair in pairs:
        assert pair.commutation_residual() < mpfr(2) ** -90


def test_exponent_estimate_recovers_alpha(golden_bent_lift, golden_cache):
    z3 = pair_from_map(golden_bent_lift, 3)
    assert abs(z3.exponent_estimate() - 3) < mpfr("1e-4")
    fam25 = build_family(mpfr("2.5"), 0, 128)
    lift25 = fam25.lift(golden_cache(fam25, 12))
    z = pair_from_map(lift25, 3)
    assert abs(z.exponent_estimate() - mpfr("2.5")) < mpfr("1e-4")


def test_pair_distance_identity_and_symmetry(golden_bent_lift, arnold, golden_cache):
    za = pair_from_map(golden_bent_lift, 2)
    zb = pair_from_map(arnold.lift(golden_cache(arnold, 15)), 2)
    assert pair_distance(za, za).value == 0
    d_ab = pair_distance(za, zb)
    d_ba = pair_distance(zb, za)
    assert d_ab.value == d_ba.value
    assert d_ab.value > 0
    assert d_ab.grid_size == 256


def test_superstable_orbit_is_degenerate(arnold):
    # at theta = 1/2 the critical orbit returns to 0 exactly
    z0 = pair_from_map(arnold.lift(mpfr("0.5")), 0)
    with pytest.raises(DegenerateError):
        height(z0)


def test_rational_tower_stops(arnold):
    # plateau interior below the superstable point: CF [2] then exhausted
    w = cf_window(arnold, (2, INF))
    lift = arnold.lift(mpfr("0.5") - w.width / 8)
    z0 = pair_from_map(lift, 0)
    assert int(height(z0)) == 2
    z1 = renormalize(z0)
    assert not height(z1).is_finite
    with pytest.raises(NotRenormalizableError):
        renormalize(z1)
