import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from oracle import X, agree, delta_laurent, delta_sym
from prismal.deltaring import (
    DeltaStructure,
    check_compatible,
    check_delta_axioms,
    delta_apply,
    diff_d,
    diff_frobenius_valuation_check,
    diff_power_check,
    frobenius_congruence,
    phi_apply,
    random_integral,
    random_pairs,
)
from prismal.errors import IncompatibleDeltas, NonInvertibleImage
from prismal.polyalg import PdRing, render
from prismal.scalars import PrecisionProfile


def test_delta_of_golden_generator(golden):
    # delta((X-1)/2) for delta(X) = 0, against the rational oracle
    f = golden.ideal_gens[0].divide_by_p()
    got = delta_apply(golden.delta, f)
    want = delta_sym((X - 1) / 2, 0, 2)
    assert sympy.expand(want - (X ** 2 + 2 * X - 3) / 8) == 0
    assert agree(got, want)


def test_delta_of_p_is_one_minus_p_to_p_minus_one(golden):
    two = golden.ring.const(2)
    assert render(delta_apply(golden.delta, two)) == "-1"


def test_diff_operator_golden(golden):
    x = golden.ring.x(0)
    assert render(diff_d(golden.delta, golden.delta2, x)) == "X1"
    # delta3 - delta1 = 2X^2 gives (phi3 - phi1)(X) / 4 = X^2
    assert render(diff_d(golden.delta, golden.delta3, x)) == "X1^2"


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5]))
def test_axioms_hold_for_random_structures(seed, p):
    ring = PdRing(PrecisionProfile(p, 12, 12), 2)
    rng = random.Random(seed)
    delta = DeltaStructure(ring, tuple(random_integral(ring, rng, laurent=False)
                                       for _ in range(2)))
    out = check_delta_axioms(delta, random_pairs(ring, seed, 5, laurent=False))
    assert out.ok, out.witness


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-3, 3)), min_size=1, max_size=3))
def test_delta_matches_oracle_on_laurent_polys(ts):
    prof = PrecisionProfile(3, 14, 8)
    ring = PdRing(prof, 1)
    delta = DeltaStructure(ring, (ring.x(0, 2).scale_int(2),))
    f = ring.zero()
    for c, e in ts:
        f = f + ring.monomial(c, [e])
    assert agree(delta_apply(delta, f), delta_laurent(ts, "2*X**2", 3))


def test_frobenius_congruence(golden):
    rng = random.Random(1)
    for _ in range(10):
        f = random_integral(golden.ring, rng)
        assert frobenius_congruence(golden.delta2, f).ok


def test_incompatible_structures_are_rejected(golden):
    ring = golden.ring
    odd = DeltaStructure(ring, (ring.x(0),))
    with pytest.raises(IncompatibleDeltas):
        check_compatible(golden.delta, odd)
    with pytest.raises(IncompatibleDeltas):
        diff_d(golden.delta, odd, ring.x(0))


def test_non_unit_frobenius_image_is_rejected():
    ring = PdRing(PrecisionProfile(2, 10, 5), 1)
    # X^2 + 2 * (-X^2/2)... is not expressible; X^2 + 2*X^-1 has one unit monomial,
    # while delta(X) = 1/2 is not integral
    with pytest.raises(NonInvertibleImage):
        DeltaStructure(ring, (ring.one().divide_by_p(),))


def test_diff_lemma_for_p_three():
    ring = PdRing(PrecisionProfile(3, 30, 20), 1)
    d1 = DeltaStructure.zero(ring)
    d2 = DeltaStructure(ring, (ring.x(0).scale_int(3),))
    rng = random.Random(5)
    for _ in range(3):
        x = random_integral(ring, rng)
        assert diff_frobenius_valuation_check(d1, d2, x).ok
        assert diff_power_check(d1, d2, x).ok


def test_phi_is_a_ring_map(golden):
    rng = random.Random(2)
    for _ in range(5):
        f, g = random_integral(golden.ring, rng), random_integral(golden.ring, rng)
        lhs = phi_apply(golden.delta3, f * g)
        rhs = phi_apply(golden.delta3, f) * phi_apply(golden.delta3, g)
        assert (lhs - rhs).is_zero()
