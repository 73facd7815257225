import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from oracle import X, agree
from prismal.crystal import (
    PConnectionData,
    StratificationData,
    chart_change_iso,
    cocycle_check,
    conn_to_strat,
    random_integrable,
    random_nonintegrable,
    raw_stratification,
    simplicial_identities,
    strat_equal,
    strat_to_conn,
    theta_prime_check,
    toric_comparison,
)
from prismal.deltaring import DeltaStructure
from prismal.errors import CocycleFailed, NotIntegrable, NotNilpotent
from prismal.polyalg import PdRing, render
from prismal.report import FAIL
from prismal.scalars import PrecisionProfile

PROF = PrecisionProfile(2, 16, 8, W=6)


def test_cosimplicial_identities():
    for d, count in ((1, 160), (2, 320)):
        out = simplicial_identities(PdRing(PROF, d), 2)
        assert out.ok, out.witness
        assert out.detail["identities"] == count


def test_toric_map():
    assert toric_comparison(PROF, 2, seed=3, count=30).ok


def test_golden_rank_two_stratification(golden_conns):
    P = golden_conns["rank2"]
    S = conn_to_strat(P)
    assert [[render(x) for x in row] for row in S.get((1,))] == [["0", "1"], ["0", "0"]]
    for k in range(2, P.ring.W + 1):
        assert all(x.is_zero() for row in S.get((k,)) for x in row)


def sympy_thetas(A, p, W):
    """Theta_k = (p d/dX + A)^k applied to the identity, over Q[X, 1/X]."""
    M = sympy.eye(A.shape[0])
    out = [M]
    for _ in range(W):
        M = (p * M.diff(X) + A * M).applyfunc(sympy.expand)
        out.append(M)
    return out


def test_thetas_match_oracle_for_a_nonconstant_connection():
    ring = PdRing(PROF, 1)
    # A = [[2X, 1], [0, 2X^-1]] is a p-connection of rank 2 on d = 1
    A = [[ring.x(0).scale_int(2), ring.one()], [ring.zero(), ring.x(0, -1).scale_int(2)]]
    P = PConnectionData(ring, 2, [A], 9)
    S = raw_stratification(P)
    As = sympy.Matrix([[2 * X, 1], [0, 2 / X]])
    want = sympy_thetas(As, 2, PROF.W)
    for k in range(PROF.W + 1):
        for r in range(2):
            for c in range(2):
                assert agree(S.get((k,))[r][c], want[k][r, c]), (k, r, c)
    with pytest.raises(NotNilpotent):
        conn_to_strat(PConnectionData(ring, 2, [A], 3))


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 2), st.integers(1, 3))
def test_round_trip_on_random_instances(seed, d, rank):
    P = random_integrable(PROF, d, rank, seed)
    S = conn_to_strat(P)
    assert cocycle_check(S).ok
    back = strat_to_conn(S, P.L)
    for A, B in zip(P.matrices, back.matrices):
        assert all((x - y).is_zero() for ra, rb in zip(A, B) for x, y in zip(ra, rb))
    assert strat_equal(S, conn_to_strat(back)).ok
    assert theta_prime_check(P, S, [P.ring.x(0), P.ring.x(d - 1, -2)]).ok


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_nonintegrable_perturbations_are_rejected(rank):
    Q = random_nonintegrable(PROF, rank, seed=rank)
    with pytest.raises(NotIntegrable) as e:
        conn_to_strat(Q)
    assert e.value.witness


def test_corrupted_stratification_fails_the_cocycle(golden_conns):
    S = conn_to_strat(golden_conns["rank2"])
    ring = S.ring
    theta = dict(S.theta)
    theta[(1,)] = [[ring.one(), ring.one()], [ring.zero(), ring.zero()]]
    bad = StratificationData(ring, 2, theta)
    assert cocycle_check(bad).status == FAIL
    with pytest.raises(CocycleFailed):
        strat_to_conn(bad)


def test_theta_prime_detects_a_mismatched_connection(golden_conns):
    P, Q = golden_conns["rank2"], golden_conns["rank1"]
    S = conn_to_strat(P)
    ring = P.ring
    wrong = PConnectionData(ring, 2, [[[ring.zero(), ring.const(3)], [ring.zero(), ring.zero()]]], 2)
    assert theta_prime_check(wrong, S, [ring.x(0)]).status == FAIL
    assert theta_prime_check(Q, conn_to_strat(Q), [ring.x(0)]).ok


def test_chart_change_golden(golden, golden_conns):
    S = conn_to_strat(golden_conns["rank2"])
    deltas = [golden.delta, golden.delta2, golden.delta3]
    G, outs = chart_change_iso(S, deltas)
    for name, out in outs.items():
        assert out.ok, (name, out.witness)
    # oracle: G21 = sum_k phi_1(Theta_k) u^k / k!, u = (phi_2(X) - phi_1(X)) / p
    u = ((X ** 2 + 2 * (2 * X)) - X ** 2) / 2
    A = sympy.Matrix([[0, 1], [0, 0]])
    G21 = sympy.eye(2) + A * u
    got = G[(1, 0)]
    for r in range(2):
        for c in range(2):
            assert agree(got[r][c], G21[r, c])
    assert [[render(x) for x in row] for row in got] == [["1", "2*X1"], ["0", "1"]]


def test_chart_change_random_rank_two():
    ring = PdRing(PROF, 1)
    deltas = [DeltaStructure.zero(ring),
              DeltaStructure(ring, (ring.x(0).scale_int(2),)),
              DeltaStructure(ring, (ring.x(0, 3).scale_int(-2) + ring.const(4),))]
    P = random_integrable(PROF, 1, 2, seed=11)
    _, outs = chart_change_iso(conn_to_strat(P), deltas)
    assert all(o.ok for o in outs.values()), {k: o.witness for k, o in outs.items()}
