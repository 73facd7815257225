import itertools
import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st
from sympy.matrices.normalforms import smith_normal_form

from prismal.crystal import (
    PConnectionData,
    cech_degeneracy,
    cech_face,
    cech_ring,
    conn_to_strat,
    random_integrable,
)
from prismal.cohomology import (
    DeRhamComplex,
    build_bicomplex,
    build_dr,
    bicomplex_checks,
    d1,
    dY,
    elementary_divisors,
    h0_compare,
    kernel_basis,
    kernel_invariants,
    pd_antiderivative,
    pd_poincare_check,
    perturbed_strat,
)
from prismal.errors import NotIntegrable, WindowTooSmall
from prismal.polyalg import EXACT, FormVector, PdRing, taylor
from prismal.report import FAIL
from prismal.scalars import PrecisionProfile

PROF = PrecisionProfile(2, 16, 8, W=6)


def vp(n, p):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def sympy_kernel_invariants(M, p, N, ncols):
    """Kernel of an integer matrix on (Z/p^N)^ncols from sympy's Smith form over Z."""
    if not M:
        return [N] * ncols
    D = smith_normal_form(sympy.Matrix(M), domain=sympy.ZZ)
    diag = [int(D[i, i]) for i in range(min(D.shape))]
    ker = [N if x == 0 else min(vp(x, p), N) for x in diag]
    ker += [N] * (ncols - len(diag))
    return sorted(e for e in ker if e > 0)


small_int = st.integers(-40, 40)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(1, 4), st.integers(1, 4), st.data())
def test_kernel_invariants_match_sympy(p, rows, cols, data):
    M = [[data.draw(small_int) for _ in range(cols)] for _ in range(rows)]
    N = 6
    assert kernel_invariants(M, p, N, cols) == sympy_kernel_invariants(M, p, N, cols)


def test_kernel_basis_by_enumeration():
    # the generators span a subgroup of ker M whose order is p^(sum of invariants),
    # which equals the kernel size found by brute force
    p, N = 2, 3
    mod = p ** N
    rng = random.Random(5)
    for _ in range(10):
        M = [[rng.randint(-8, 8) for _ in range(3)] for _ in range(2)]
        ker = [v for v in itertools.product(range(mod), repeat=3)
               if all(sum(a * b for a, b in zip(row, v)) % mod == 0 for row in M)]
        inv = kernel_invariants(M, p, N, 3)
        assert len(ker) == p ** sum(inv)
        gens = kernel_basis(M, p, N, 3)
        for g in gens:
            assert all(sum(a * b for a, b in zip(row, g)) % mod == 0 for row in M)
        span = {tuple([0] * 3)}
        for g in gens:
            span = {tuple((s + k * x) % mod for s, x in zip(v, g))
                    for v in span for k in range(mod)}
        assert len(span) == len(ker)


def test_elementary_divisors_diagonal():
    assert elementary_divisors([[4, 0], [0, 6]], 2, 5) == [1, 2]
    assert elementary_divisors([[0, 0]], 2, 5) == []


def test_de_rham_trivial_rank_one():
    ring = PdRing(PROF, 1)
    P = PConnectionData(ring, 1, [[[ring.zero(EXACT)]]], 1)
    C = DeRhamComplex(P)
    out = C.differential({(): [ring.monomial(1, [3])]})
    # p d(X^3) = 6 X^2 dX
    assert list(out) == [(0,)]
    assert out[(0,)][0].terms == {(2,): 6}


def test_build_dr_square_zero_random_d2():
    P = random_integrable(PROF, 2, 2, seed=4)
    C = build_dr(P)
    assert C.square_check(seed=1).ok


def test_build_dr_rejects_nonintegrable():
    ring = PdRing(PROF, 2)
    A1 = [[ring.x(1)]]
    A2 = [[ring.zero(EXACT)]]
    with pytest.raises(NotIntegrable):
        build_dr(PConnectionData(ring, 1, [A1, A2], 1))


def test_cech_differential_is_taylor_minus_identity(golden_conns):
    P = golden_conns["rank1"]
    S = conn_to_strat(P)
    base = P.ring
    f = base.monomial(3, [2]) + base.monomial(-1, [-1])
    out = d1(S, 0, [FormVector(base, 0, {(): f})])
    tgt = cech_ring(base, 1)
    want = taylor(f, tgt) - f.map_ring(tgt, lambda k: k + (0,))
    assert (out[0].coeffs[()] - want).is_zero()


def test_bicomplex_identities_golden(golden_conns):
    P = golden_conns["rank2"]
    checks = bicomplex_checks(build_bicomplex(P, conn_to_strat(P)), seed=3)
    for name, out in checks.items():
        assert out.ok, (name, out.witness)


def test_bicomplex_identities_random_d2():
    P = random_integrable(PROF, 2, 2, seed=11)
    checks = bicomplex_checks(build_bicomplex(P, conn_to_strat(P)), seed=2, samples=1)
    assert all(out.ok for out in checks.values())


def test_bicomplex_detects_broken_stratification(golden_conns):
    P = golden_conns["rank2"]
    S = perturbed_strat(conn_to_strat(P), (1,), 0, 0, 1)
    checks = bicomplex_checks(build_bicomplex(P, S), seed=3)
    assert checks["d1d1"].status == FAIL


def test_window_too_small():
    prof = PrecisionProfile(2, 16, 8, W=2)
    ring = PdRing(prof, 1)
    P = PConnectionData(ring, 1, [[[ring.zero(EXACT)]]], 1)
    with pytest.raises(WindowTooSmall):
        build_bicomplex(P, conn_to_strat(P))


def dr_matrix_oracle(A, p, window):
    """Integer matrix of nabla = p d/dX + A on X^k e_j, |k| <= window (d = 1)."""
    n = len(A)
    cols = []
    for k in range(-window, window + 1):
        for j in range(n):
            col = {}
            if k:
                col[(k - 1, j)] = col.get((k - 1, j), 0) + p * k
            for l in range(n):
                if A[l][j]:
                    col[(k, l)] = col.get((k, l), 0) + A[l][j]
            cols.append(col)
    keys = sorted({key for c in cols for key in c})
    return [[c.get(key, 0) for c in cols] for key in keys], len(cols)


@pytest.mark.parametrize("name,A", [("rank1", [[0]]), ("rank2", [[0, 1], [0, 0]])])
def test_h0_golden_matches_oracle(golden, golden_conns, name, A):
    P = golden_conns[name]
    out = h0_compare(P, conn_to_strat(P), window=2)
    assert out.ok, out.witness
    M, ncols = dr_matrix_oracle(A, golden.ring.p, 2)
    want = sympy_kernel_invariants(M, golden.ring.p, golden.ring.profile.N, ncols)
    assert out.detail["de_rham"] == want
    assert out.detail["total"] == want


def test_h0_negative_control(golden_conns):
    P = golden_conns["rank2"]
    S = perturbed_strat(conn_to_strat(P), (1,), 0, 0, 1)
    assert h0_compare(P, S, window=2).status == FAIL


def test_pd_antiderivative_basis():
    ring = PdRing(PROF, 1, 1)
    for k in range(1, PROF.W + 1):
        w = FormVector.basis(ring, (1,), ring.y(0, k - 1))
        assert pd_antiderivative(w).terms == {(0, k): 1}


def test_pd_poincare():
    out = pd_poincare_check(PROF, d=2, seed=7, samples=10)
    assert out.ok, out.witness


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-2, 2),
                          st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4))
def test_pd_antiderivative_inverts_dy(terms):
    ring = PdRing(PROF, 1, 2)
    G = ring.zero(EXACT)
    for c, x, a, b in terms:
        G = G + ring.monomial(c, [x], [a, b])
    F = pd_antiderivative(dY(G))
    assert (dY(F) - dY(G)).is_zero()


def test_degeneracy_is_not_a_contraction():
    # s0 d1 + d1 s0 = p0 s0 on the trivial nerve, so s0 alone is no homotopy
    ring = PdRing(PROF, 1)

    def cech_d(r, f):
        out = None
        for i in range(r + 2):
            g = cech_face(r, i, f)
            g = g if i % 2 == 0 else -g
            out = g if out is None else out + g
        return out

    for r in (1, 2):
        R = cech_ring(ring, r)
        f = R.monomial(3, [2], [1] + [0] * (r - 1)) + R.monomial(1, [-1], [0] * (r - 1) + [2])
        lhs = cech_degeneracy(r + 1, 0, cech_d(r, f)) + cech_d(r - 1, cech_degeneracy(r, 0, f))
        assert (lhs - cech_face(r - 1, 0, cech_degeneracy(r, 0, f))).is_zero()
        assert not (lhs - f).is_zero()
