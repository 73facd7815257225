"""Frobenius pullback of p-connections divided by p.

For a p-connection theta_i = p d_i + A_i and a Frobenius lift Phi,
Phi^*(nabla)/p is an ordinary connection with matrices

    A'_i = sum_j c_ji Phi(A_j),   c_ji = d_i(Phi(X_j)) / p,

where c_ji is the dX_i coefficient of dPhi(dX_j)/p.
"""

import random
from dataclasses import dataclass

from .crystal import PConnectionData, mat_add, mat_map, mat_mul, mat_render, mat_zero
from .deltaring import DeltaStructure, phi_apply
from .errors import IntegralityFailed, NotIntegrable
from .polyalg import EXACT, FormVector, derivative, render
from .report import FAIL, PASS, Outcome, compare_many, merge


@dataclass(frozen=True, eq=False)
class FrobeniusMap:
    delta: DeltaStructure

    @property
    def ring(self):
        return self.delta.ring

    def __call__(self, f):
        return phi_apply(self.delta, f)


def dphi_over_p(Phi, i):
    """(1/p) dPhi(dX_i) = X_i^(p-1) dX_i + d(delta(X_i))."""
    ring = Phi.ring
    img = Phi.delta.phi_images[i]
    coeffs = {}
    for j in range(ring.d):
        c = derivative(img, j).divide_by_p()
        v = c.valuation()
        if v is not None and v < 0:
            raise IntegralityFailed(
                f"coefficient of dX{j + 1} in dPhi(dX{i + 1})/p is not integral: {render(c)}")
        coeffs[(j,)] = c
    return FormVector(ring, 1, coeffs)


def c_inverse(P, delta, check=True):
    """Matrices of Phi^*(nabla)/p in the dX basis; same rank as P."""
    Phi = FrobeniusMap(delta)
    ring = P.ring
    d = ring.d
    forms = [dphi_over_p(Phi, j) for j in range(d)]
    pulled = [mat_map(A, Phi) for A in P.matrices]
    mats = []
    for i in range(d):
        acc = mat_zero(ring, P.rank)
        for j in range(d):
            c = forms[j].coeffs.get((i,))
            if c is None:
                continue
            acc = mat_add(acc, mat_map(pulled[j], lambda x: c * x))
        for row in acc:
            for x in row:
                v = x.valuation()
                if v is not None and v < 0:
                    raise IntegralityFailed(f"non-integral entry {render(x)} in A'_{i + 1}")
        mats.append(acc)
    out = PConnectionData(ring, P.rank, mats, P.L)
    if check:
        bad = ordinary_integrability_defect(out)
        if bad is not None:
            i, j, diff = bad
            raise NotIntegrable(f"output fails integrability in ({i + 1},{j + 1})",
                                witness=mat_render(diff))
    return out


def ordinary_integrability_defect(C):
    """First (i, j, defect) with d_i A_j - d_j A_i != A_j A_i - A_i A_j."""
    for i in range(C.d):
        for j in range(i + 1, C.d):
            Ai, Aj = C.matrices[i], C.matrices[j]
            lhs = mat_add(mat_map(Aj, lambda x: derivative(x, i)),
                          mat_map(Ai, lambda x: derivative(x, j)), -1)
            rhs = mat_add(mat_mul(Aj, Ai), mat_mul(Ai, Aj), -1)
            diff = mat_add(lhs, rhs, -1)
            if any(not x.is_zero() for row in diff for x in row):
                return i, j, diff
    return None


def integrability_report(C):
    bad = ordinary_integrability_defect(C)
    if bad is None:
        return Outcome(PASS)
    i, j, diff = bad
    return Outcome(FAIL, f"({i + 1},{j + 1}): {mat_render(diff)}")


def direct_sum(P, Q):
    ring = P.ring
    n = P.rank + Q.rank
    mats = []
    for A, B in zip(P.matrices, Q.matrices):
        M = mat_zero(ring, n)
        for a in range(P.rank):
            for b in range(P.rank):
                M[a][b] = A[a][b]
        for a in range(Q.rank):
            for b in range(Q.rank):
                M[P.rank + a][P.rank + b] = B[a][b]
        mats.append(M)
    return PConnectionData(ring, n, mats, max(P.L, Q.L))


def direct_sum_check(P, Q, delta):
    S = c_inverse(direct_sum(P, Q), delta)
    a, b = c_inverse(P, delta), c_inverse(Q, delta)
    want = direct_sum(a, b)
    pairs = []
    for i, (M, N) in enumerate(zip(S.matrices, want.matrices)):
        for r, (x, y) in enumerate(zip(M, N)):
            for c, (u, v) in enumerate(zip(x, y)):
                pairs.append((f"A'_{i + 1}[{r}][{c}]", u, v))
    return compare_many(pairs, min_prec=0)


def random_delta(ring, rng, degree=2, coeff=4):
    """A delta-structure with integral Laurent values whose phi(X_i) is a unit."""
    from .errors import NonInvertibleImage
    p = ring.p
    for _ in range(200):
        gens = []
        for i in range(ring.d):
            f = ring.zero()
            for _ in range(2):
                xexp = [rng.randint(-degree, degree) for _ in range(ring.d)]
                f = f + ring.monomial(rng.randint(-coeff, coeff), xexp)
            gens.append(f)
        try:
            return DeltaStructure(ring, tuple(gens))
        except NonInvertibleImage:
            continue
    raise RuntimeError(f"no invertible Frobenius lift found for p={p}")


def dphi_integrality_check(ring, seed, count=20):
    """dPhi(dX_i)/p integral for `count` seeded delta-structures."""
    rng = random.Random(seed)
    results = []
    for t in range(count):
        delta = random_delta(ring, rng)
        Phi = FrobeniusMap(delta)
        for i in range(ring.d):
            try:
                dphi_over_p(Phi, i)
            except IntegralityFailed as e:
                results.append(Outcome(FAIL, f"structure {t}: {e}"))
    out = merge(results) if results else Outcome(PASS)
    out.detail["structures"] = count
    return out


def c_inverse_h0_consistency(P, delta, override=None):
    """Constant horizontal sections of the p-connection stay horizontal for
    Phi^*(nabla)/p.  `override` replaces the output matrices (negative control)."""
    from .cohomology import kernel_basis
    ring = P.ring
    p, N = ring.p, ring.profile.N
    n = P.rank
    rows = []
    for A in P.matrices:
        for row in A:
            r = []
            for x in row:
                if x.shift or any(any(k) for k in x.terms):
                    raise ValueError("consistency check needs constant integral matrices")
                r.append(x.terms.get((0,) * ring.d, 0))
            rows.append(r)
    gens = kernel_basis(rows, p, N, n)
    C = override if override is not None else c_inverse(P, delta)
    pairs = []
    for g, v in enumerate(gens):
        vec = [ring.const(c) for c in v]
        for i, A in enumerate(C.matrices):
            for l in range(n):
                acc = ring.zero()
                for k in range(n):
                    acc = acc + A[l][k] * vec[k]
                pairs.append((f"generator {g}, A'_{i + 1} row {l}", acc, ring.zero()))
    out = compare_many(pairs) if pairs else Outcome(PASS)
    out.detail["kernel_generators"] = len(gens)
    return out


def corrupt(C, term):
    """Add `term` to the (0, 0) entry of A'_1."""
    mats = [[row[:] for row in M] for M in C.matrices]
    mats[0][0][0] = mats[0][0][0] + term
    return PConnectionData(C.ring, C.rank, mats, C.L)


def rank_check(P, C):
    if C.rank == P.rank and all(len(M) == P.rank for M in C.matrices):
        return Outcome(PASS)
    return Outcome(FAIL, f"rank {P.rank} -> {C.rank}")


def const_matrices(ring, rows_list):
    return [[[ring.const(c, EXACT) for c in row] for row in M] for M in rows_list]
