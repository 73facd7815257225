"""Cech nerve of the chart, stratifications and p-connections.

Level n of the nerve is R[Y_1..Y_n] with divided powers, each Y_j a block
of d variables.  Vertex 0 is X, vertex j is X + p Y_j.  A crystal of rank n
is stored through its stratification: matrices Theta_alpha whose column k
is theta_alpha(e_k), so that eps(e_k) = sum_alpha Theta_alpha e_k Y_1^[alpha].
"""

import itertools
import random
from dataclasses import dataclass
from math import comb

from .deltaring import check_compatible, phi_apply
from .errors import CocycleFailed, NotIntegrable, NotNilpotent
from .polyalg import (
    EXACT,
    PdPoly,
    PdRing,
    derivative,
    embed,
    p_diff,
    pd_power_list,
    render,
    subst_hom,
    taylor,
)
from .report import FAIL, PASS, Outcome, compare, compare_many, integral, merge


# -- matrices over PdPoly ------------------------------------------------------


def mat_identity(ring, n):
    return [[ring.one() if i == j else ring.zero(EXACT) for j in range(n)] for i in range(n)]


def mat_zero(ring, n, k=None):
    k = n if k is None else k
    return [[ring.zero(EXACT) for _ in range(k)] for _ in range(n)]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = None
            for t in range(k):
                if a[i][t].is_zero() or b[t][j].is_zero():
                    continue
                term = a[i][t] * b[t][j]
                s = term if s is None else s + term
            row.append(s if s is not None else a[0][0].ring.zero(EXACT))
        out.append(row)
    return out


def mat_add(a, b, sign=1):
    return [[x + y if sign == 1 else x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_map(a, fn):
    return [[fn(x) for x in row] for row in a]


def mat_is_zero(a):
    return all(x.is_zero() for row in a for x in row)


def mat_compare(a, b, label):
    pairs = []
    for i, (ra, rb) in enumerate(zip(a, b)):
        for j, (x, y) in enumerate(zip(ra, rb)):
            pairs.append((f"{label}[{i},{j}]", x, y))
    return compare_many(pairs)


def mat_vec(a, v):
    return [sum((a[i][k] * v[k] for k in range(len(v))), a[i][0].ring.zero(EXACT))
            for i in range(len(a))]


def mat_render(a):
    return [[render(x) for x in row] for row in a]


# -- the Cech nerve -------------------------------------------------------------


def cech_ring(base, n):
    """Level n of the nerve over the chart ring `base` (which has m = 0)."""
    return PdRing(base.profile, base.d, n * base.d)


def yindex(d, block, axis):
    """Position of Y_{block, axis} (block 1-based) among the Y variables."""
    return (block - 1) * d + axis


def _images_face0(src, tgt):
    d = src.d
    p = src.p
    n = src.m // d
    imgs = []
    for a in range(d):
        imgs.append(tgt.x(a) + tgt.y(yindex(d, 1, a)).mul_by_p())
    for j in range(1, n + 1):
        for a in range(d):
            imgs.append(tgt.y(yindex(d, j + 1, a)) - tgt.y(yindex(d, 1, a)))
    return imgs


def cech_face(n, i, f):
    """p_i : D^n -> D^(n+1)."""
    src = f.ring
    d = src.d
    if src.m != n * d:
        raise ValueError("element does not live at this level")
    if not 0 <= i <= n + 1:
        raise ValueError("face index out of range")
    tgt = PdRing(src.profile, d, (n + 1) * d)
    if i == 0:
        return subst_hom(f, _images_face0(src, tgt), tgt)
    ymap = []
    for j in range(1, n + 1):
        jj = j + 1 if i <= j else j
        for a in range(d):
            ymap.append(yindex(d, jj, a))
    return embed(f, tgt, ymap)


def cech_degeneracy(n, i, f):
    """sigma_i : D^n -> D^(n-1)."""
    src = f.ring
    d = src.d
    if src.m != n * d:
        raise ValueError("element does not live at this level")
    if not 0 <= i <= n - 1:
        raise ValueError("degeneracy index out of range")
    tgt = PdRing(src.profile, d, (n - 1) * d)
    imgs = [tgt.x(a) for a in range(d)]
    for j in range(1, n + 1):
        for a in range(d):
            if i == 0 and j == 1:
                imgs.append(tgt.zero(EXACT))
            elif i < j:
                imgs.append(tgt.y(yindex(d, j - 1, a)))
            else:
                imgs.append(tgt.y(yindex(d, j, a)))
    return subst_hom(f, imgs, tgt)


def cech_generators(base, n):
    ring = cech_ring(base, n)
    gens = [(f"X{a + 1}", ring.x(a)) for a in range(base.d)]
    gens += [(f"X{a + 1}^-1", ring.x(a, -1)) for a in range(base.d)]
    for j in range(1, n + 1):
        for a in range(base.d):
            gens.append((f"Y{j},{a + 1}", ring.y(yindex(base.d, j, a))))
    return gens


def simplicial_identities(base, max_level=2):
    """Cosimplicial identities on generators for levels n <= max_level."""
    pairs = []
    for n in range(max_level + 1):
        for name, g in cech_generators(base, n):
            # p_j p_i = p_i p_{j-1} for i < j
            for j in range(n + 2):
                for i in range(j):
                    lhs = cech_face(n + 1, j, cech_face(n, i, g))
                    rhs = cech_face(n + 1, i, cech_face(n, j - 1, g))
                    pairs.append((f"n={n} p{j}p{i} {name}", lhs, rhs))
            # sigma_j p_i
            for j in range(n + 1):
                for i in range(n + 2):
                    lhs = cech_degeneracy(n + 1, j, cech_face(n, i, g))
                    if i in (j, j + 1):
                        rhs = g
                    elif i < j:
                        rhs = cech_face(n - 1, i, cech_degeneracy(n, j - 1, g))
                    else:
                        rhs = cech_face(n - 1, i - 1, cech_degeneracy(n, j, g))
                    pairs.append((f"n={n} s{j}p{i} {name}", lhs, rhs))
        # sigma_j sigma_i = sigma_i sigma_{j+1} for i <= j, on level n + 2
        for name, g in cech_generators(base, n + 2):
            for j in range(n + 1):
                for i in range(j + 1):
                    lhs = cech_degeneracy(n + 1, j, cech_degeneracy(n + 2, i, g))
                    rhs = cech_degeneracy(n + 1, i, cech_degeneracy(n + 2, j + 1, g))
                    pairs.append((f"n={n} s{j}s{i} {name}", lhs, rhs))
    out = compare_many(pairs)
    out.detail["identities"] = len(pairs)
    return out


# -- connections and stratifications ------------------------------------------


@dataclass(eq=False)
class PConnectionData:
    ring: PdRing
    rank: int
    matrices: list  # one n x n matrix per axis
    L: int

    @property
    def d(self):
        return self.ring.d


@dataclass(eq=False)
class StratificationData:
    ring: PdRing
    rank: int
    theta: dict  # alpha -> n x n matrix

    def get(self, alpha):
        alpha = tuple(alpha)
        if alpha in self.theta:
            return self.theta[alpha]
        return mat_zero(self.ring, self.rank)


def multi_indices(d, max_weight, min_weight=0):
    out = []
    for w in range(min_weight, max_weight + 1):
        for c in itertools.combinations_with_replacement(range(d), w):
            a = [0] * d
            for i in c:
                a[i] += 1
            out.append(tuple(a))
    return out


def theta_step(P, i, M):
    """Apply theta_{e_i} = p d_i + A_i to each column of M."""
    return mat_add(mat_map(M, lambda x: p_diff(x, i)), mat_mul(P.matrices[i], M))


def integrability_defect(P):
    """First (i, j, defect matrix) with theta_i theta_j != theta_j theta_i."""
    for i in range(P.d):
        for j in range(i + 1, P.d):
            Ai, Aj = P.matrices[i], P.matrices[j]
            lhs = mat_add(mat_map(Aj, lambda x: p_diff(x, i)), mat_mul(Ai, Aj))
            rhs = mat_add(mat_map(Ai, lambda x: p_diff(x, j)), mat_mul(Aj, Ai))
            diff = mat_add(lhs, rhs, -1)
            if not mat_is_zero(diff):
                return i, j, diff
    return None


def is_integrable(P):
    return integrability_defect(P) is None


def raw_stratification(P, weight=None):
    """Theta_alpha by ordered products theta_1^a1 ... theta_d^ad, no checks."""
    W = P.ring.W if weight is None else weight
    theta = {(0,) * P.d: mat_identity(P.ring, P.rank)}
    for alpha in multi_indices(P.d, W, 1):
        # peel off the first nonzero coordinate: theta_alpha = theta_i theta_{alpha - e_i}
        i = next(k for k, a in enumerate(alpha) if a)
        prev = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
        theta[alpha] = theta_step(P, i, theta[prev])
    return StratificationData(P.ring, P.rank, theta)


def conn_to_strat(P):
    bad = integrability_defect(P)
    if bad is not None:
        i, j, diff = bad
        raise NotIntegrable(f"theta_{i + 1} and theta_{j + 1} do not commute",
                            witness=mat_render(diff))
    S = raw_stratification(P)
    check_nilpotent(P, S)
    return S


def check_nilpotent(P, S):
    N = P.ring.profile.N
    for alpha, M in S.theta.items():
        if sum(alpha) < P.L:
            continue
        for row in M:
            for x in row:
                v = x.valuation()
                if v is not None and v < N:
                    raise NotNilpotent(
                        f"theta_{alpha} is nonzero mod p^{N} although |alpha| >= L={P.L}",
                        witness=render(x))


def strat_to_conn(S, L=None, check=True):
    if check:
        rep = cocycle_check(S)
        if rep.status == FAIL:
            raise CocycleFailed("stratification fails the cocycle condition",
                                witness=rep.witness)
    d = S.ring.d
    mats = []
    for i in range(d):
        e = tuple(1 if k == i else 0 for k in range(d))
        mats.append(S.get(e))
    if L is None:
        L = 1 + max((sum(a) for a, M in S.theta.items() if not mat_is_zero(M)), default=0)
    return PConnectionData(S.ring, S.rank, mats, L)


def strat_equal(S, T):
    keys = set(S.theta) | set(T.theta)
    return merge(mat_compare(S.get(a), T.get(a), f"theta{a}") for a in sorted(keys))


# -- operators attached to a stratification --------------------------------------


def theta_on_section(S, gamma, f, k):
    """theta_gamma(f e_k) = sum_beta p^|beta| C(gamma,beta) d_beta(f) theta_{gamma-beta}(e_k)."""
    p = S.ring.p
    out = [S.ring.zero(EXACT) for _ in range(S.rank)]
    for beta in itertools.product(*(range(g + 1) for g in gamma)):
        df = f
        for i, b in enumerate(beta):
            for _ in range(b):
                df = derivative(df, i)
        if df.is_zero():
            continue
        c = 1
        for g, b in zip(gamma, beta):
            c *= comb(g, b)
        df = df.scale_int(c * p ** sum(beta))
        col = S.get(tuple(g - b for g, b in zip(gamma, beta)))
        for r in range(S.rank):
            if not col[r][k].is_zero():
                out[r] = out[r] + df * col[r][k]
    return out


def theta_on_vector(S, gamma, vec):
    out = [S.ring.zero(EXACT) for _ in range(S.rank)]
    for k, f in enumerate(vec):
        if f.is_zero():
            continue
        part = theta_on_section(S, gamma, f, k)
        out = [a + b for a, b in zip(out, part)]
    return out


def eps_matrix(S, target, block=1):
    """E(Y_block) = sum_alpha Theta_alpha Y_block^[alpha] over `target`."""
    d = S.ring.d
    n = S.rank
    out = mat_zero(target, n)
    for alpha, M in S.theta.items():
        if mat_is_zero(M):
            continue
        ydiv = [0] * target.m
        for a, e in enumerate(alpha):
            ydiv[yindex(d, block, a)] = e
        mono = target.monomial(1, None, ydiv).with_exact_prec(EXACT)
        lifted = mat_map(M, lambda x: embed(x, target, []) * mono)
        out = mat_add(out, lifted)
    return out


def _pd_monomials(target, diffs, alphas):
    """(diff_1)^[a_1] ... (diff_d)^[a_d] for each alpha."""
    top = max((max(a) for a in alphas), default=0)
    tables = [pd_power_list(u, top) for u in diffs]
    out = {}
    for alpha in alphas:
        m = target.one()
        for a, e in enumerate(alpha):
            if e:
                m = m * tables[a][e]
        out[alpha] = m
    return out


def cocycle_d2(S):
    """E(Y_2) = E(Y_1) p_0(E) on the second level of the nerve."""
    base = S.ring
    d = base.d
    D2 = cech_ring(base, 2)
    E2 = eps_matrix(S, D2, block=2)
    E1 = eps_matrix(S, D2, block=1)
    diffs = [D2.y(yindex(d, 2, a)) - D2.y(yindex(d, 1, a)) for a in range(d)]
    alphas = [a for a, M in S.theta.items() if not mat_is_zero(M)]
    monos = _pd_monomials(D2, diffs, alphas)
    p0E = mat_zero(D2, S.rank)
    for alpha in alphas:
        M = S.theta[alpha]
        T = mat_map(M, lambda x: taylor(x, D2, block=0) if not x.is_zero() else D2.zero(EXACT))
        p0E = mat_add(p0E, mat_map(T, lambda x: x * monos[alpha]))
    return mat_compare(E2, mat_mul(E1, p0E), "cocycle on D^2")


def cocycle_conditions(S, cutoff=None):
    """The coefficientwise form of the cocycle: for mu != 0,
    sum_{alpha+beta=mu} (-1)^|beta| C(mu,alpha) theta_{beta+gamma}(Theta_alpha) = 0."""
    d = S.ring.d
    W = S.ring.W if cutoff is None else cutoff
    pairs = []
    zero_vec = [S.ring.zero(EXACT)] * S.rank
    for mu in multi_indices(d, W, 1):
        for gamma in multi_indices(d, W - sum(mu)):
            for k in range(S.rank):
                acc = list(zero_vec)
                for alpha in itertools.product(*(range(m + 1) for m in mu)):
                    beta = tuple(m - a for m, a in zip(mu, alpha))
                    col = [row[k] for row in S.get(alpha)]
                    if all(x.is_zero() for x in col):
                        continue
                    c = 1
                    for m, a in zip(mu, alpha):
                        c *= comb(m, a)
                    if sum(beta) % 2:
                        c = -c
                    img = theta_on_vector(S, tuple(b + g for b, g in zip(beta, gamma)), col)
                    acc = [x + y.scale_int(c) for x, y in zip(acc, img)]
                for r, x in enumerate(acc):
                    pairs.append((f"mu={mu} gamma={gamma} e{k + 1}[{r}]", x,
                                  S.ring.zero(EXACT)))
    return compare_many(pairs, min_prec=0)


def composition_check(S, samples, cutoff=3):
    """theta_gamma on f e_k agrees with iterated theta_{e_i}."""
    d = S.ring.d
    pairs = []
    for f in samples:
        for k in range(S.rank):
            vec = [f if r == k else S.ring.zero(EXACT) for r in range(S.rank)]
            for gamma in multi_indices(d, cutoff, 1):
                direct = theta_on_vector(S, gamma, vec)
                it = vec
                for i in range(d):
                    for _ in range(gamma[i]):
                        e = tuple(1 if t == i else 0 for t in range(d))
                        it = theta_on_vector(S, e, it)
                for r in range(S.rank):
                    pairs.append((f"gamma={gamma} f e{k + 1}[{r}]", direct[r], it[r]))
    return compare_many(pairs, min_prec=0)


def cocycle_check(S, samples=None, cutoff=None):
    ring = S.ring
    outs = [mat_compare(S.get((0,) * ring.d), mat_identity(ring, S.rank), "theta_0 = id")]
    if outs[0].status == FAIL:
        return outs[0]
    outs.append(cocycle_d2(S))
    outs.append(cocycle_conditions(S, cutoff))
    if samples is None:
        samples = [ring.x(a) for a in range(ring.d)] + [ring.x(0, -1) + ring.x(ring.d - 1, 2)]
    outs.append(composition_check(S, samples))
    return merge(outs)


def theta_prime_check(P, S, samples):
    """The Y^[e_i] coefficient of eps(f e_k) = Taylor(f) E e_k is
    p d_i(f) e_k + f A_i e_k."""
    base = S.ring
    d = base.d
    D1 = cech_ring(base, 1)
    E = eps_matrix(S, D1, block=1)
    pairs = []
    for f in samples:
        tf = taylor(f, D1, block=0)
        for k in range(S.rank):
            col = [tf * E[r][k] for r in range(S.rank)]
            for i in range(d):
                key = [0] * d + [0] * D1.m
                key[d + yindex(d, 1, i)] = 1
                key = tuple(key)
                for r in range(S.rank):
                    got = _coeff_poly(col[r], key, base)
                    want = f.scale_int(0) if r != k else p_diff(f, i)
                    want = want + f * P.matrices[i][r][k]
                    pairs.append((f"f={render(f)} e{k + 1} axis {i + 1} [{r}]", got, want))
    return compare_many(pairs)


def _coeff_poly(g, ykey, base):
    """The X-polynomial multiplying a fixed Y monomial."""
    d = base.d
    yk = ykey[d:]
    terms = {k[:d]: c for k, c in g.terms.items() if k[d:] == yk}
    return PdPoly.build(base, terms, g.shift, g.prec)


# -- random instances -------------------------------------------------------------


def _shift_matrix(ring, n):
    return [[ring.one() if j == i + 1 else ring.zero(EXACT) for j in range(n)]
            for i in range(n)]


def _mat_pow(M, k, ring):
    out = mat_identity(ring, len(M))
    for _ in range(k):
        out = mat_mul(out, M)
    return out


def random_integrable(profile, d, rank, seed):
    """A_i = g^-1 B_i g + p g^-1 d_i g with commuting nilpotent constants B_i
    (polynomials in the shift matrix) and unipotent g with affine entries."""
    rng = random.Random(seed)
    ring = PdRing(profile, d)
    p = profile.p
    Nm = _shift_matrix(ring, rank)
    Bs = []
    for _ in range(d):
        B = mat_zero(ring, rank)
        for k in range(1, rank):
            c = rng.randint(-3, 3) + p * rng.randint(-3, 3)
            B = mat_add(B, mat_map(_mat_pow(Nm, k, ring), lambda x: x.scale_int(c)))
        Bs.append(B)
    U = mat_zero(ring, rank)
    for i in range(rank):
        for j in range(i + 1, rank):
            a = rng.randrange(d)
            U[i][j] = ring.const(rng.randint(-2, 2)) + ring.x(a).scale_int(rng.randint(-2, 2))
    g = mat_add(mat_identity(ring, rank), U)
    ginv = mat_identity(ring, rank)
    term = mat_identity(ring, rank)
    negU = mat_map(U, lambda x: -x)
    for _ in range(rank):
        term = mat_mul(term, negU)
        ginv = mat_add(ginv, term)
    mats = []
    for i in range(d):
        A = mat_mul(mat_mul(ginv, Bs[i]), g)
        dg = mat_map(g, lambda x: p_diff(x, i))
        A = mat_add(A, mat_mul(ginv, dg))
        mats.append(A)
    return PConnectionData(ring, rank, mats, rank + 1)


def random_nonintegrable(profile, rank, seed):
    """A d = 2 integrable instance with a p X_2^k term added to A_1."""
    rng = random.Random(seed)
    for attempt in range(100):
        P = random_integrable(profile, 2, rank, rng.randrange(10**9))
        ring = P.ring
        k = rng.randint(1, 2)
        c = rng.choice([1, -1, 2, 3])
        i, j = (0, rank - 1) if rank > 1 else (0, 0)
        if rank > 2 and rng.random() < 0.5:
            i, j = 0, 1
        bump = ring.x(1, k).scale_int(c * profile.p)
        A1 = [row[:] for row in P.matrices[0]]
        A1[i][j] = A1[i][j] + bump
        Q = PConnectionData(ring, rank, [A1, P.matrices[1]], P.L)
        if not is_integrable(Q):
            return Q
    raise RuntimeError("could not produce a non-integrable perturbation")


# -- change of Frobenius lift -----------------------------------------------------


def taylor_tail_bound(p, W, vu, span=64):
    """Lower bound for the valuation of the discarded Taylor tail
    sum_{|a|>W} p^|a| d_a(f) u^[a] when f is integral and v(u) >= vu."""
    from .scalars import legendre_valuation
    return min(k + k * vu - legendre_valuation(k, p) for k in range(W + 1, W + 1 + span))


def _u_vector(di, dj):
    """(phi_j(X_a) - phi_i(X_a)) / p for each axis."""
    return [(a - b).divide_by_p() for a, b in zip(dj.phi_images, di.phi_images)]


def _pd_eval(S, coeff_map, us, ring):
    """sum_alpha coeff_map(Theta_alpha) u^[alpha]."""
    alphas = [a for a, M in S.theta.items() if not mat_is_zero(M)]
    monos = _pd_monomials(ring, us, alphas)
    out = mat_zero(ring, S.rank)
    for alpha in alphas:
        M = mat_map(S.theta[alpha], lambda x: coeff_map(x) if not x.is_zero() else ring.zero(EXACT))
        out = mat_add(out, mat_map(M, lambda x: x * monos[alpha]))
    return out


def transition_matrix(S, di, dj):
    """Matrix of iota_{j,i}: eps pulled back along X -> phi_i(X), Y -> u_ji."""
    check_compatible(di, dj)
    ring = S.ring
    return _pd_eval(S, lambda x: phi_apply(di, x), _u_vector(di, dj), ring)


def _frob_strat(S, dk):
    """Stratification of phi_k^* M: Theta's under phi_k, Y -> (phi_k(X+pY) - phi_k(X))/p."""
    base = S.ring
    d = base.d
    D1 = cech_ring(base, 1)
    imgs = []
    for a in range(d):
        full = subst_hom(dk.phi_images[a], [
            D1.x(b) + D1.y(yindex(d, 1, b)).mul_by_p() for b in range(d)], D1)
        imgs.append((full - embed(dk.phi_images[a], D1, [])).divide_by_p())
    return _pd_eval(S, lambda x: embed(phi_apply(dk, x), D1, []), imgs, D1), D1


def chart_change_iso(S, deltas, sections=None):
    """The transition matrices between Frobenius pullbacks for a family of
    pairwise compatible delta-structures, with their checks."""
    base = S.ring
    d = base.d
    k = len(deltas)
    for a in range(k):
        for b in range(a + 1, k):
            check_compatible(deltas[a], deltas[b])
    G = {}
    for a in range(k):
        for b in range(k):
            if a != b:
                G[(b, a)] = transition_matrix(S, deltas[a], deltas[b])
    outs = {}
    # identity when the lifts agree
    outs["identity"] = mat_compare(transition_matrix(S, deltas[0], deltas[0]),
                                   mat_identity(base, S.rank), "iota_{1,1}")
    if k >= 3:
        outs["cocycle"] = mat_compare(mat_mul(G[(1, 0)], G[(2, 1)]), G[(2, 0)],
                                      "iota21 iota32 - iota31")
    # linearity: pulling back eps(s) equals G21 phi_2(s)
    if sections is None:
        sections = [base.x(0), base.x(0, -1) + base.const(3)]
    lin = []
    D1 = cech_ring(base, 1)
    E = eps_matrix(S, D1, block=1)
    u = _u_vector(deltas[0], deltas[1])
    imgs = list(deltas[0].phi_images) + u
    vu = min((x.valuation() for x in u if not x.is_zero()), default=None)
    cap = EXACT if vu is None else taylor_tail_bound(base.p, base.W, vu)
    for f in sections:
        tf = taylor(f, D1, block=0)
        for kk in range(S.rank):
            col = [tf * E[r][kk] for r in range(S.rank)]
            pulled = [subst_hom(c, imgs, base).truncate_prec(cap) for c in col]
            want = [(G[(1, 0)][r][kk] * phi_apply(deltas[1], f)).truncate_prec(cap)
                    for r in range(S.rank)]
            for r in range(S.rank):
                lin.append((f"f={render(f)} e{kk + 1}[{r}]", pulled[r], want[r]))
    outs["linearity"] = compare_many(lin)
    # horizontality: E_1 Taylor(G21) = G21 E_2
    E1, D1 = _frob_strat(S, deltas[0])
    E2, _ = _frob_strat(S, deltas[1])
    G21 = G[(1, 0)]
    TG = mat_map(G21, lambda x: taylor(x, D1, block=0) if not x.is_zero() else D1.zero(EXACT))
    G21e = mat_map(G21, lambda x: embed(x, D1, []))
    outs["horizontal"] = mat_compare(mat_mul(E1, TG), mat_mul(G21e, E2), "E1 T(G21) - G21 E2")
    # coproduct generators are integral and congruent to Y^p
    cop = []
    p = base.p
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            for ax in range(d):
                moved = subst_hom(deltas[b].phi_images[ax], [
                    D1.x(c) + D1.y(yindex(d, 1, c)).mul_by_p() for c in range(d)], D1)
                phij = (moved - embed(deltas[a].phi_images[ax], D1, [])).divide_by_p()
                cop.append(integral(phij, f"phi_{a + 1}{b + 1}(Y{ax + 1})"))
                ypow = D1.y(yindex(d, 1, ax)) ** p
                cop.append(integral((phij - ypow).divide_by_p(),
                                    f"delta_{a + 1}{b + 1}(Y{ax + 1})"))
    outs["coproduct"] = merge(cop)
    return G, outs


def toric_comparison(profile, d, seed, count=100, span=5):
    """Taylor expansion against the substitution X -> X + pY on seeded
    Laurent monomials with exponents in [-span, span]."""
    rng = random.Random(seed)
    base = PdRing(profile, d)
    D1 = cech_ring(base, 1)
    imgs = [D1.x(a) + D1.y(yindex(d, 1, a)).mul_by_p() for a in range(d)]
    pairs = []
    for t in range(count):
        exps = [rng.randint(-span, span) for _ in range(d)]
        f = base.monomial(1, exps)
        pairs.append((f"X^{tuple(exps)}", taylor(f, D1, block=0), subst_hom(f, imgs, D1)))
    out = compare_many(pairs)
    out.detail["monomials"] = count
    return out
