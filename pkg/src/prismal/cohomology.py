"""De Rham complexes of p-connections and the Cech-de Rham bicomplex.

E^{r,s} holds rank-n vectors of s-forms over level r of the nerve.  The
Cech differential d1 alternates the face maps (face 0 twisted by eps), the
de Rham differential d2 is the connection extended by p d on X and d on Y.
Total differential: D = d1 + (-1)^r d2.

Derivatives in Y lower the divided-power weight, so identities involving
d2 only hold below the weight cutoff; comparisons are made on the window
of weight <= W - 2.
"""

import itertools
import random
from dataclasses import dataclass

from .crystal import (
    cech_face,
    cech_ring,
    eps_matrix,
    multi_indices,
    theta_on_vector,
    yindex,
)
from .errors import NotIntegrable, WindowTooSmall
from .polyalg import EXACT, FormVector, PdPoly, PdRing, derivative, embed, p_diff, wedge
from .report import FAIL, PASS, Outcome, compare_many, merge


# -- forms and module-valued forms ------------------------------------------------


def form_d(w):
    """p d on the X directions, d on the Y directions."""
    ring = w.ring
    d = ring.d
    out = FormVector(ring, w.degree + 1)
    for idx, g in w.coeffs.items():
        terms = {}
        for i in range(d):
            if i in idx:
                continue
            c = p_diff(g, i)
            if not c.is_zero():
                terms[(i,) + idx] = c
        for j in range(ring.m):
            if d + j in idx:
                continue
            c = derivative(g, d + j)
            if not c.is_zero():
                terms[(d + j,) + idx] = c
        out = out + FormVector(ring, w.degree + 1, terms)
    return out


def _embed_form(w, target):
    return FormVector(target, w.degree, {k: embed(c, target, []) for k, c in w.coeffs.items()})


def conn_d(P, vec):
    """d2 on a module-valued form: nabla(x) wedge omega + x d(omega)."""
    ring = vec[0].ring
    d = ring.d
    n = len(vec)
    out = [form_d(v) for v in vec]
    for l in range(n):
        for k in range(n):
            if vec[k].is_zero():
                continue
            for i in range(d):
                a = P.matrices[i][l][k]
                if a.is_zero():
                    continue
                dx = FormVector.basis(ring, (i,), embed(a, ring, []))
                out[l] = out[l] + wedge(dx, vec[k])
    return out


def _dimages(r, i, src, tgt):
    """Images of dX_a, dY_{j,a} under the face p_i (level r -> r + 1)."""
    d = src.d
    imgs = []
    for a in range(d):
        w = FormVector.basis(tgt, (a,))
        if i == 0:
            w = w + FormVector.basis(tgt, (d + yindex(d, 1, a),))
        imgs.append(w)
    for j in range(1, r + 1):
        for a in range(d):
            if i == 0:
                w = (FormVector.basis(tgt, (d + yindex(d, j + 1, a),))
                     - FormVector.basis(tgt, (d + yindex(d, 1, a),)))
            else:
                jj = j + 1 if i <= j else j
                w = FormVector.basis(tgt, (d + yindex(d, jj, a),))
            imgs.append(w)
    return imgs


def face_form(r, i, w):
    src = w.ring
    tgt = src.with_m(src.d * (r + 1))
    imgs = _dimages(r, i, src, tgt)
    out = FormVector(tgt, w.degree)
    for idx, g in w.coeffs.items():
        term = FormVector(tgt, 0, {(): cech_face(r, i, g)})
        for t in idx:
            term = wedge(term, imgs[t])
        out = out + term
    return out


def module_face(S, r, i, vec):
    pulled = [face_form(r, i, v) for v in vec]
    if i:
        return pulled
    tgt = pulled[0].ring
    E = eps_matrix(S, tgt, block=1)
    n = len(vec)
    out = []
    for l in range(n):
        acc = FormVector(tgt, vec[0].degree)
        for k in range(n):
            if E[l][k].is_zero() or pulled[k].is_zero():
                continue
            acc = acc + pulled[k].scale(E[l][k])
        out.append(acc)
    return out


def d1(S, r, vec):
    out = None
    for i in range(r + 2):
        f = module_face(S, r, i, vec)
        if i % 2:
            f = [-x for x in f]
        out = f if out is None else [a + b for a, b in zip(out, f)]
    return out


def total_d(P, S, r, vec):
    """D on E^{r,s}: returns (component in E^{r+1,s}, component in E^{r,s+1})."""
    a = d1(S, r, vec)
    b = conn_d(P, vec)
    if r % 2:
        b = [-x for x in b]
    return a, b


def _project(w, wmax):
    d = w.ring.d
    out = {}
    for idx, g in w.coeffs.items():
        terms = {k: c for k, c in g.terms.items() if sum(k[d:]) <= wmax}
        out[idx] = PdPoly.build(g.ring, terms, g.shift, g.prec)
    return FormVector(w.ring, w.degree, out)


def vec_compare(a, b, label, wmax):
    pairs = []
    for k, (x, y) in enumerate(zip(a, b)):
        diff = _project(x - y, wmax)
        for idx, c in diff.coeffs.items():
            pairs.append((f"{label} e{k + 1} {idx}", c, c.ring.zero(EXACT)))
    if not pairs:
        return Outcome(PASS)
    return compare_many(pairs, min_prec=0)


def vec_zero(ring, n, degree):
    return [FormVector(ring, degree) for _ in range(n)]


def random_module_form(ring, n, degree, rng, ymax=2, terms=2):
    d = ring.d
    nv = d + ring.m
    out = []
    for _ in range(n):
        coeffs = {}
        for idx in itertools.combinations(range(nv), degree):
            if rng.random() < 0.5:
                continue
            g = ring.zero(EXACT)
            for _ in range(terms):
                xexp = [rng.randint(-2, 2) for _ in range(d)]
                ydiv = [0] * ring.m
                if ring.m:
                    for _ in range(rng.randint(0, ymax)):
                        ydiv[rng.randrange(ring.m)] += 1
                g = g + ring.monomial(rng.randint(-3, 3), xexp, ydiv)
            coeffs[idx] = g
        out.append(FormVector(ring, degree, coeffs))
    return out


# -- de Rham complex of a p-connection ---------------------------------------------


@dataclass(eq=False)
class DeRhamComplex:
    """M tensor Omega^s over the chart; elements are dicts idx -> vector."""

    P: object

    @property
    def d(self):
        return self.P.d

    def differential(self, elem):
        P = self.P
        ring = P.ring
        n = P.rank
        out = {}
        for idx, v in elem.items():
            for i in range(self.d):
                if i in idx:
                    continue
                # theta_i(v) = p d_i v + A_i v
                tv = []
                for l in range(n):
                    acc = p_diff(v[l], i)
                    for k in range(n):
                        acc = acc + P.matrices[i][l][k] * v[k]
                    tv.append(acc)
                new = tuple(sorted((i,) + idx))
                sign = -1 if sum(1 for t in idx if t < i) % 2 else 1
                cur = out.get(new, [ring.zero(EXACT)] * n)
                out[new] = [c + (t if sign == 1 else -t) for c, t in zip(cur, tv)]
        return {k: v for k, v in out.items() if any(not x.is_zero() for x in v)}

    def random_element(self, degree, rng, span=2):
        ring = self.P.ring
        out = {}
        for idx in itertools.combinations(range(self.d), degree):
            v = []
            for _ in range(self.P.rank):
                g = ring.zero(EXACT)
                for _ in range(2):
                    g = g + ring.monomial(rng.randint(-5, 5),
                                          [rng.randint(-span, span) for _ in range(self.d)])
                v.append(g)
            out[idx] = v
        return out

    def square_check(self, seed=0, samples=5):
        rng = random.Random(seed)
        pairs = []
        for s in range(self.d + 1):
            for t in range(samples):
                dd = self.differential(self.differential(self.random_element(s, rng)))
                for idx, v in dd.items():
                    for k, c in enumerate(v):
                        pairs.append((f"s={s} sample {t} {idx} e{k + 1}", c,
                                      c.ring.zero(EXACT)))
        return compare_many(pairs, min_prec=0) if pairs else Outcome(PASS)


def build_dr(P, seed=0):
    from .crystal import integrability_defect
    if integrability_defect(P) is not None:
        raise NotIntegrable("connection is not integrable")
    C = DeRhamComplex(P)
    rep = C.square_check(seed)
    if rep.status == FAIL:
        raise NotIntegrable(f"d^2 != 0: {rep.witness}")
    return C


def dr_to_forms(elem, ring, n):
    """Embed a de Rham element into E^{0,s}."""
    degree = len(next(iter(elem))) if elem else 0
    out = []
    for k in range(n):
        out.append(FormVector(ring, degree, {idx: v[k] for idx, v in elem.items()}))
    return out


# -- the bicomplex -------------------------------------------------------------------


@dataclass(eq=False)
class CechDeRhamBicomplex:
    P: object
    S: object
    r_max: int
    s_max: int

    def ring(self, r):
        return cech_ring(self.P.ring, r)

    def d1(self, r, vec):
        return d1(self.S, r, vec)

    def d2(self, r, vec):
        return conn_d(self.P, vec)

    def total(self, r, vec):
        return total_d(self.P, self.S, r, vec)


def build_bicomplex(P, S, r_max=2, s_max=None):
    W = P.ring.W
    if W < 3:
        raise WindowTooSmall("identities with d2 need W >= 3", minimal=3)
    s_max = P.d if s_max is None else s_max
    return CechDeRhamBicomplex(P, S, r_max, s_max)


def bicomplex_checks(B, seed=0, samples=2):
    rng = random.Random(seed)
    P, S = B.P, B.S
    n = P.rank
    wmax = P.ring.W - 2
    out = {}
    res = []
    # d1 d1 = 0 on E^{r,s}, r + 2 <= r_max + 1
    for r in range(0, B.r_max):
        ring = B.ring(r)
        for s in range(min(B.s_max, ring.nvars) + 1):
            for t in range(samples):
                x = random_module_form(ring, n, s, rng)
                y = B.d1(r + 1, B.d1(r, x))
                res.append(vec_compare(y, vec_zero(y[0].ring, n, s), f"d1d1 r={r} s={s}", wmax))
    out["d1d1"] = merge(res)
    res = []
    for r in range(0, B.r_max + 1):
        ring = B.ring(r)
        for s in range(min(B.s_max, ring.nvars - 2) + 1):
            for t in range(samples):
                x = random_module_form(ring, n, s, rng)
                y = B.d2(r, B.d2(r, x))
                res.append(vec_compare(y, vec_zero(ring, n, s + 2), f"d2d2 r={r} s={s}", wmax))
    out["d2d2"] = merge(res)
    res = []
    for r in range(0, B.r_max):
        ring = B.ring(r)
        for s in range(min(B.s_max, ring.nvars - 1) + 1):
            for t in range(samples):
                x = random_module_form(ring, n, s, rng)
                lhs = B.d1(r, B.d2(r, x))
                rhs = B.d2(r + 1, B.d1(r, x))
                res.append(vec_compare(lhs, rhs, f"d1d2 r={r} s={s}", wmax))
    out["d1d2"] = merge(res)
    res = []
    for r in range(0, B.r_max):
        ring = B.ring(r)
        for s in range(min(B.s_max, ring.nvars - 1) + 1):
            x = random_module_form(ring, n, s, rng)
            a, b = B.total(r, x)
            # D D x: components in E^{r+2,s}, E^{r+1,s+1}, E^{r,s+2}
            aa, ab = B.total(r + 1, a)
            ba, bb = B.total(r, b)
            res.append(vec_compare(ab, [-v for v in ba], f"DD mixed r={r} s={s}", wmax))
            res.append(vec_compare(bb, vec_zero(ring, n, s + 2), f"DD vertical r={r}", wmax))
            if r + 1 < B.r_max:
                res.append(vec_compare(aa, vec_zero(aa[0].ring, n, s), f"DD horizontal r={r}", wmax))
    out["total"] = merge(res)
    # filtered chain-map property of the two inclusions
    C = DeRhamComplex(P)
    res = []
    base = P.ring
    for s in range(base.d + 1):
        for t in range(samples):
            e = C.random_element(s, rng)
            if not e:
                continue
            x = dr_to_forms(e, base, n)
            _, b = B.total(0, x)
            de = C.differential(e)
            want = dr_to_forms(de, base, n) if de else vec_zero(base, n, s + 1)
            res.append(vec_compare(b, want, f"de Rham inclusion s={s}", wmax))
    out["dr_inclusion"] = merge(res)
    res = []
    for r in range(B.r_max):
        ring = B.ring(r)
        for t in range(samples):
            x = random_module_form(ring, n, 0, rng)
            a, _ = B.total(r, x)
            res.append(vec_compare(a, B.d1(r, x), f"Cech inclusion r={r}", wmax))
    out["cech_inclusion"] = merge(res)
    return out


# -- Smith form over Z_p ---------------------------------------------------------------


def _vp(n, p, cap):
    if n == 0:
        return cap
    v = 0
    while n % p == 0 and v < cap:
        n //= p
        v += 1
    return v


def smith_reduce(M, p, N, ncols=None):
    """Diagonalize an integer matrix over Z/p^N by pivoting on entries of
    least valuation.  Returns (valuations of the pivots, column transform V)
    with M V = U D for some invertible U."""
    mod = p ** N
    A = [[x % mod for x in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else (ncols or 0)
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]
    out = []
    t = 0
    while t < min(rows, cols):
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                v = _vp(A[i][j], p, N)
                if v < N and (best is None or v < best[0]):
                    best = (v, i, j)
                    if v == 0:
                        break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        for row in V:
            row[t], row[j] = row[j], row[t]
        uinv = pow(A[t][t] // p ** v, -1, mod)
        for i in range(t + 1, rows):
            if A[i][t]:
                f = (A[i][t] // p ** v) * uinv % mod
                A[i] = [(a - f * b) % mod for a, b in zip(A[i], A[t])]
        for j in range(t + 1, cols):
            if A[t][j]:
                f = (A[t][j] // p ** v) * uinv % mod
                for row in A:
                    row[j] = (row[j] - f * row[t]) % mod
                for row in V:
                    row[j] = (row[j] - f * row[t]) % mod
        out.append(v)
        t += 1
    return out, V


def elementary_divisors(M, p, N):
    """Valuations of the elementary divisors of an integer matrix over
    Z/p^N, one entry per pivot (zero divisors are left out)."""
    return smith_reduce(M, p, N)[0]


def kernel_basis(M, p, N, ncols):
    """Generators of ker(M) on (Z/p^N)^ncols, as integer vectors."""
    divs, V = smith_reduce(M, p, N, ncols)
    gens = []
    for j in range(ncols):
        e = divs[j] if j < len(divs) else N
        if e == 0:
            continue
        scale = p ** (N - e)
        gens.append([V[i][j] * scale % p ** N for i in range(ncols)])
    return gens


def kernel_invariants(M, p, N, ncols):
    """Cyclic factors p^e of ker(M) on (Z/p^N)^ncols, as a sorted list of e."""
    divs = elementary_divisors(M, p, N) if M else []
    ker = [min(v, N) for v in divs]
    ker += [N] * (ncols - len(divs))
    return sorted(e for e in ker if e > 0)


def _rows(images, cols):
    """Integer matrix from per-column {row_key: coefficient} maps."""
    keys = sorted({k for img in images for k in img}, key=repr)
    return [[img.get(k, 0) for img in images] for k in keys]


def _scatter(img, col, tag):
    for l, f in enumerate(img):
        if f.shift:
            raise ValueError("non-integral image")
        for key, c in f.terms.items():
            col[(tag, l, key)] = c


def h0_compare(P, S, window=2):
    """Compare ker(nabla) with the eps-invariant part of ker(nabla) on
    sections supported in the box of X-degrees [-window, window]^d, through
    kernel invariants over Z/p^N."""
    if window < 0:
        raise WindowTooSmall("X-degree window must be nonnegative", minimal=0)
    ring = P.ring
    d = ring.d
    n = P.rank
    p = ring.p
    N = ring.profile.N
    C = DeRhamComplex(P)
    alphas = multi_indices(d, ring.W, 1)
    dr_cols, tot_cols = [], []
    for kdeg in itertools.product(range(-window, window + 1), repeat=d):
        mono = ring.monomial(1, list(kdeg))
        for j in range(n):
            v = [mono if r == j else ring.zero(EXACT) for r in range(n)]
            col = {}
            for idx, img in C.differential({(): v}).items():
                _scatter(img, col, ("d",) + idx)
            dr_cols.append(col)
            tcol = dict(col)
            for alpha in alphas:
                _scatter(theta_on_vector(S, alpha, v), tcol, alpha)
            tot_cols.append(tcol)
    ncols = len(dr_cols)
    a = kernel_invariants(_rows(dr_cols, ncols), p, N, ncols)
    b = kernel_invariants(_rows(tot_cols, ncols), p, N, ncols)
    detail = {"de_rham": a, "total": b, "window": window}
    if a != b:
        return Outcome(FAIL, f"kernel invariants differ: de Rham {a}, total {b}", detail)
    return Outcome(PASS, detail=detail)


def perturbed_strat(S, alpha, l, k, c):
    """S with c added to entry (l, k) of Theta_alpha; a negative control."""
    from .crystal import StratificationData
    theta = {a: [row[:] for row in M] for a, M in S.theta.items()}
    M = theta.setdefault(tuple(alpha), [[S.ring.zero(EXACT)] * S.rank for _ in range(S.rank)])
    M[l][k] = M[l][k] + S.ring.const(c, EXACT)
    return StratificationData(S.ring, S.rank, theta)


# -- divided-power Poincare lemma -------------------------------------------------------


def pd_integrate(g, j):
    """Y^[a] -> Y^[a + e_j] on each term."""
    ring = g.ring
    d = ring.d
    terms = {}
    for k, c in g.terms.items():
        nk = list(k)
        nk[d + j] += 1
        terms[tuple(nk)] = c
    return PdPoly.build(ring, terms, g.shift, g.prec)


def _set_zero(g, j):
    d = g.ring.d
    return PdPoly.build(g.ring, {k: c for k, c in g.terms.items() if k[d + j] == 0},
                        g.shift, g.prec)


def pd_antiderivative(w):
    """F with d_Y F = w for a closed 1-form in the dY directions."""
    ring = w.ring
    d = ring.d
    F = ring.zero(EXACT)
    for j in range(ring.m):
        c = w.coeffs.get((d + j,))
        if c is None:
            continue
        for t in range(j):
            c = _set_zero(c, t)
        F = F + pd_integrate(c, j)
    return F


def dY(g):
    ring = g.ring
    d = ring.d
    return FormVector(ring, 1, {(d + j,): derivative(g, d + j) for j in range(ring.m)})


def pd_poincare_check(profile, d=2, seed=0, samples=20):
    ring = PdRing(profile, d, d)
    W = ring.W
    rng = random.Random(seed)
    forms = []
    # basis sample Y^[k-1] dY_j and f(X) Y^[k-1] dY_j
    for j in range(ring.m):
        for k in range(1, W + 1):
            ydiv = [0] * ring.m
            ydiv[j] = k - 1
            forms.append(FormVector.basis(ring, (d + j,), ring.monomial(1, None, ydiv)))
            forms.append(FormVector.basis(
                ring, (d + j,), ring.monomial(3, [1] + [0] * (d - 1), ydiv) + ring.x(0, -2)))
    # closed forms d(G) of random G with weight <= W
    for _ in range(samples):
        G = ring.zero(EXACT)
        for _ in range(4):
            ydiv = [0] * ring.m
            for _ in range(rng.randint(1, W)):
                ydiv[rng.randrange(ring.m)] += 1
            G = G + ring.monomial(rng.randint(-9, 9), [rng.randint(-2, 2) for _ in range(d)], ydiv)
        forms.append(dY(G))
    pairs = []
    for t, w in enumerate(forms):
        F = pd_antiderivative(w)
        wt = max((sum(k[d:]) for k in F.terms), default=0)
        if wt > W:
            return Outcome(FAIL, f"sample {t}: antiderivative weight {wt} > W")
        dF = dY(F)
        for idx in set(dF.coeffs) | set(w.coeffs):
            a = dF.coeffs.get(idx, ring.zero(EXACT))
            b = w.coeffs.get(idx, ring.zero(EXACT))
            pairs.append((f"sample {t} {idx}", a, b))
    out = compare_many(pairs, min_prec=0)
    out.detail["forms"] = len(forms)
    return out
