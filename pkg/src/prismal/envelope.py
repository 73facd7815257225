"""Generators of the prismatic and divided-power envelopes of (p, f_1..f_r).

Elements are kept as their images in R[1/p]: g[i][j] = delta^j(f_i/p) and
h[i][n] = f_i^n / n!.  The lambda operators compare two compatible
delta-structures.
"""

from dataclasses import dataclass
from math import factorial

from .deltaring import (
    check_compatible,
    delta_apply,
    delta_iter,
    phi_apply,
    phi_iter,
)
from .errors import (
    BasisExpansionFailed,
    DenominatorBudgetExceeded,
    DepthExceeded,
    InsufficientPrecision,
)
from .polyalg import EXACT, FormVector, p_diff, render, subst_hom
from .report import FAIL, INSUFFICIENT, PASS, Outcome, compare, compare_many, integral, merge


def shift_bound(p, j):
    """Denominator exponent of delta^j(x/p) for x not divisible by p."""
    return (p ** (j + 1) - 1) // (p - 1)


def envelope_budget(profile, gens, depth):
    """(needed_N, needed_V) for the generators up to the given depth."""
    need = 0
    for f in gens:
        v = f.valuation()
        if v is None or v >= 1:
            continue
        need = max(need, shift_bound(profile.p, depth))
    return need + 1, need


@dataclass
class EnvelopeGens:
    prism_gens: list
    pd_gens: list
    depth: int


def build_envelope(chart, depth=None, n_max=None, delta=None):
    profile = chart.profile
    depth = profile.J if depth is None else depth
    if depth > profile.J:
        raise DepthExceeded(f"depth {depth} exceeds J={profile.J}")
    n_max = profile.W if n_max is None else n_max
    delta = delta or chart.delta
    need_N, need_V = envelope_budget(profile, chart.ideal_gens, depth)
    if need_V > profile.V:
        raise DenominatorBudgetExceeded(need_V, profile.V)
    if need_N > profile.N:
        raise InsufficientPrecision(
            f"delta^{depth}(f/p) is unknown below N={need_N}", needed_N=need_N)
    prism, pd = [], []
    for f in chart.ideal_gens:
        g = [f.divide_by_p()]
        for _ in range(depth):
            g.append(delta_apply(delta, g[-1]))
        prism.append(g)
        h = [f.ring.one()]
        power = f.ring.one()
        for n in range(1, n_max + 1):
            power = power * f
            h.append(power.div_int(factorial(n)))
        pd.append(h)
    return EnvelopeGens(prism, pd, depth)


def envelope_invariants(chart, env, delta=None):
    delta = delta or chart.delta
    pairs = []
    for i, f in enumerate(chart.ideal_gens):
        g = env.prism_gens[i]
        pairs.append((f"p*g[{i}][0] = f", g[0].mul_by_p(), f))
        for j in range(len(g) - 1):
            pairs.append((f"g[{i}][{j + 1}] = delta(g[{i}][{j}])",
                          g[j + 1], delta_apply(delta, g[j])))
        h = env.pd_gens[i]
        for n in range(len(h)):
            pairs.append((f"n! h[{i}][{n}] = f^n", h[n].scale_int(factorial(n)), f ** n))
    return compare_many(pairs)


# -- lambda operators ----------------------------------------------------------


def lambda_rl(delta1, delta2, x, r, l):
    """p^-l [phi1^l(y) - phi2(phi1^(l-1)(y))] with y = delta1^(r-l)(x/p)."""
    if not 1 <= l <= r:
        raise ValueError("need 1 <= l <= r")
    check_compatible(delta1, delta2)
    y = delta_iter(delta1, x.divide_by_p(), r - l)
    z = phi_iter(delta1, y, l - 1)
    return (phi_apply(delta1, z) - phi_apply(delta2, z)).divide_by_p(l)


def lambda_table(delta1, delta2, x, r_max):
    """All lambda(r, l) for 1 <= l <= r <= r_max, sharing the iterates."""
    check_compatible(delta1, delta2)
    base = [x.divide_by_p()]
    for _ in range(r_max):
        base.append(delta_apply(delta1, base[-1]))
    table = {}
    for k in range(r_max):  # k = r - l
        z = base[k]
        for l in range(1, r_max - k + 1):
            if l > 1:
                z = phi_apply(delta1, z)
            val = (phi_apply(delta1, z) - phi_apply(delta2, z)).divide_by_p(l)
            table[(k + l, l)] = val
    return table, base


def check_lambda_integral(delta1, delta2, x, r_max):
    table, _ = lambda_table(delta1, delta2, x, r_max)
    res = [integral(v, f"lambda({r},{l})") for (r, l), v in sorted(table.items())]
    out = merge(res)
    out.detail["cells"] = len(table)
    return out


def lambda_recursion_check(delta1, delta2, x, r_max):
    """lambda(r+1,l) = lambda(r+1,l+1) - p^(-l-1)[phi1^l(y)^p - phi2(phi1^(l-1)(y))^p]."""
    p = delta1.p
    table, base = lambda_table(delta1, delta2, x, r_max)
    pairs = []
    for r in range(1, r_max):
        for l in range(1, r + 1):
            y = base[r - l]
            a = phi_iter(delta1, y, l)
            b = phi_apply(delta2, phi_iter(delta1, y, l - 1))
            corr = (a ** p - b ** p).divide_by_p(l + 1)
            pairs.append((f"({r + 1},{l})", table[(r + 1, l)],
                          table[(r + 1, l + 1)] - corr))
    return compare_many(pairs)


def key_identity_check(delta1, delta2, x, r):
    """delta1^r(x/p) = delta2(delta1^(r-1)(x/p)) + lambda(r,1)."""
    check_compatible(delta1, delta2)
    pairs = []
    y = x.divide_by_p()
    for k in range(1, r + 1):
        lhs = delta_apply(delta1, y)
        rhs = delta_apply(delta2, y) + lambda_rl(delta1, delta2, x, k, 1)
        pairs.append((f"r={k}", lhs, rhs))
        y = lhs
    return compare_many(pairs)


# -- presentation relations -------------------------------------------------------


def ghost(jet, p, k):
    """phi^k of an element from its jet (x, delta x, ..., delta^k x).

    Uses only ring operations: the jet of phi(x) is (x_i^p + p x_{i+1})_i.
    """
    cur = list(jet[:k + 1])
    for _ in range(k):
        cur = [cur[i] ** p + cur[i + 1].mul_by_p() for i in range(len(cur) - 1)]
    return cur[0]


def jet_from_ghosts(ghosts, p, ring):
    """Invert the ghost map: x_k = (w_k - w_k(x_0..x_{k-1}, 0)) / p^k."""
    jet = []
    for k, w in enumerate(ghosts):
        partial = ghost(jet + [ring.zero(EXACT)], p, k)
        jet.append((w - partial).divide_by_p(k))
    return jet


def scalar_jet(ring, c, depth):
    """delta-iterates of an integer under the identity Frobenius."""
    p = ring.p
    out = [c]
    for _ in range(depth):
        c = out[-1]
        out.append((c - c ** p) // p)
    return [ring.const(v, EXACT) for v in out]


def presentation_relation_check(chart, env, delta=None):
    """delta^l(f_i) two ways: directly, and as delta^l(p * v_i) through the
    delta-ring laws with v_i -> g[i][0]."""
    delta = delta or chart.delta
    ring = chart.ring
    p = chart.p
    pairs = []
    dp = 1 - p ** (p - 1)
    for i, f in enumerate(chart.ideal_gens):
        g = env.prism_gens[i]
        depth = len(g) - 1
        direct = [f]
        for _ in range(depth):
            direct.append(delta_apply(delta, direct[-1]))
        pj = scalar_jet(ring, p, depth)
        ghosts = [ghost(g, p, k) * ghost(pj, p, k) for k in range(depth + 1)]
        via_laws = jet_from_ghosts(ghosts, p, ring)
        for l in range(depth + 1):
            pairs.append((f"f{i + 1}, l={l}", direct[l], via_laws[l]))
        if depth >= 1:
            # the product law spelled out at l = 1
            explicit = (g[0] ** p).scale_int(dp) + g[1].scale_int(p ** p + p * dp)
            pairs.append((f"f{i + 1}, product law", direct[1], explicit))
    return compare_many(pairs)


# -- p-differential on envelope elements ------------------------------------------


def pdiff_on_envelope(chart, env, i, j):
    """p d(g[i][j]) as a 1-form, with a membership certificate for its
    coefficients in the prismatic envelope (d = 1, linear f only)."""
    g = env.prism_gens[i][j]
    ring = chart.ring
    form = FormVector(ring, 1, {(a,): p_diff(g, a) for a in range(ring.d)})
    outcomes = []
    for (a,), c in form.coeffs.items():
        outcomes.append(prism_membership(chart, env, i, c, f"dX{a + 1}"))
    out = merge(outcomes) if outcomes else Outcome(PASS)
    return form, out


def _linear_root(chart, f):
    """c with f = u (X - c), u a unit scalar; None otherwise."""
    ring = chart.ring
    if ring.d != 1 or f.shift:
        return None
    keys = set(f.terms)
    if not keys <= {(0,), (1,)} or (1,) not in keys:
        return None
    p = ring.p
    mod = p ** f.prec
    a = f.terms[(1,)]
    if a % p == 0:
        return None
    b = f.terms.get((0,), 0)
    return (-b * pow(a, -1, mod)) % mod


def _recenter(chart, F, c):
    """F(X + c) after clearing negative powers by a unit X^k."""
    ring = chart.ring
    low = min((k[0] for k in F.terms), default=0)
    if low < 0:
        F = F * ring.x(0, -low)
    return subst_hom(F, [ring.x(0) + ring.const(c, EXACT)], ring)


def prism_membership(chart, env, i, F, label="", depth=None):
    """Decide F in Z_p[f/p, delta(f/p), ...] for d = 1 and linear f.

    In t = X - c the generator delta^j(t/p) has degree p^j and a leading
    coefficient of valuation exactly -shift_bound(p, j), so reducing the top
    t-coefficient by the monomials g_0^e0 ... g_J^eJ (e_j < p below the top
    generator) decides membership among polynomials in t.
    """
    f = chart.ideal_gens[i]
    c = _linear_root(chart, f)
    if c is None:
        return Outcome(INSUFFICIENT, f"{label}: membership needs d = 1 and linear f")
    p = chart.p
    ring = chart.ring
    top_gen = len(env.prism_gens[i]) - 1 if depth is None else depth
    gens = [_recenter(chart, g, c) for g in env.prism_gens[i][:top_gen + 1]]
    G = _recenter(chart, F, c)
    if any(k[0] < 0 for k in G.terms):
        return Outcome(INSUFFICIENT, f"{label}: negative powers after recentring")
    cache = {}

    def mono(deg):
        # monomial of t-degree deg in base-p digits over the generators
        if deg in cache:
            return cache[deg]
        out = ring.one()
        rem = deg
        for j in range(len(gens)):
            last = j == len(gens) - 1
            e = rem if last else rem % p
            if e:
                out = out * gens[j] ** e
            rem = 0 if last else rem // p
        cache[deg] = out
        return out

    steps = 0
    while not G.is_zero():
        top = max(k[0] for k in G.terms)
        m = mono(top)
        lc_G = G.coeff((top,))
        lc_m = m.coeff((top,))
        q = _scalar_quotient(lc_G, lc_m, p)
        if q is None:
            return Outcome(FAIL, f"{label}: t^{top} coefficient {lc_G} is not reachable")
        G = G - m * ring.const(q, EXACT)
        steps += 1
        if steps > 10 * (top + 2):
            return Outcome(INSUFFICIENT, f"{label}: reduction did not terminate")
    if G.prec < 0:
        return Outcome(INSUFFICIENT, label, needed_N=chart.profile.N - G.prec)
    return Outcome(PASS)


def _scalar_quotient(a, b, p):
    """Integer q with a = q b to the precision of a, or None if a/b is not integral."""
    va = _v(a.num, p) - a.shift
    vb = _v(b.num, p) - b.shift
    if va < vb:
        return None
    k = max(a.known_mod - vb, 1)
    ua = a.num // p ** _v(a.num, p)
    ub = b.num // p ** _v(b.num, p)
    return (ua * pow(ub, -1, p ** k) * p ** (va - vb)) % p ** k


def _v(n, p):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# -- Frobenius image against the PD envelope -------------------------------------


def pd_expansion(chart, i, F, n_max=None):
    """Coefficients a_n with F = sum a_n f^n / n! (d = 1, linear f).

    Returns (a_n list as polynomials in the constant ring, certificate).
    """
    f = chart.ideal_gens[i]
    c = _linear_root(chart, f)
    if c is None:
        raise BasisExpansionFailed("PD expansion needs d = 1 and linear f")
    ring = chart.ring
    G = _recenter(chart, F, c)
    if any(k[0] < 0 for k in G.terms):
        raise BasisExpansionFailed("negative powers after recentring")
    top = max((k[0] for k in G.terms), default=0)
    if n_max is not None and top > n_max:
        raise BasisExpansionFailed(f"expansion needs n = {top} > n_max = {n_max}")
    # leading coefficient of f rescales t
    a = f.terms[(1,)]
    coeffs = []
    for n in range(top + 1):
        b = G.coeff((n,))
        poly = ring.scalar(b).scale_int(factorial(n))
        poly = poly.div_int(a ** n) if a != 1 else poly
        coeffs.append(poly)
    return coeffs


def phi_envelope_compare(chart, env, i=0, j_max=None, m_max=2, delta=None):
    """(a) delta(x/p) + x^p/p^(p+1) = phi(x)/p^2;  (b) phi(g[i][j]) lies in
    the PD envelope, certified through the f-adic divided-power expansion;
    (c) the sign relating delta^m(x/p) to x^(p^m)/p^(1+p+...+p^m)."""
    delta = delta or chart.delta
    p = chart.p
    x = chart.ideal_gens[i]
    outcomes = []
    lhs = delta_apply(delta, x.divide_by_p()) + (x ** p).divide_by_p(p + 1)
    outcomes.append(compare(lhs, phi_apply(delta, x).divide_by_p(2), "m=1 identity"))
    g = env.prism_gens[i]
    j_max = len(g) - 1 if j_max is None else j_max
    for j in range(j_max + 1):
        img = phi_apply(delta, g[j])
        try:
            coeffs = pd_expansion(chart, i, img)
        except BasisExpansionFailed as e:
            outcomes.append(Outcome(INSUFFICIENT, f"phi(g[{i}][{j}]): {e}"))
            continue
        for n, a in enumerate(coeffs):
            outcomes.append(integral(a, f"phi(g[{i}][{j}]) coefficient of f^[{n}]"))
        back = x.ring.zero()
        for n, a in enumerate(coeffs):
            back = back + a * env_pd_power(x, n)
        outcomes.append(compare(back, img, f"phi(g[{i}][{j}]) reassembled"))
    out = merge(outcomes)
    signs = {}
    for m in range(1, m_max + 1):
        signs[m] = leading_sign(chart, delta, x, m)
    out.detail["signs"] = signs
    return out


def env_pd_power(x, n):
    return (x ** n).div_int(factorial(n))


def leading_sign(chart, delta, x, m):
    """Signs e in {1, -1} with p^(1+...+p^m) delta^m(x/p) = e t^(p^m) mod p
    on the top t-coefficient (t the recentred coordinate)."""
    p = chart.p
    c = _linear_root(chart, x)
    if c is None:
        return None
    G = _recenter(chart, delta_iter(delta, x.divide_by_p(), m), c)
    top = p ** m
    lc = G.coeff((top,))
    s = shift_bound(p, m)
    val = lc.num * p ** (s - lc.shift) if lc.shift <= s else None
    if val is None:
        return []
    a = x.terms[(1,)]
    # undo the leading unit of x^(p^m)
    val = val * pow(a, -(p ** m), p)
    return [e for e in (1, -1) if (val - e) % p == 0]
