"""Independent sympy computations used as oracles.

Everything here works over Q with plain rational arithmetic; nothing is
shared with the package beyond the input data.
"""

from fractions import Fraction
from functools import lru_cache

import sympy

X = sympy.symbols("X")


def phi_sym(expr, delta_expr, p):
    """Frobenius lift X -> X^p + p delta(X) on a rational function of X."""
    return sympy.expand(expr.subs(X, X ** p + p * delta_expr))


def delta_sym(expr, delta_expr, p):
    return sympy.expand((phi_sym(expr, delta_expr, p) - expr ** p) / p)


def lambda_sym(d1, d2, x, r, l, p):
    """p^-l [phi1^l(y) - phi2(phi1^(l-1)(y))] with y = delta1^(r-l)(x/p)."""
    y = x / p
    for _ in range(r - l):
        y = delta_sym(y, d1, p)
    z = y
    for _ in range(l - 1):
        z = phi_sym(z, d1, p)
    return sympy.expand((phi_sym(z, d1, p) - phi_sym(z, d2, p)) / p ** l)


def coeffs(expr, order=34):
    """{exponent: Fraction} for a Laurent polynomial in X; rational functions
    are expanded at X = infinity up to `order` terms, which is p-adically
    convergent when the leading term is a unit monomial."""
    expr = sympy.together(sympy.expand(expr))
    den = sympy.denom(expr)
    if den.free_symbols and not sympy.Poly(den, X).is_monomial:
        u = sympy.symbols("u")
        ser = sympy.series(expr.subs(X, 1 / u), u, 0, order).removeO()
        expr = sympy.expand(ser.subs(u, 1 / X))
    else:
        expr = sympy.expand(expr)
    out = {}
    for term in sympy.Add.make_args(expr):
        c, e = term.as_coeff_exponent(X)
        if c:
            out[int(e)] = out.get(int(e), Fraction(0)) + Fraction(int(c.p), int(c.q))
    return {k: v for k, v in out.items() if v}


def max_denominator_valuation(expr, p):
    worst = 0
    for c in coeffs(expr).values():
        d = c.denominator
        v = 0
        while d % p == 0:
            d //= p
            v += 1
        worst = max(worst, v)
    return worst


def poly_coeffs(f):
    """{exponent: Fraction} from a one-variable PdPoly, using balanced digits."""
    p = f.ring.p
    mod = p ** (f.prec + f.shift) if f.prec < 10 ** 6 else None  # exact data stays as is
    out = {}
    for k, c in f.terms.items():
        if mod and c > mod // 2:
            c -= mod
        out[k[0]] = Fraction(c, p ** f.shift)
    return {k: v for k, v in out.items() if v}


def agree(f, expr):
    """f equals expr to the precision f carries."""
    p = f.ring.p
    a, b = poly_coeffs(f), coeffs(expr)
    for k in set(a) | set(b):
        diff = a.get(k, Fraction(0)) - b.get(k, Fraction(0))
        if diff == 0:
            continue
        num, den = diff.numerator, diff.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        if v < min(f.prec, 10 ** 6):
            return False
    return True


@lru_cache(maxsize=None)
def _phi_power(e, delta_src, p, order):
    d = sympy.sympify(delta_src)
    return sympy.expand(sum(
        c * X ** k for k, c in coeffs((X ** p + p * d) ** e, order).items()))


def delta_laurent(terms, delta_src, p, order=34):
    """delta of sum c X^e given as [(c, e)], negative powers of phi(X)
    expanded at infinity (cached per exponent)."""
    f = sum(c * X ** e for c, e in terms)
    img = sum(c * _phi_power(e, delta_src, p, order) for c, e in terms)
    return sympy.expand((img - f ** p) / p)
