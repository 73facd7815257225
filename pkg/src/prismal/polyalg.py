"""Sparse Laurent polynomials in X_1..X_d tensored with divided powers Y^[a].

Coefficients are p-adic numbers of the form c / p^S sharing one shift S per
polynomial, known modulo p^prec (absolute).  The divided-power basis keeps
coefficients integral: Y^[a] * Y^[b] = C(a+b, a) Y^[a+b], and everything of
PD weight above W is discarded (that ideal is closed under the product, so
truncation commutes with every operation).
"""

import os
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

from .errors import (
    DenominatorBudgetExceeded,
    DepthExceeded,
    NonInvertibleImage,
    TermBudgetExceeded,
)
from .scalars import Integrality, RationalScalar, Verdict, vp


EXACT = 10**9  # precision sentinel for exact integer data


def max_terms():
    return int(os.environ.get("PRISMAL_MAX_TERMS", 10**6))


@lru_cache(maxsize=None)
def _pd_power_coeff(alpha, k):
    """Integer c with (Y^[alpha])^[k] = c * Y^[k alpha] for |alpha| >= 1."""
    num = 1
    for a in alpha:
        num *= factorial(a * k) // factorial(a) ** k
    q, r = divmod(num, factorial(k))
    assert r == 0
    return q


def _split_unit(n, p):
    v = vp(n, p)
    return v, n // p**v


@dataclass(frozen=True)
class PdRing:
    """The ambient ring: d Laurent variables, m divided-power variables."""

    profile: object
    d: int
    m: int = 0

    @property
    def p(self):
        return self.profile.p

    @property
    def W(self):
        return self.profile.W

    @property
    def nvars(self):
        return self.d + self.m

    def key(self, xexp=None, ydiv=None):
        xexp = tuple(xexp) if xexp is not None else (0,) * self.d
        ydiv = tuple(ydiv) if ydiv is not None else (0,) * self.m
        if len(xexp) != self.d or len(ydiv) != self.m:
            raise ValueError("exponent vector has the wrong length")
        if any(a < 0 for a in ydiv):
            raise ValueError("divided-power exponents must be nonnegative")
        return xexp + ydiv

    def zero(self, prec=None):
        return PdPoly(self, {}, 0, self.profile.N if prec is None else prec)

    def const(self, n, prec=None):
        return PdPoly.build(self, {self.key(): n}, 0,
                            self.profile.N if prec is None else prec)

    def one(self):
        return self.const(1)

    def scalar(self, s):
        """Embed a RationalScalar."""
        return PdPoly.build(self, {self.key(): s.num}, s.shift, s.known_mod)

    def monomial(self, c=1, xexp=None, ydiv=None):
        return PdPoly.build(self, {self.key(xexp, ydiv): c}, 0, self.profile.N)

    def x(self, i, e=1):
        xexp = [0] * self.d
        xexp[i] = e
        return self.monomial(1, xexp)

    def y(self, j, k=1):
        ydiv = [0] * self.m
        ydiv[j] = k
        return self.monomial(1, None, ydiv)

    def with_m(self, m):
        return PdRing(self.profile, self.d, m)


class PdPoly:
    __slots__ = ("ring", "terms", "shift", "prec")

    def __init__(self, ring, terms, shift, prec):
        # trusted constructor: terms already reduced and canonical
        self.ring = ring
        self.terms = terms
        self.shift = shift
        self.prec = prec

    @classmethod
    def build(cls, ring, terms, shift, prec):
        """Reduce modulo p^(prec + shift), drop zeros, canonicalize the shift."""
        p = ring.p
        e = prec + shift
        if e <= 0:
            return cls(ring, {}, 0, prec)
        mod = p**e if e < EXACT // 2 else 0
        W = ring.W
        d = ring.d
        out = {}
        for key, c in terms.items():
            if mod:
                c %= mod
            if c:
                if ring.m and sum(key[d:]) > W:
                    continue
                out[key] = c
        if not out:
            return cls(ring, {}, 0, prec)
        while shift > 0 and all(c % p == 0 for c in out.values()):
            out = {k: c // p for k, c in out.items()}
            shift -= 1
        if shift > ring.profile.V:
            raise DenominatorBudgetExceeded(shift, ring.profile.V)
        if len(out) > max_terms():
            raise TermBudgetExceeded(f"{len(out)} terms exceed PRISMAL_MAX_TERMS")
        return cls(ring, out, shift, prec)

    # -- inspection ---------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def valuation(self):
        """Minimum coefficient valuation; None for the zero polynomial."""
        if not self.terms:
            return None
        p = self.ring.p
        return min(vp(c, p) for c in self.terms.values()) - self.shift

    def coeff(self, key):
        """Coefficient at `key` as a RationalScalar."""
        c = self.terms.get(tuple(key), 0)
        return RationalScalar.make(self.ring.profile, self.shift, c,
                                   self.prec + self.shift)

    def weight_part(self, w):
        d = self.ring.d
        return PdPoly(self.ring,
                      {k: c for k, c in self.terms.items() if sum(k[d:]) == w},
                      self.shift, self.prec)

    def is_pure_x(self):
        d = self.ring.d
        return all(not any(k[d:]) for k in self.terms)

    def integrality(self):
        v = self.valuation()
        if v is not None and v < 0:
            return Integrality(Verdict.NON_INTEGRAL, v)
        if self.prec < 0:
            return Integrality(Verdict.INSUFFICIENT)
        return Integrality(Verdict.INTEGRAL)

    def __repr__(self):
        return f"PdPoly({render(self)})"

    # -- ring operations ----------------------------------------------------

    def _check(self, other):
        if self.ring != other.ring:
            raise ValueError("polynomials live in different rings")

    def _coerce(self, other):
        if isinstance(other, PdPoly):
            self._check(other)
            return other
        if isinstance(other, int):
            return PdPoly.build(self.ring, {self.ring.key(): other}, 0, EXACT)
        if isinstance(other, RationalScalar):
            return self.ring.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return _add(self, other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return _add(self, other, -1)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return _add(other, self, -1)

    def __neg__(self):
        return PdPoly.build(self.ring, {k: -c for k, c in self.terms.items()},
                            self.shift, self.prec)

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale_int(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            return inverse(self) ** (-n)
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale_int(self, n):
        """Multiply by an exact integer."""
        if n == 0:
            return self.ring.zero(EXACT)
        v = vp(n, self.ring.p)
        return PdPoly.build(self.ring, {k: c * n for k, c in self.terms.items()},
                            self.shift, self.prec + v)

    def div_int(self, n):
        """Exact division by a nonzero integer (its p-part becomes shift)."""
        p = self.ring.p
        v, u = _split_unit(n, p)
        e = self.prec + self.shift + v
        if e <= 0 or not self.terms:
            return PdPoly.build(self.ring, {}, 0, self.prec - v)
        uinv = pow(u, -1, p**e) if e < EXACT // 2 else None
        if uinv is None:
            # exact data: divide the unit part exactly when possible
            if all(c % u == 0 for c in self.terms.values()):
                return PdPoly.build(self.ring,
                                    {k: c // u for k, c in self.terms.items()},
                                    self.shift + v, self.prec - v)
            uinv = pow(u, -1, p ** (self.ring.profile.N + self.shift + v))
            return PdPoly.build(self.ring, {k: c * uinv for k, c in self.terms.items()},
                                self.shift + v, self.ring.profile.N)
        return PdPoly.build(self.ring, {k: c * uinv for k, c in self.terms.items()},
                            self.shift + v, self.prec - v)

    def divide_by_p(self, times=1):
        return self.div_int(self.ring.p**times)

    def mul_by_p(self, times=1):
        return self.scale_int(self.ring.p**times)

    def truncate_prec(self, prec):
        """Forget digits beyond absolute precision `prec`."""
        return PdPoly.build(self.ring, dict(self.terms), self.shift, min(prec, self.prec))

    def with_exact_prec(self, prec):
        """Re-declare the precision (for exact integer data)."""
        return PdPoly.build(self.ring, dict(self.terms), self.shift, prec)

    def map_ring(self, ring, keymap=None):
        """Relabel into another ring by a key map (no arithmetic)."""
        terms = {}
        for k, c in self.terms.items():
            nk = keymap(k) if keymap else k
            terms[nk] = terms.get(nk, 0) + c
        return PdPoly.build(ring, terms, self.shift, self.prec)

    def equals(self, other):
        """Certified equality: difference vanishes at its working precision."""
        return (self - other).is_zero()


def _add(f, g, sign):
    p = f.ring.p
    s = max(f.shift, g.shift)
    prec = min(f.prec, g.prec)
    ff = p ** (s - f.shift)
    fg = p ** (s - g.shift)
    out = {k: c * ff for k, c in f.terms.items()}
    for k, c in g.terms.items():
        out[k] = out.get(k, 0) + sign * c * fg
    return PdPoly.build(f.ring, out, s, prec)


def _mul_prec(f, g):
    vf, vg = f.valuation(), g.valuation()
    cands = [f.prec + g.prec]
    if vf is not None:
        cands.append(vf + g.prec)
    if vg is not None:
        cands.append(vg + f.prec)
    return min(cands)


def poly_mul(f, g):
    """Exact product with the divided-power law, truncated at weight W."""
    f._check(g)
    ring = f.ring
    prec = _mul_prec(f, g)
    out = {}
    if ring.m == 0:
        for k1, c1 in f.terms.items():
            for k2, c2 in g.terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                out[key] = out.get(key, 0) + c1 * c2
    else:
        d, W = ring.d, ring.W
        gs = [(k[:d], k[d:], sum(k[d:]), c) for k, c in g.terms.items()]
        for k1, c1 in f.terms.items():
            x1, y1 = k1[:d], k1[d:]
            w1 = sum(y1)
            for x2, y2, w2, c2 in gs:
                if w1 + w2 > W:
                    continue
                b = 1
                if w1 and w2:
                    for a1, a2 in zip(y1, y2):
                        if a1 and a2:
                            b *= comb(a1 + a2, a1)
                key = tuple(a + b_ for a, b_ in zip(x1, x2)) + tuple(
                    a + b_ for a, b_ in zip(y1, y2))
                out[key] = out.get(key, 0) + b * c1 * c2
    return PdPoly.build(ring, out, f.shift + g.shift, prec)


def derivative(f, i):
    """Plain partial derivative in variable i (X_i for i < d, else PD Y)."""
    ring = f.ring
    out = {}
    if i < ring.d:
        for k, c in f.terms.items():
            e = k[i]
            if e:
                nk = k[:i] + (e - 1,) + k[i + 1:]
                out[nk] = out.get(nk, 0) + e * c
    else:
        for k, c in f.terms.items():
            e = k[i]
            if e:
                nk = k[:i] + (e - 1,) + k[i + 1:]
                out[nk] = out.get(nk, 0) + c
    return PdPoly.build(ring, out, f.shift, f.prec)


def p_diff(f, i):
    """p * d/dX_i."""
    if not 0 <= i < f.ring.d:
        raise ValueError(f"axis {i} out of range")
    return derivative(f, i).mul_by_p()


def multi_derivative(f, alpha):
    for i, a in enumerate(alpha):
        for _ in range(a):
            f = derivative(f, i)
    return f


def inverse(u):
    """Inverse of a unit c X^a (1 + small) by the geometric series."""
    ring = u.ring
    p = ring.p
    d = ring.d
    lead_key = None
    lead_c = None
    if u.shift:
        raise NonInvertibleImage("image is not integral")
    for k, c in u.terms.items():
        if not any(k[d:]) and c % p:
            if lead_key is not None:
                raise NonInvertibleImage("image has two unit monomials")
            lead_key, lead_c = k, c
    if lead_key is None:
        raise NonInvertibleImage("image has no unit monomial")
    inv_key = tuple(-a for a in lead_key[:d]) + (0,) * ring.m
    if len(u.terms) == 1:
        sign = lead_c if lead_c in (1, -1) else None
        if sign is None and u.prec < EXACT // 2 and lead_c == p**u.prec - 1:
            sign = -1
        if sign is not None:
            # a signed monomial inverts exactly
            return PdPoly.build(ring, {inv_key: sign}, 0, u.prec)
    # an infinite series can only be known to finite precision
    e = min(u.prec, ring.profile.N + ring.profile.V)
    cinv = pow(lead_c, -1, p**max(e, 1))
    lead_inv = PdPoly.build(ring, {inv_key: cinv}, 0, e)
    rest = PdPoly.build(ring, {k: c for k, c in u.terms.items() if k != lead_key},
                        0, e)
    q = -(rest * lead_inv)
    total = ring.one()
    power = ring.one()
    bound = max(e, 1) + ring.W + 2
    for _ in range(bound):
        power = power * q
        if power.is_zero():
            return total * lead_inv
        v = power.valuation()
        if v >= e:
            # the tail has valuation >= v; the result is known mod p^e
            return (total * lead_inv).truncate_prec(e)
        total = total + power
    raise NonInvertibleImage("inverse series does not terminate at this precision")


def pd_power_list(u, n):
    """[u^[0], ..., u^[n]] for u in the divided-power ideal."""
    ring = u.ring
    d = ring.d
    p = ring.p
    acc = [ring.one()] + [ring.zero(EXACT)] * n
    for k, c in u.terms.items():
        t = PdPoly(ring, {k: c}, u.shift, u.prec)
        yk = k[d:]
        xk = k[:d]
        tp = [ring.one()]
        if any(yk):
            for j in range(1, n + 1):
                if sum(yk) * j > ring.W:
                    tp.append(ring.zero(EXACT))
                    continue
                coeff = _pd_power_coeff(yk, j)
                key = tuple(a * j for a in xk) + tuple(a * j for a in yk)
                mono = PdPoly.build(ring, {key: coeff}, 0, EXACT)
                tp.append((t.strip_key() ** j) * mono)
        else:
            if vp(c, p) - u.shift < 1:
                raise NonInvertibleImage("element is not in the divided-power ideal")
            power = ring.one()
            for j in range(1, n + 1):
                power = power * t
                tp.append(power.div_int(factorial(j)))
        new = []
        for j in range(n + 1):
            s = acc[j]
            for a in range(1, j + 1):
                s = s + acc[j - a] * tp[a]
            new.append(s)
        acc = new
    return acc


def _strip_key(self):
    """The scalar coefficient of a one-term polynomial, as a constant."""
    (k, c), = self.terms.items()
    return PdPoly(self.ring, {self.ring.key(): c}, self.shift, self.prec)


PdPoly.strip_key = _strip_key


def subst_hom(f, images, target=None):
    """Ring homomorphism determined by the images of X_1..X_d, Y_1..Y_m.

    X images must be units; Y images must lie in the divided-power ideal,
    and Y^[a] is sent to image^[a].
    """
    ring = f.ring
    if target is None:
        target = images[0].ring if images else ring
    d, m = ring.d, ring.m
    if len(images) != d + m:
        raise ValueError("need one image per variable")
    for img in images:
        if img.ring != target:
            raise ValueError("images must share the target ring")
        v = img.valuation()
        if v is not None and v < 0:
            raise NonInvertibleImage("images must be integral")
    # collect exponent ranges
    lo = [0] * (d + m)
    hi = [0] * (d + m)
    for k in f.terms:
        for i, e in enumerate(k):
            if e < lo[i]:
                lo[i] = e
            if e > hi[i]:
                hi[i] = e
    powers = []
    for i in range(d):
        table = {0: target.one()}
        cur = target.one()
        for e in range(1, hi[i] + 1):
            cur = cur * images[i]
            table[e] = cur
        if lo[i] < 0:
            inv = inverse(images[i])
            cur = target.one()
            for e in range(1, -lo[i] + 1):
                cur = cur * inv
                table[-e] = cur
        powers.append(table)
    for j in range(m):
        lst = pd_power_list(images[d + j], hi[d + j])
        powers.append(dict(enumerate(lst)))
    p = ring.p
    out = {}
    prec = f.prec + f.shift
    for k, c in f.terms.items():
        prod = None
        for i, e in enumerate(k):
            if e == 0:
                continue
            factor = powers[i][e]
            prod = factor if prod is None else prod * factor
        if prod is None:
            prod = target.one()
        vc = vp(c, p)
        prec = min(prec, vc + prod.prec)
        for kk, cc in prod.terms.items():
            out[kk] = out.get(kk, 0) + c * cc
    return PdPoly.build(target, out, f.shift, prec - f.shift)


def taylor(f, target, block=0):
    """Sum over alpha of p^|alpha| d_alpha(f) Y^[alpha], Y from `block`.

    `f` must be pure X in a ring with the same d; `target` carries the Y's.
    Computed term by term from the derivative formula, independently of
    subst_hom.
    """
    ring = f.ring
    d = ring.d
    W = target.W
    out = target.zero(EXACT)
    # enumerate alpha with |alpha| <= W
    stack = [((0,) * d, f)]
    seen = set()
    while stack:
        alpha, g = stack.pop()
        if alpha in seen:
            continue
        seen.add(alpha)
        if g.is_zero():
            continue
        ydiv = [0] * target.m
        for i, a in enumerate(alpha):
            ydiv[block * d + i] = a
        w = sum(alpha)
        lifted = PdPoly.build(
            target, {k[:d] + tuple(ydiv): c for k, c in g.terms.items()},
            g.shift, g.prec)
        out = out + lifted.mul_by_p(w)
        if w < W:
            for i in range(d):
                nxt = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1:]
                if nxt not in seen:
                    stack.append((nxt, derivative(g, i)))
    return out


def embed(f, target, ymap=None):
    """Include a polynomial into a ring with more Y variables.

    ymap sends each source Y index to a target Y index.
    """
    ring = f.ring
    d = ring.d
    ymap = ymap if ymap is not None else list(range(ring.m))

    def km(k):
        y = [0] * target.m
        for j, a in enumerate(k[d:]):
            y[ymap[j]] += a
        return k[:d] + tuple(y)

    return f.map_ring(target, km)


# -- rendering ----------------------------------------------------------------


def _render_coeff(c, shift, prec, p):
    s = shift
    while s > 0 and c % p == 0:
        c //= p
        s -= 1
    mod = p ** max(prec + s, 0)
    if mod and c > mod // 2:
        c -= mod
    return c, s


def _render_mono(key, d):
    parts = []
    for i, e in enumerate(key[:d]):
        if e == 1:
            parts.append(f"X{i + 1}")
        elif e:
            parts.append(f"X{i + 1}^{e}")
    for j, e in enumerate(key[d:]):
        if e:
            parts.append(f"Y{j + 1}^[{e}]")
    return "*".join(parts)


def render(f):
    """Canonical text: lexicographic terms, coefficients a/p^s."""
    if not f.terms:
        return "0"
    p = f.ring.p
    d = f.ring.d
    out = []
    for key in sorted(f.terms):
        c, s = _render_coeff(f.terms[key], f.shift, f.prec, p)
        mono = _render_mono(key, d)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        coeff = f"{a}/{p}^{s}" if s else str(a)
        if mono:
            body = mono if (a == 1 and not s) else f"{coeff}*{mono}"
        else:
            body = coeff
        out.append((sign, body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


# -- differential forms ---------------------------------------------------------


def _merge_sign(a, b):
    """Sign of sorting the concatenation a+b (both increasing), 0 if overlap."""
    if set(a) & set(b):
        return 0
    inv = 0
    for x in a:
        for y in b:
            if x > y:
                inv += 1
    return -1 if inv % 2 else 1


class FormVector:
    """Differential form sum of coeff * dZ_I over strictly increasing index
    tuples I.  Indices 0..d-1 are dX, d..d+m-1 are dY."""

    __slots__ = ("ring", "degree", "coeffs")

    def __init__(self, ring, degree, coeffs=None):
        self.ring = ring
        self.degree = degree
        self.coeffs = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise ValueError("index tuple does not match the degree")
            order = sorted(range(len(idx)), key=lambda t: idx[t])
            srt = tuple(idx[t] for t in order)
            if len(set(srt)) < len(srt):
                continue
            sign = _perm_sign(order)
            term = c if sign == 1 else -c
            if srt in self.coeffs:
                self.coeffs[srt] = self.coeffs[srt] + term
            else:
                self.coeffs[srt] = term
        self.coeffs = {k: v for k, v in self.coeffs.items() if not v.is_zero()}

    @classmethod
    def basis(cls, ring, idx, coeff=None):
        coeff = coeff if coeff is not None else ring.one()
        return cls(ring, len(idx), {tuple(idx): coeff})

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return FormVector(self.ring, self.degree, out)

    def __neg__(self):
        return FormVector(self.ring, self.degree, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f):
        if isinstance(f, int):
            return FormVector(self.ring, self.degree,
                              {k: v.scale_int(f) for k, v in self.coeffs.items()})
        return FormVector(self.ring, self.degree, {k: f * v for k, v in self.coeffs.items()})

    def equals(self, other):
        return (self - other).is_zero()

    def __repr__(self):
        return f"FormVector({render_form(self)})"


def _perm_sign(order):
    sign = 1
    seen = [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def wedge(w, e):
    """Graded-commutative exterior product."""
    if w.degree + e.degree > w.ring.nvars:
        return FormVector(w.ring, w.degree + e.degree)
    out = {}
    for i1, c1 in w.coeffs.items():
        for i2, c2 in e.coeffs.items():
            s = _merge_sign(i1, i2)
            if not s:
                continue
            idx = tuple(sorted(i1 + i2))
            term = c1 * c2
            if s < 0:
                term = -term
            out[idx] = out[idx] + term if idx in out else term
    return FormVector(w.ring, w.degree + e.degree, out)


def render_form(w):
    if w.is_zero():
        return "0"
    d = w.ring.d

    def name(i):
        return f"dX{i + 1}" if i < d else f"dY{i - d + 1}"

    parts = []
    for idx in sorted(w.coeffs):
        basis = "^".join(name(i) for i in idx) or "1"
        parts.append(f"({render(w.coeffs[idx])})*{basis}")
    return " + ".join(parts)
