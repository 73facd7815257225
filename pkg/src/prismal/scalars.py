"""Truncated p-adic scalars with a tracked power-of-p denominator.

A scalar is the triple (shift s, num, absprec M) standing for p^(-s) * num,
where num is known modulo p^M, so the value is known modulo p^(M - s).
"""

from dataclasses import dataclass
from enum import Enum

from .errors import DenominatorBudgetExceeded


def is_prime(n):
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def vp(n, p):
    """Valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def digit_sum(n, p):
    s = 0
    while n:
        s += n % p
        n //= p
    return s


def legendre_valuation(n, p):
    """v_p(n!) via Legendre's digit-sum formula."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return (n - digit_sum(n, p)) // (p - 1)


@dataclass(frozen=True)
class PrecisionProfile:
    p: int
    N: int
    V: int
    W: int = 8
    J: int = 4
    L: int = 4

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.N < 2 or self.V < 0 or self.W < 1 or self.J < 0 or self.L < 1:
            raise ValueError(f"invalid precision profile {self}")


class Verdict(Enum):
    INTEGRAL = "integral"
    NON_INTEGRAL = "non-integral"
    INSUFFICIENT = "insufficient-precision"


@dataclass(frozen=True)
class Integrality:
    verdict: Verdict
    valuation: int | None = None

    @property
    def ok(self):
        return self.verdict is Verdict.INTEGRAL


@dataclass(frozen=True)
class RationalScalar:
    profile: PrecisionProfile
    shift: int
    num: int
    absprec: int

    @property
    def p(self):
        return self.profile.p

    @classmethod
    def raw(cls, profile, shift, num, absprec):
        """Build without canonicalizing (used to exercise edge cases)."""
        return cls(profile, shift, num % profile.p ** max(absprec, 0), absprec)

    @classmethod
    def make(cls, profile, shift, num, absprec):
        p = profile.p
        mod = p ** max(absprec, 0)
        num %= mod
        if num == 0:
            return cls(profile, 0, 0, absprec - shift)
        while shift > 0 and num % p == 0:
            num //= p
            shift -= 1
            absprec -= 1
        if shift > profile.V:
            raise DenominatorBudgetExceeded(shift, profile.V)
        return cls(profile, shift, num, absprec)

    @classmethod
    def from_int(cls, profile, n, absprec=None):
        return cls.make(profile, 0, n, profile.N if absprec is None else absprec)

    @property
    def known_mod(self):
        """Exponent e such that the value is known modulo p^e."""
        return self.absprec - self.shift

    def balanced(self):
        mod = self.p ** max(self.absprec, 0)
        n = self.num
        if mod and n > mod // 2:
            n -= mod
        return n

    def __str__(self):
        n = self.balanced()
        if self.shift == 0:
            return str(n)
        return f"{n}/{self.p}^{self.shift}"


def _align(a, b):
    if a.profile != b.profile:
        raise ValueError("scalars live under different profiles")
    s = max(a.shift, b.shift)
    p = a.p
    na = a.num * p ** (s - a.shift)
    nb = b.num * p ** (s - b.shift)
    return s, na, nb


def _val(a):
    if a.num == 0:
        return None
    return vp(a.num, a.p) - a.shift


def scalar_arith(op, a, b):
    """Exact ring arithmetic on the represented values, pessimistic precision."""
    if op in ("add", "sub"):
        s, na, nb = _align(a, b)
        k = min(a.known_mod, b.known_mod)
        n = na + nb if op == "add" else na - nb
        return RationalScalar.make(a.profile, s, n, k + s)
    if op == "mul":
        if a.profile != b.profile:
            raise ValueError("scalars live under different profiles")
        va, vb = _val(a), _val(b)
        ka, kb = a.known_mod, b.known_mod
        cands = [ka + kb]
        if va is not None:
            cands.append(kb + va)
        if vb is not None:
            cands.append(ka + vb)
        k = min(cands)
        s = a.shift + b.shift
        return RationalScalar.make(a.profile, s, a.num * b.num, k + s)
    raise ValueError(f"unknown op {op!r}")


def divide_by_p(a):
    p = a.p
    if a.num % p == 0 and a.num != 0:
        return RationalScalar.make(a.profile, a.shift, a.num // p, a.absprec - 1)
    if a.num == 0:
        return RationalScalar.make(a.profile, 0, 0, a.absprec - 1)
    if a.shift + 1 > a.profile.V:
        raise DenominatorBudgetExceeded(a.shift + 1, a.profile.V)
    return RationalScalar(a.profile, a.shift + 1, a.num, a.absprec)


def mul_by_p(a):
    p = a.p
    if a.shift > 0:
        return RationalScalar.make(a.profile, a.shift - 1, a.num, a.absprec)
    return RationalScalar.make(a.profile, 0, a.num * p, a.absprec + 1)


def assert_integral(a):
    """Three-valued integrality certificate for a (possibly raw) scalar."""
    p = a.p
    r = a.num % p ** max(a.absprec, 0) if a.absprec > 0 else 0
    if r == 0:
        if a.absprec - a.shift >= 0:
            return Integrality(Verdict.INTEGRAL)
        return Integrality(Verdict.INSUFFICIENT)
    v = vp(r, p)
    if v >= a.shift:
        return Integrality(Verdict.INTEGRAL)
    return Integrality(Verdict.NON_INTEGRAL, v - a.shift)
