"""Frobenius lifts and delta-structures on Laurent charts.

The base ring is Z_p with the identity Frobenius, so a delta-structure on
the chart is pinned down by the values delta(X_i), and
phi(X_i) = X_i^p + p delta(X_i).
"""

import random
from dataclasses import dataclass, field
from math import comb

from .errors import IncompatibleDeltas, NonInvertibleImage
from .polyalg import PdRing, inverse, subst_hom
from .report import FAIL, PASS, Outcome, compare, compare_many, integral, merge


@dataclass(frozen=True, eq=False)
class DeltaStructure:
    ring: PdRing
    delta_on_gens: tuple
    _images: tuple = field(default=None, repr=False)

    def __post_init__(self):
        ring = self.ring
        if ring.m:
            raise ValueError("delta-structures live on the chart ring (no Y variables)")
        gens = tuple(self.delta_on_gens)
        if len(gens) != ring.d:
            raise ValueError("need one delta value per chart variable")
        images = []
        for i, g in enumerate(gens):
            if g.ring != ring or not g.is_pure_x():
                raise ValueError(f"delta(X{i + 1}) must be a pure X polynomial")
            v = g.valuation()
            if v is not None and v < 0:
                raise NonInvertibleImage(f"delta(X{i + 1}) is not integral")
            img = ring.x(i, ring.p) + g.mul_by_p()
            inverse(img)  # raises if phi(X_i) is not a unit
            images.append(img)
        object.__setattr__(self, "delta_on_gens", gens)
        object.__setattr__(self, "_images", tuple(images))

    @property
    def p(self):
        return self.ring.p

    @property
    def phi_images(self):
        return self._images

    @classmethod
    def zero(cls, ring):
        return cls(ring, tuple(ring.zero() for _ in range(ring.d)))


@dataclass(frozen=True, eq=False)
class Chart:
    profile: object
    d: int
    ideal_gens: tuple
    delta: DeltaStructure
    delta2: DeltaStructure | None = None
    delta3: DeltaStructure | None = None

    @property
    def ring(self):
        return self.delta.ring

    @property
    def p(self):
        return self.profile.p


def phi_apply(delta, f):
    if not f.is_pure_x():
        raise ValueError("phi_apply expects a pure X polynomial")
    return subst_hom(f, list(delta.phi_images), delta.ring)


def phi_iter(delta, f, n):
    for _ in range(n):
        f = phi_apply(delta, f)
    return f


def delta_apply(delta, f):
    """(phi(f) - f^p) / p, also for f with denominators."""
    return (phi_apply(delta, f) - f ** delta.p).divide_by_p()


def delta_iter(delta, f, n):
    for _ in range(n):
        f = delta_apply(delta, f)
    return f


def sum_carry(x, y, p):
    """sum_{0<j<p} C(p,j)/p x^j y^(p-j), the correction in delta(x+y)."""
    out = x.ring.zero()
    for j in range(1, p):
        out = out + (x ** j * y ** (p - j)).scale_int(comb(p, j) // p)
    return out


def check_delta_axioms(delta, samples):
    """The product and sum laws of a delta-ring on each sample pair."""
    p = delta.p
    results = []
    for n, (x, y) in enumerate(samples):
        dx, dy = delta_apply(delta, x), delta_apply(delta, y)
        prod = x ** p * dy + y ** p * dx + (dx * dy).mul_by_p()
        plus = dx + dy - sum_carry(x, y, p)
        o = compare_many([
            (f"product law, pair {n}", delta_apply(delta, x * y), prod),
            (f"sum law, pair {n}", delta_apply(delta, x + y), plus),
        ])
        results.append(o)
        if o.status == FAIL:
            break
    out = merge(results)
    out.detail["pairs"] = len(results)
    return out


def check_compatible(delta1, delta2):
    """Raise unless delta1(X_i) = delta2(X_i) mod p for every i."""
    for i, (a, b) in enumerate(zip(delta1.delta_on_gens, delta2.delta_on_gens)):
        diff = a - b
        v = diff.valuation()
        if v is not None and v < 1:
            raise IncompatibleDeltas(
                f"delta1(X{i + 1}) - delta2(X{i + 1}) is not divisible by p")


def diff_d(delta1, delta2, f):
    """(phi2(f) - phi1(f)) / p^2."""
    check_compatible(delta1, delta2)
    return (phi_apply(delta2, f) - phi_apply(delta1, f)).divide_by_p(2)


def frobenius_congruence(delta, f):
    """phi(f) = f^p mod p."""
    d = phi_apply(delta, f) - f ** delta.p
    v = d.valuation()
    if v is None or v >= 1:
        return Outcome(PASS)
    return Outcome(FAIL, f"phi(f) - f^p has valuation {v}")


def diff_power_check(delta1, delta2, x, l_max=4, n=2):
    """d(x^l) = sum_i C(l,i) p^(n(l-i-1)) phi1(x)^i d(x)^(l-i)."""
    p = delta1.p
    dx = diff_d(delta1, delta2, x)
    fx = phi_apply(delta1, x)
    pairs = []
    for l in range(1, l_max + 1):
        rhs = x.ring.zero()
        for i in range(l):
            rhs = rhs + (fx ** i * dx ** (l - i)).scale_int(
                comb(l, i) * p ** (n * (l - i - 1)))
        pairs.append((f"l={l}", diff_d(delta1, delta2, x ** l), rhs))
    return compare_many(pairs)


def diff_frobenius_valuation_check(delta1, delta2, x, r_max=4):
    """d(phi1^r(x)) is divisible by p^r."""
    results = []
    y = x
    for r in range(1, r_max + 1):
        y = phi_apply(delta1, y)
        v = diff_d(delta1, delta2, y)
        o = integral(v.divide_by_p(r), f"r={r}")
        results.append(o)
    return merge(results)


def random_integral(ring, rng, degree=2, coeff=None, laurent=True, terms=3):
    """A small random integral polynomial in the chart variables."""
    coeff = coeff if coeff is not None else ring.p ** 2
    lo = -degree if laurent else 0
    f = ring.zero()
    for _ in range(terms):
        xexp = [rng.randint(lo, degree) for _ in range(ring.d)]
        f = f + ring.monomial(rng.randint(-coeff, coeff), xexp)
    return f


def random_pairs(ring, seed, count, **kw):
    rng = random.Random(seed)
    return [(random_integral(ring, rng, **kw), random_integral(ring, rng, **kw))
            for _ in range(count)]
