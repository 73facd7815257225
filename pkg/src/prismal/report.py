"""Check outcomes shared by the verification suites."""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
INSUFFICIENT = "insufficient-precision"
SKIPPED = "skipped"


@dataclass
class Outcome:
    status: str
    witness: str | None = None
    detail: dict = field(default_factory=dict)
    needed_N: int | None = None
    needed_V: int | None = None

    @property
    def ok(self):
        return self.status == PASS


def merge(outcomes):
    """First failure wins, then the first undecided result, else pass."""
    outcomes = list(outcomes)
    for o in outcomes:
        if o.status == FAIL:
            return o
    for o in outcomes:
        if o.status == INSUFFICIENT:
            return o
    detail = {}
    for o in outcomes:
        detail.update(o.detail)
    return Outcome(PASS, detail=detail)


def compare(lhs, rhs, label="", min_prec=1):
    """Certified equality of two polynomials.

    A nonzero difference is a real failure; a zero difference only counts
    when at least `min_prec` digits of it are known.
    """
    from .polyalg import render

    diff = lhs - rhs
    if not diff.is_zero():
        w = render(diff)
        return Outcome(FAIL, f"{label}: {w}" if label else w)
    if diff.prec < min_prec:
        return Outcome(INSUFFICIENT, label or None,
                       needed_N=lhs.ring.profile.N + min_prec - diff.prec)
    return Outcome(PASS, detail={"certified_digits": diff.prec} if not label else {})


def compare_many(pairs, min_prec=1):
    return merge(compare(a, b, label, min_prec) for label, a, b in pairs)


def integral(f, label=""):
    from .polyalg import render
    from .scalars import Verdict

    cert = f.integrality()
    if cert.verdict is Verdict.INTEGRAL:
        return Outcome(PASS)
    if cert.verdict is Verdict.NON_INTEGRAL:
        w = f"{label}: valuation {cert.valuation} in {render(f)}"
        return Outcome(FAIL, w)
    return Outcome(INSUFFICIENT, label or None,
                   needed_N=f.ring.profile.N - f.prec)


@contextmanager
def stopwatch(box):
    t = time.perf_counter()
    try:
        yield
    finally:
        box.append((time.perf_counter() - t) * 1000.0)
