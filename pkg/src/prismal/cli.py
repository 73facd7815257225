"""Command line front end: chart and connection files, suites, reports.

Exit codes: 0 when no check fails, 1 on a failed check or an input error,
2 when some check cannot be decided at the chart's precision.
"""

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field

from . import cartier as ct
from . import cohomology as co
from . import crystal as cr
from . import deltaring as dr
from . import envelope as ev
from .errors import (
    CocycleFailed,
    DenominatorBudgetExceeded,
    IncompatibleDeltas,
    InsufficientPrecision,
    NotIntegrable,
    NotNilpotent,
    ParseError,
    PrismalError,
    UnknownVariable,
)
from .polyalg import PdRing, inverse, render
from .report import FAIL, INSUFFICIENT, PASS, SKIPPED, Outcome, integral, merge
from .scalars import PrecisionProfile

# -- expression parsing ------------------------------------------------------------


@dataclass
class Token:
    kind: str  # num, var, p, op, end
    text: str
    line: int
    col: int


def tokenize(source):
    """Columns are 0-based offsets into the line, lines are 1-based."""
    out = []
    line, col = 1, 0
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 0
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start = col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            out.append(Token("num", source[i:j], line, start))
        elif ch.isalpha():
            j = i
            while j < n and source[j].isalnum():
                j += 1
            word = source[i:j]
            if word == "p":
                out.append(Token("p", word, line, start))
            elif word[0] == "X" and word[1:].isdigit():
                out.append(Token("var", word, line, start))
            else:
                out.append(Token("name", word, line, start))
        elif ch in "+-*/^()":
            j = i + 1
            out.append(Token("op", ch, line, start))
        else:
            raise ParseError(f"unexpected character {ch!r}", line, start)
        col += j - i
        i = j
    out.append(Token("end", "", line, col))
    return out


class ExprParser:
    def __init__(self, source, ring):
        self.toks = tokenize(source)
        self.pos = 0
        self.ring = ring

    @property
    def tok(self):
        return self.toks[self.pos]

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def eat(self, kind, text=None):
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or "end of input"
            self.fail(f"expected {want!r}, found {got!r}")
        self.pos += 1
        return t

    def at(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self):
        v = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")
        return v

    def expr(self):
        neg = False
        if self.at("+") or self.at("-"):
            neg = self.tok.text == "-"
            self.pos += 1
        v = self.term()
        if neg:
            v = -v
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.pos += 1
            t = self.term()
            v = v + t if op == "+" else v - t
        return v

    def term(self):
        v = self.factor()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            tok = self.toks[self.pos + 1]
            self.pos += 1
            f = self.factor()
            if op == "*":
                v = v * f
            else:
                v = self._divide(v, f, tok)
        return v

    def _divide(self, v, f, tok):
        ring = self.ring
        key = ring.key()
        if f.shift or set(f.terms) != {key}:
            self.fail("division only by nonzero integer constants", tok)
        c = f.terms[key]
        mod = ring.p ** f.prec
        if c > mod // 2:
            c -= mod
        return v.div_int(c)

    def factor(self):
        v = self.atom()
        if self.at("^"):
            self.pos += 1
            e = self.sint()
            if e < 0:
                try:
                    v = inverse(v) ** (-e)
                except PrismalError as err:
                    self.fail(f"negative power of a non-unit ({err})")
            else:
                v = v ** e
        return v

    def sint(self):
        if self.at("("):
            self.pos += 1
            e = self.sint()
            self.eat("op", ")")
            return e
        sign = 1
        if self.at("-"):
            sign = -1
            self.pos += 1
        return sign * int(self.eat("num").text)

    def atom(self):
        t = self.tok
        ring = self.ring
        if t.kind == "num":
            self.pos += 1
            return ring.const(int(t.text))
        if t.kind == "p":
            self.pos += 1
            return ring.const(ring.p)
        if t.kind == "var":
            self.pos += 1
            i = int(t.text[1:])
            if not 1 <= i <= ring.d:
                raise UnknownVariable(f"{t.text} at line {t.line}, column {t.col} "
                                      f"(chart has d={ring.d})")
            return ring.x(i - 1)
        if t.kind == "name":
            raise UnknownVariable(f"{t.text} at line {t.line}, column {t.col}")
        if self.at("("):
            self.pos += 1
            v = self.expr()
            self.eat("op", ")")
            return v
        self.fail(f"unexpected {t.text or 'end of input'!r}")


def parse_expr(source, context):
    """Parse into a PdPoly over the chart ring (a Chart or a PdRing)."""
    ring = context.ring if hasattr(context, "ideal_gens") else context
    return ExprParser(source, ring).parse()


# -- files ---------------------------------------------------------------------------

CHART_FIELDS = ("p", "precision_N", "denominator_budget_V", "dim_d", "pd_weight_cut_W",
                "delta_depth_J", "nilpotence_L")


def chart_from_dict(data):
    missing = [k for k in CHART_FIELDS + ("ideal_generators", "delta") if k not in data]
    if missing:
        raise PrismalError(f"chart is missing fields: {', '.join(missing)}")
    profile = PrecisionProfile(
        p=data["p"], N=data["precision_N"], V=data["denominator_budget_V"],
        W=data["pd_weight_cut_W"], J=data["delta_depth_J"], L=data["nilpotence_L"])
    d = data["dim_d"]
    ring = PdRing(profile, d)
    gens = tuple(parse_expr(s, ring) for s in data["ideal_generators"])

    def structure(mapping):
        vals = []
        for i in range(d):
            name = f"X{i + 1}"
            if name not in mapping:
                raise PrismalError(f"delta value for {name} missing")
            vals.append(parse_expr(mapping[name], ring))
        return dr.DeltaStructure(ring, tuple(vals))

    deltas = [structure(data["delta"])]
    for key in ("delta2", "delta3"):
        deltas.append(structure(data[key]) if data.get(key) else None)
    return dr.Chart(profile, d, gens, deltas[0], deltas[1], deltas[2])


def load_chart(path):
    with open(path) as fh:
        return chart_from_dict(json.load(fh))


def _parse_matrix(rows, ring, n):
    if len(rows) != n or any(len(r) != n for r in rows):
        raise PrismalError(f"expected a {n} x {n} matrix")
    return [[parse_expr(s, ring) for s in r] for r in rows]


def connection_from_dict(data, ring):
    n = data["rank"]
    mats = data["matrices"]
    if len(mats) != ring.d:
        raise PrismalError(f"need {ring.d} connection matrices, got {len(mats)}")
    mats = [_parse_matrix(M, ring, n) for M in mats]
    return cr.PConnectionData(ring, n, mats, data.get("nilpotence_L", ring.profile.L))


def alpha_key(alpha):
    return ",".join(str(a) for a in alpha)


def stratification_from_dict(data, ring):
    n = data["rank"]
    theta = {}
    for key, M in data["theta"].items():
        alpha = tuple(int(a) for a in key.split(","))
        if len(alpha) != ring.d:
            raise PrismalError(f"alpha key {key!r} does not have {ring.d} entries")
        theta[alpha] = _parse_matrix(M, ring, n)
    return cr.StratificationData(ring, n, theta)


def _render_matrix(M):
    return [[render(x) for x in row] for row in M]


def connection_to_dict(P):
    return {"rank": P.rank, "matrices": [_render_matrix(M) for M in P.matrices],
            "nilpotence_L": P.L}


def stratification_to_dict(S, L=None):
    theta = {alpha_key(a): _render_matrix(M) for a, M in sorted(S.theta.items())
             if not cr.mat_is_zero(M)}
    out = {"rank": S.rank, "theta": theta}
    if L is not None:
        out["nilpotence_L"] = L
    return out


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def canonical_connection(text, ring):
    return dumps(connection_to_dict(connection_from_dict(json.loads(text), ring)))


# -- golden instances -------------------------------------------------------------


def golden_connections(ring):
    """The rank-1 trivial and rank-2 nilpotent constant p-connections."""
    z, o = ring.zero(), ring.one()
    out = {"rank1": cr.PConnectionData(ring, 1, [[[z]] for _ in range(ring.d)], 1)}
    mats = [[[z, o], [z, z]]] + [[[z, z], [z, z]] for _ in range(ring.d - 1)]
    out["rank2"] = cr.PConnectionData(ring, 2, mats, 2)
    return out


def _deltas(chart):
    return [d for d in (chart.delta, chart.delta2, chart.delta3) if d is not None]


# -- suites ---------------------------------------------------------------------------


@dataclass
class Context:
    chart: object
    seed: int
    connections: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)

    @property
    def ring(self):
        return self.chart.ring

    def envelope(self):
        if "env" not in self.cache:
            self.cache["env"] = ev.build_envelope(self.chart)
        return self.cache["env"]

    def strat(self, name):
        key = ("strat", name)
        if key not in self.cache:
            self.cache[key] = cr.conn_to_strat(self.connections[name])
        return self.cache[key]


def _pairs_of(chart):
    ds = _deltas(chart)
    return [(f"d{a + 1}{b + 1}", ds[a], ds[b])
            for a in range(len(ds)) for b in range(a + 1, len(ds))]


def suite_delta_axioms(ctx):
    samples = dr.random_pairs(ctx.ring, ctx.seed, 100)
    for k, delta in enumerate(_deltas(ctx.chart)):
        yield (f"delta{k + 1}", "product and sum laws of a delta-ring",
               lambda delta=delta: dr.check_delta_axioms(delta, samples))


def suite_diff_lemma(ctx):
    rng = random.Random(ctx.seed)
    xs = [ctx.chart.ideal_gens[0]] + [dr.random_integral(ctx.ring, rng) for _ in range(3)]
    for tag, d1, d2 in _pairs_of(ctx.chart):
        yield (f"{tag}/valuation", "difference of Frobenius lifts on phi^r(x) is divisible by p^r",
               lambda d1=d1, d2=d2: _merge_over(
                   xs, lambda x: dr.diff_frobenius_valuation_check(d1, d2, x, 4)))
        yield (f"{tag}/power-formula", "difference operator on powers, n = 2",
               lambda d1=d1, d2=d2: _merge_over(
                   xs, lambda x: dr.diff_power_check(d1, d2, x, 4, 2)))


def _merge_over(items, fn):
    return merge(fn(x) for x in items)


def _lambda_checks(chart, d1, d2, x, env):
    J = chart.profile.J
    table, _ = ev.lambda_table(d1, d2, x, J)
    literal = {f"{r},{l}": v.integrality().verdict.value for (r, l), v in sorted(table.items())}
    diag = merge(integral(table[(r, r)], f"lambda({r},{r})") for r in range(1, J + 1))
    member = merge(ev.prism_membership(chart, env, 0, v, f"lambda({r},{l})", depth=r - 1)
                   for (r, l), v in sorted(table.items()))
    member.detail["literal_integrality"] = literal
    return diag, member


def suite_lambda(ctx):
    chart = ctx.chart
    if chart.delta2 is None:
        yield ("d12", "lambda operators", lambda: Outcome(SKIPPED, "chart has no delta2"))
        return
    x = chart.ideal_gens[0]
    for tag, d1, d2 in _pairs_of(chart)[:2]:
        box = {}

        def run(d1=d1, d2=d2, box=box):
            if not box:
                box["v"] = _lambda_checks(chart, d1, d2, x, ctx.envelope())
            return box["v"]

        yield (f"{tag}/diagonal-integral", "lambda(r,r) lies in the base ring",
               lambda run=run: run()[0])
        yield (f"{tag}/membership",
               "lambda(r,l) lies in the prismatic envelope generated up to depth r-1",
               lambda run=run: run()[1])
        yield (f"{tag}/recursion", "recursion between lambda(r+1,l) and lambda(r+1,l+1)",
               lambda d1=d1, d2=d2: ev.lambda_recursion_check(d1, d2, x, chart.profile.J))


def suite_key_identity(ctx):
    chart = ctx.chart
    if chart.delta2 is None:
        yield ("d12", "key constructive identity", lambda: Outcome(SKIPPED, "no delta2"))
        return
    x = chart.ideal_gens[0]
    for tag, d1, d2 in _pairs_of(chart)[:2]:
        yield (tag, "delta1^r(x/p) = delta2(delta1^(r-1)(x/p)) + lambda(r,1)",
               lambda d1=d1, d2=d2: ev.key_identity_check(d1, d2, x, chart.profile.J))


def suite_presentation(ctx):
    chart = ctx.chart
    yield ("generators", "envelope generators delta^j(f/p) and f^n/n!",
           lambda: ev.envelope_invariants(chart, ctx.envelope()))
    yield ("relations", "delta^l of the presentation relation f = p v",
           lambda: ev.presentation_relation_check(chart, ctx.envelope()))
    yield ("frobenius-image", "Frobenius maps the prismatic envelope into the PD envelope",
           lambda: ev.phi_envelope_compare(chart, ctx.envelope()))


def suite_pdiff(ctx):
    J = ctx.chart.profile.J
    for j in range(J + 1):
        yield (f"g{j}", "p d of envelope generators stays in the envelope",
               lambda j=j: ev.pdiff_on_envelope(ctx.chart, ctx.envelope(), 0, j)[1])


def suite_toric(ctx):
    prof = ctx.chart.profile
    for d in sorted({ctx.chart.d, 2}):
        yield (f"d{d}", "Taylor map agrees with X -> X + pY",
               lambda d=d: cr.toric_comparison(prof, d, ctx.seed, 100))


def suite_cosimplicial(ctx):
    prof = ctx.chart.profile
    for d in sorted({ctx.chart.d, 2}):
        yield (f"d{d}", "cosimplicial identities of the PD nerve",
               lambda d=d: cr.simplicial_identities(PdRing(prof, d), 2))


def _strat_roundtrip(P):
    S = cr.conn_to_strat(P)
    back = cr.strat_to_conn(S, P.L)
    outs = [cr.cocycle_check(S)]
    for i, (A, B) in enumerate(zip(P.matrices, back.matrices)):
        outs.append(cr.mat_compare(A, B, f"A_{i + 1} after round trip"))
    outs.append(cr.strat_equal(S, cr.conn_to_strat(back)))
    return merge(outs)


def random_instances(profile, seed, count):
    rng = random.Random(seed)
    out = []
    for t in range(count):
        d = 1 + t % 2
        rank = 1 + (t // 2) % 3
        out.append(cr.random_integrable(profile, d, rank, rng.randrange(10 ** 9)))
    return out


def nonintegrable_instances(profile, seed, count):
    rng = random.Random(seed + 1)
    return [cr.random_nonintegrable(profile, 1 + t % 3, rng.randrange(10 ** 9))
            for t in range(count)]


def _expect_not_integrable(Ps):
    for t, P in enumerate(Ps):
        try:
            cr.conn_to_strat(P)
        except NotIntegrable as e:
            if not e.witness:
                return Outcome(FAIL, f"instance {t}: rejected without a witness")
            continue
        return Outcome(FAIL, f"instance {t}: non-integrable input was accepted")
    return Outcome(PASS, detail={"rejected": len(Ps)})


def suite_stratification(ctx):
    for name in sorted(ctx.connections):
        yield (name, "connections and stratifications correspond",
               lambda name=name: _strat_roundtrip(ctx.connections[name]))
    prof = ctx.chart.profile
    yield ("random-integrable", "connections and stratifications correspond",
           lambda: _merge_over(random_instances(prof, ctx.seed, 25), _strat_roundtrip))
    yield ("non-integrable", "theta_i and theta_j commute for integrable inputs only",
           lambda: _expect_not_integrable(nonintegrable_instances(prof, ctx.seed, 25)))


def _theta_samples(ring):
    return [ring.x(0), ring.x(0, -2) + ring.const(3), ring.x(ring.d - 1, 3).scale_int(5)]


def suite_theta_prime(ctx):
    for name in sorted(ctx.connections):
        yield (name, "theta_{e_i} read off eps agrees with the connection",
               lambda name=name: cr.theta_prime_check(
                   ctx.connections[name], ctx.strat(name), _theta_samples(ctx.ring)))
    prof = ctx.chart.profile

    def rand():
        Ps = random_instances(prof, ctx.seed, 6)
        return _merge_over(Ps, lambda P: cr.theta_prime_check(
            P, cr.conn_to_strat(P), _theta_samples(P.ring)))

    yield ("random-integrable", "theta_{e_i} read off eps agrees with the connection", rand)


def suite_chart_change(ctx):
    ds = _deltas(ctx.chart)
    if len(ds) < 2:
        yield ("golden", "change of Frobenius lift", lambda: Outcome(SKIPPED, "one delta only"))
        return
    for name in sorted(ctx.connections):
        box = {}

        def run(name=name, box=box):
            if not box:
                box["v"] = cr.chart_change_iso(ctx.strat(name), ds)[1]
            return box["v"]

        for key, label in (("identity", "transition for equal lifts is the identity"),
                           ("cocycle", "iota_{2,1} iota_{3,2} = iota_{3,1}"),
                           ("linearity", "transition is linear over the Frobenius pullbacks"),
                           ("horizontal", "transition is horizontal"),
                           ("coproduct", "coproduct of Y is integral and congruent to Y^p")):
            if key == "cocycle" and len(ds) < 3:
                continue
            yield (f"{name}/{key}", label, lambda run=run, key=key: run()[key])


def suite_bicomplex(ctx):
    for name in sorted(ctx.connections):
        P = ctx.connections[name]
        yield (f"{name}/de-rham", "de Rham complex of a p-connection squares to zero",
               lambda P=P: co.build_dr(P).square_check(ctx.seed))
        box = {}

        def run(name=name, P=P, box=box):
            if not box:
                B = co.build_bicomplex(P, ctx.strat(name), r_max=2)
                box["v"] = co.bicomplex_checks(B, ctx.seed)
            return box["v"]

        for key, label in (("d1d1", "Cech differential squares to zero"),
                           ("d2d2", "de Rham differential squares to zero"),
                           ("d1d2", "the two differentials commute"),
                           ("total", "total differential squares to zero"),
                           ("dr_inclusion", "de Rham complex maps into the total complex"),
                           ("cech_inclusion", "Cech complex maps into the total complex")):
            yield (f"{name}/{key.replace('_', '-')}", label, lambda run=run, key=key: run()[key])


def _h0_negative(P, S):
    bad = co.perturbed_strat(S, (1,) + (0,) * (P.d - 1), 0, 0, 1)
    o = co.h0_compare(P, bad)
    if o.status == FAIL:
        return Outcome(PASS, detail={"control": o.witness})
    return Outcome(FAIL, "perturbed eps left the degree-0 comparison intact")


def suite_h0(ctx):
    for name in sorted(ctx.connections):
        yield (name, "degree-0 cohomology of de Rham and total complexes agree",
               lambda name=name: co.h0_compare(ctx.connections[name], ctx.strat(name)))
    if "rank2" in ctx.connections:
        yield ("negative-control", "a perturbed eps is detected",
               lambda: _h0_negative(ctx.connections["rank2"], ctx.strat("rank2")))


def suite_pd_poincare(ctx):
    prof = ctx.chart.profile
    for d in sorted({ctx.chart.d, 2}):
        yield (f"d{d}", "closed divided-power 1-forms are exact",
               lambda d=d: co.pd_poincare_check(prof, d, ctx.seed))


def _cartier_instance(P, delta):
    C = ct.c_inverse(P, delta)
    return merge([ct.integrability_report(C), ct.rank_check(P, C)])


def _cartier_negative(P, delta):
    C = ct.c_inverse(P, delta)
    o = ct.c_inverse_h0_consistency(P, delta, override=ct.corrupt(C, P.ring.x(0)))
    if o.status == FAIL:
        return Outcome(PASS, detail={"control": o.witness})
    return Outcome(FAIL, "corrupted pullback still maps horizontal sections correctly")


def suite_cartier(ctx):
    ring = ctx.ring
    yield ("dphi-integral", "dPhi(dX_i) is divisible by p",
           lambda: ct.dphi_integrality_check(ring, ctx.seed, 20))
    for k, delta in enumerate(_deltas(ctx.chart)):
        for name in sorted(ctx.connections):
            P = ctx.connections[name]
            yield (f"{name}/delta{k + 1}/integrable", "Frobenius pullback divided by p is flat",
                   lambda P=P, delta=delta: _cartier_instance(P, delta))
            yield (f"{name}/delta{k + 1}/horizontal",
                   "horizontal sections pull back to horizontal sections",
                   lambda P=P, delta=delta: ct.c_inverse_h0_consistency(P, delta))
    if "rank2" in ctx.connections:
        yield ("negative-control", "a corrupted pullback is detected",
               lambda: _cartier_negative(ctx.connections["rank2"], ctx.chart.delta))
    prof = ctx.chart.profile

    def rand():
        rng = random.Random(ctx.seed)
        outs = []
        for P in random_instances(prof, ctx.seed, 6):
            delta = ct.random_delta(P.ring, rng)
            outs.append(_cartier_instance(P, delta))
            Q = cr.random_integrable(prof, P.d, 1, rng.randrange(10 ** 9))
            outs.append(ct.direct_sum_check(P, Q, delta))
        return merge(outs)

    yield ("random", "Frobenius pullback divided by p is flat and additive", rand)


SUITES = {
    "delta-axioms": suite_delta_axioms,
    "diff-lemma": suite_diff_lemma,
    "lambda": suite_lambda,
    "key-identity": suite_key_identity,
    "presentation": suite_presentation,
    "pdiff": suite_pdiff,
    "toric": suite_toric,
    "cosimplicial": suite_cosimplicial,
    "stratification": suite_stratification,
    "theta-prime": suite_theta_prime,
    "chart-change": suite_chart_change,
    "bicomplex": suite_bicomplex,
    "h0": suite_h0,
    "pd-poincare": suite_pd_poincare,
    "cartier": suite_cartier,
}


def parse_suites(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    if names == ["all"]:
        return list(SUITES)
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise PrismalError(f"unknown suites: {', '.join(bad)}")
    return names


# -- reports -------------------------------------------------------------------------


def _run_check(fn, timings):
    t = time.perf_counter()
    try:
        out = fn()
    except DenominatorBudgetExceeded as e:
        out = Outcome(INSUFFICIENT, str(e), needed_N=e.shift + 1, needed_V=e.shift)
    except InsufficientPrecision as e:
        out = Outcome(INSUFFICIENT, str(e), needed_N=e.needed_N, needed_V=e.needed_V)
    except (NotIntegrable, NotNilpotent, CocycleFailed) as e:
        out = Outcome(FAIL, f"{e}: {e.witness}" if e.witness else str(e))
    except PrismalError as e:
        out = Outcome(FAIL, f"{type(e).__name__}: {e}")
    ms = round((time.perf_counter() - t) * 1000) if timings else None
    return out, ms


def _entry(name, anchor, out, ms):
    e = {"name": name, "paper_anchor": anchor, "status": out.status,
         "witness": out.witness, "elapsed_ms": ms}
    if out.needed_N is not None:
        e["needed_N"] = out.needed_N
    if out.needed_V is not None:
        e["needed_V"] = out.needed_V
    detail = _jsonable(out.detail)
    if detail:
        e["detail"] = detail
    return e


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, str, bool)) or obj is None:
        return obj
    return str(obj)


def assemble(header, entries):
    entries = sorted(entries, key=lambda e: e["name"])
    counts = {s: 0 for s in (PASS, FAIL, INSUFFICIENT, SKIPPED)}
    for e in entries:
        counts[e["status"]] += 1
    report = dict(header)
    report["checks"] = entries
    report["summary"] = counts
    need = [e for e in entries if e["status"] == INSUFFICIENT]
    if need:
        report["guidance"] = {
            "needed_N": max((e.get("needed_N") or 0) for e in need) or None,
            "needed_V": max((e.get("needed_V") or 0) for e in need) or None,
        }
    return report


def exit_code(report):
    statuses = {e["status"] for e in report["checks"]}
    if FAIL in statuses:
        return 1
    if INSUFFICIENT in statuses:
        return 2
    return 0


def run_suite(chart_path, suites, seed, timings=False, chart=None):
    chart = chart if chart is not None else load_chart(chart_path)
    ctx = Context(chart, seed, golden_connections(chart.ring))
    entries = []
    for suite in suites:
        try:
            checks = list(SUITES[suite](ctx))
        except IncompatibleDeltas as e:
            entries.append(_entry(suite, "compatible delta-structures",
                                  Outcome(FAIL, f"IncompatibleDeltas: {e}"), None))
            continue
        for name, anchor, fn in checks:
            out, ms = _run_check(fn, timings)
            entries.append(_entry(f"{suite}/{name}", anchor, out, ms))
            if suite == "lambda" and out.status == FAIL and "IncompatibleDeltas" in (out.witness or ""):
                break
    header = {"command": "check", "chart": str(chart_path), "seed": seed,
              "suites": sorted(suites)}
    return assemble(header, entries)


# -- subcommands ------------------------------------------------------------------


def _write(text, path):
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary_line(report, code):
    s = report["summary"]
    msg = (f"prismal: {s[PASS]} pass, {s[FAIL]} fail, {s[INSUFFICIENT]} insufficient, "
           f"{s[SKIPPED]} skipped")
    g = report.get("guidance")
    if g:
        msg += f"; undecided below N={g['needed_N']}, V={g['needed_V']}"
    print(msg, file=sys.stderr)
    return code


def cmd_check(args):
    report = run_suite(args.chart, parse_suites(args.suite), args.seed, args.timings)
    _write(dumps(report), args.out)
    return _summary_line(report, exit_code(report))


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def cmd_convert(args):
    chart = load_chart(args.chart)
    data = _read_json(args.connection)
    ring = chart.ring
    header = {"command": "convert", "chart": str(args.chart), "to": args.to}
    try:
        if args.to == "stratification":
            if "matrices" not in data:
                raise PrismalError("input is not a connection file")
            P = connection_from_dict(data, ring)
            S = cr.conn_to_strat(P)
            text = dumps(stratification_to_dict(S, P.L))
        else:
            if "theta" not in data:
                raise PrismalError("input is not a stratification file")
            S = stratification_from_dict(data, ring)
            P = cr.strat_to_conn(S, data.get("nilpotence_L"))
            text = dumps(connection_to_dict(P))
    except (NotIntegrable, NotNilpotent, CocycleFailed) as e:
        report = assemble(header, [_entry(f"convert/{args.to}", "crystals and p-connections",
                                          Outcome(FAIL, f"{type(e).__name__}: {e}: {e.witness}"),
                                          None)])
        sys.stdout.write(dumps(report))
        return _summary_line(report, 1)
    _write(text, args.out)
    return 0


def cmd_cohomology(args):
    chart = load_chart(args.chart)
    P = connection_from_dict(_read_json(args.connection), chart.ring)
    if not 0 <= args.rmax <= 2:
        raise PrismalError("--rmax must be between 0 and 2")
    entries = []
    box = {}

    def strat():
        if "S" not in box:
            box["S"] = cr.conn_to_strat(P)
        return box["S"]

    def bic():
        if "B" not in box:
            box["B"] = co.bicomplex_checks(co.build_bicomplex(P, strat(), r_max=args.rmax),
                                           args.seed)
        return box["B"]

    checks = [("cohomology/de-rham", "de Rham complex squares to zero",
               lambda: co.build_dr(P).square_check(args.seed))]
    for key in ("d1d1", "d2d2", "d1d2", "total", "dr_inclusion", "cech_inclusion"):
        checks.append((f"cohomology/{key.replace('_', '-')}", "Cech-de Rham bicomplex",
                       lambda key=key: bic()[key]))
    checks.append(("cohomology/h0", "degree-0 cohomology comparison",
                   lambda: co.h0_compare(P, strat())))
    checks.append(("cohomology/pd-poincare", "closed divided-power 1-forms are exact",
                   lambda: co.pd_poincare_check(chart.profile, chart.d, args.seed)))
    for name, anchor, fn in checks:
        out, ms = _run_check(fn, args.timings)
        entries.append(_entry(name, anchor, out, ms))
    header = {"command": "cohomology", "chart": str(args.chart),
              "connection": str(args.connection), "rmax": args.rmax, "seed": args.seed}
    report = assemble(header, entries)
    _write(dumps(report), args.out)
    return _summary_line(report, exit_code(report))


def cmd_cartier(args):
    chart = load_chart(args.chart)
    P = connection_from_dict(_read_json(args.connection), chart.ring)
    header = {"command": "cartier", "chart": str(args.chart),
              "connection": str(args.connection)}
    box = {}

    def build():
        C = ct.c_inverse(P, chart.delta)
        box["C"] = C
        return merge([ct.integrability_report(C), ct.rank_check(P, C)])

    checks = [
        ("cartier/dphi-integral", "dPhi(dX_i) is divisible by p",
         lambda: ct.dphi_integrality_check(chart.ring, 0, 20)),
        ("cartier/integrable", "Frobenius pullback divided by p is flat", build),
        ("cartier/horizontal", "horizontal sections pull back to horizontal sections",
         lambda: ct.c_inverse_h0_consistency(P, chart.delta)),
        ("cartier/direct-sum", "pullback commutes with direct sums",
         lambda: ct.direct_sum_check(P, P, chart.delta)),
    ]
    entries = []
    for name, anchor, fn in checks:
        out, ms = _run_check(fn, args.timings)
        entries.append(_entry(name, anchor, out, ms))
    report = assemble(header, entries)
    if "C" in box:
        report["output_connection"] = {
            "rank": box["C"].rank,
            "matrices": [_render_matrix(M) for M in box["C"].matrices]}
    _write(dumps(report), args.out)
    return _summary_line(report, exit_code(report))


def build_parser():
    ap = argparse.ArgumentParser(prog="prismal", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run verification suites on a chart")
    c.add_argument("--chart", required=True)
    c.add_argument("--suite", default="all", help="comma-separated suite names or 'all'")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default="-")
    c.add_argument("--timings", action="store_true", help="record elapsed_ms per check")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("convert", help="connection <-> stratification")
    v.add_argument("--chart", required=True)
    v.add_argument("--connection", required=True)
    v.add_argument("--to", required=True, choices=["stratification", "connection"])
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_convert)

    h = sub.add_parser("cohomology", help="de Rham and Cech-de Rham checks")
    h.add_argument("--chart", required=True)
    h.add_argument("--connection", required=True)
    h.add_argument("--rmax", type=int, default=2)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", default="-")
    h.add_argument("--timings", action="store_true")
    h.set_defaults(func=cmd_cohomology)

    k = sub.add_parser("cartier", help="Frobenius pullback of a p-connection divided by p")
    k.add_argument("--chart", required=True)
    k.add_argument("--connection", required=True)
    k.add_argument("--out", default="-")
    k.add_argument("--timings", action="store_true")
    k.set_defaults(func=cmd_cartier)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, KeyError, PrismalError, ValueError) as e:
        print(f"prismal: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
