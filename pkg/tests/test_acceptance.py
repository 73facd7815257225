"""The eleven acceptance criteria, one test each.

Every test records a one-line verdict in conftest.ACCEPTANCE (printed at the
end of the pytest run) and prints it.  Run directly with
`python3 tests/test_acceptance.py` for the same output.
"""

import json
import random
import subprocess
import sys
import time

import pytest

import conftest
from conftest import DATA, ROOT
from prismal import cartier as ct
from prismal import cohomology as co
from prismal import crystal as cr
from prismal import deltaring as dr
from prismal import envelope as ev
from prismal.cli import (
    _strat_roundtrip,
    _theta_samples,
    golden_connections,
    nonintegrable_instances,
    random_instances,
)
from prismal.polyalg import EXACT, PdRing
from prismal.report import merge
from prismal.scalars import PrecisionProfile

SEED = 42


def record(n, ok, text, elapsed, limit=None):
    timing = f"{elapsed:.1f}s" + (f" (limit {limit}s)" if limit else "")
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text} [{timing}]"
    conftest.ACCEPTANCE[n] = line
    print(line)
    return line


def check(outcomes):
    out = merge(list(outcomes))
    return out.ok, out.witness


def golden_pairs(chart):
    ds = [chart.delta, chart.delta2, chart.delta3]
    return [(ds[a], ds[b]) for a in range(3) for b in range(a + 1, 3)]


def p3_chart():
    # same shape as the golden chart at p = 3, with delta-values 0, 3X, 3X^2
    prof = PrecisionProfile(3, 40, 32, W=8, J=4, L=4)
    ring = PdRing(prof, 1)
    zero = ring.zero(EXACT)
    d1 = dr.DeltaStructure(ring, (zero,))
    d2 = dr.DeltaStructure(ring, (ring.monomial(3, [1]),))
    d3 = dr.DeltaStructure(ring, (ring.monomial(3, [2]),))
    return dr.Chart(prof, 1, (ring.x(0) - ring.one(),), d1, d2, d3)


def test_c01_delta_axioms():
    t = time.perf_counter()
    outs = []
    for p in (2, 3, 5):
        ring = PdRing(PrecisionProfile(p, 16, 16), 2)
        # Frobenius lift X_i -> X_i^p + p c X_i^p on Laurent samples
        mono = dr.DeltaStructure(ring, (ring.monomial(1, [p, 0]), ring.monomial(2, [0, p])))
        outs.append(dr.check_delta_axioms(mono, dr.random_pairs(ring, SEED, 100)))
        # random polynomial delta-values on polynomial samples
        rng = random.Random(SEED + p)
        poly = dr.DeltaStructure(ring, tuple(
            dr.random_integral(ring, rng, laurent=False) for _ in range(2)))
        outs.append(dr.check_delta_axioms(
            poly, dr.random_pairs(ring, SEED, 100, laurent=False)))
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and el < 30
    record(1, ok, "delta product and sum laws, p in {2,3,5}, d=2, 100 pairs per structure"
           + ("" if ok else f": {why}"), el, 30)
    assert ok, why


def test_c02_diff_lemma(golden):
    t = time.perf_counter()
    outs = []
    for chart in (golden, p3_chart()):
        rng = random.Random(SEED)
        xs = [chart.ideal_gens[0]] + [dr.random_integral(chart.ring, rng) for _ in range(3)]
        for d1, d2 in golden_pairs(chart):
            for x in xs:
                outs.append(dr.diff_frobenius_valuation_check(d1, d2, x, 4))
                outs.append(dr.diff_power_check(d1, d2, x, 4, 2))
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and el < 120
    record(2, ok, "d(phi^r(x)) divisible by p^r for r<=4 and the n=2 power formula, p in {2,3}"
           + ("" if ok else f": {why}"), el, 120)
    assert ok, why


@pytest.mark.xfail(strict=True, reason="lambda(r,l) with l<r is not in the base ring; "
                   "see the membership test below")
def test_c03_lambda_integrality(golden):
    t = time.perf_counter()
    x = golden.ideal_gens[0]
    literal = ev.check_lambda_integral(golden.delta, golden.delta2, x, 4)
    recursion = ev.lambda_recursion_check(golden.delta, golden.delta2, x, 4)
    env = ev.build_envelope(golden)
    table, _ = ev.lambda_table(golden.delta, golden.delta2, x, 4)
    member = merge(ev.prism_membership(golden, env, 0, v, f"lambda({r},{l})", depth=r - 1)
                   for (r, l), v in sorted(table.items()))
    el = time.perf_counter() - t
    ok = literal.ok and recursion.ok and el < 120
    text = (f"lambda(r,l) integral for 1<=l<=r<=4: {'yes' if literal.ok else 'no'}"
            f" ({literal.witness}); recursion {'holds' if recursion.ok else 'fails'};"
            f" envelope membership {'holds' if member.ok else 'fails'}")
    record(3, ok, text, el, 120)
    assert recursion.ok and member.ok
    assert ok, literal.witness


def test_c03_lambda_membership(golden):
    # the statement that does hold: every lambda(r,l) lies in the envelope
    # generated by g_0..g_{r-1}, and the recursion is exact
    x = golden.ideal_gens[0]
    env = ev.build_envelope(golden)
    table, _ = ev.lambda_table(golden.delta, golden.delta2, x, 4)
    for (r, l), v in sorted(table.items()):
        out = ev.prism_membership(golden, env, 0, v, f"lambda({r},{l})", depth=r - 1)
        assert out.ok, out.witness
    assert ev.lambda_recursion_check(golden.delta, golden.delta2, x, 4).ok


def test_c04_key_identity(golden):
    t = time.perf_counter()
    x = golden.ideal_gens[0]
    ok, why = check(ev.key_identity_check(d1, d2, x, 4) for d1, d2 in golden_pairs(golden))
    el = time.perf_counter() - t
    ok = ok and el < 60
    record(4, ok, "delta1^r(x/p) = delta2(delta1^(r-1)(x/p)) + lambda(r,1), r<=4, all golden pairs"
           + ("" if ok else f": {why}"), el, 60)
    assert ok, why


def test_c05_toric(golden):
    t = time.perf_counter()
    prof = golden.profile
    assert prof.W == 8
    ok, why = check(cr.toric_comparison(prof, d, SEED, count=100, span=5) for d in (1, 2))
    el = time.perf_counter() - t
    record(5, ok, "Taylor map equals X -> X + pY on 100 Laurent monomials, W=8, d in {1,2}"
           + ("" if ok else f": {why}"), el)
    assert ok, why


def test_c06_cosimplicial(golden):
    t = time.perf_counter()
    outs = [cr.simplicial_identities(PdRing(golden.profile, d), 2) for d in (1, 2)]
    ok, why = check(outs)
    n = sum(o.detail["identities"] for o in outs)
    el = time.perf_counter() - t
    record(6, ok, f"cosimplicial identities at levels <= 2 on generators ({n} identities)"
           + ("" if ok else f": {why}"), el)
    assert ok, why


def test_c07_stratification(golden):
    t = time.perf_counter()
    prof = golden.profile
    Ps = random_instances(prof, SEED, 25)
    assert max(P.rank for P in Ps) <= 3 and max(P.d for P in Ps) <= 2
    outs = [_strat_roundtrip(P) for P in Ps]
    outs += [cr.theta_prime_check(P, cr.conn_to_strat(P), _theta_samples(P.ring)) for P in Ps]
    bad = nonintegrable_instances(prof, SEED, 25)
    rejected = 0
    for P in bad:
        try:
            cr.conn_to_strat(P)
        except cr.NotIntegrable as e:
            rejected += bool(e.witness)
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and rejected == 25 and el < 300
    record(7, ok, f"25 round trips with cocycle and theta=theta' checks; "
           f"{rejected}/25 non-integrable inputs rejected with witnesses"
           + ("" if ok else f": {why}"), el, 300)
    assert ok, why


def test_c08_bicomplex(golden):
    t = time.perf_counter()
    outs = []
    for name, P in sorted(golden_connections(golden.ring).items()):
        S = cr.conn_to_strat(P)
        outs.append(co.build_dr(P).square_check(SEED))
        outs += co.bicomplex_checks(co.build_bicomplex(P, S, r_max=2), SEED).values()
        outs.append(co.h0_compare(P, S))
    assert golden.profile.W == 8
    outs += [co.pd_poincare_check(golden.profile, d, SEED) for d in (1, 2)]
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and el < 300
    record(8, ok, "d1^2 = d2^2 = 0, d1 d2 = d2 d1, D^2 = 0, inclusions, H0 invariants and"
           " divided-power Poincare lemma on golden instances" + ("" if ok else f": {why}"),
           el, 300)
    assert ok, why


def test_c09_cartier(golden):
    t = time.perf_counter()
    outs = []
    for p in (2, 3):
        ring = PdRing(PrecisionProfile(p, 16, 8), 2)
        outs.append(ct.dphi_integrality_check(ring, SEED, 20))
    conns = golden_connections(golden.ring)
    for delta in (golden.delta, golden.delta2, golden.delta3):
        for P in conns.values():
            C = ct.c_inverse(P, delta)
            outs += [ct.integrability_report(C), ct.rank_check(P, C),
                     ct.c_inverse_h0_consistency(P, delta)]
    rng = random.Random(SEED)
    for P in random_instances(PrecisionProfile(2, 16, 8, W=4), SEED, 6):
        C = ct.c_inverse(P, ct.random_delta(P.ring, rng), check=False)
        outs += [ct.integrability_report(C), ct.rank_check(P, C)]
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and el < 120
    record(9, ok, "dPhi(dX_i)/p integral for 20 delta-structures (p=2,3); pullbacks flat,"
           " rank preserved, horizontal sections preserved" + ("" if ok else f": {why}"),
           el, 120)
    assert ok, why


def test_c10_chart_change(golden):
    t = time.perf_counter()
    outs = []
    ds = [golden.delta, golden.delta2, golden.delta3]
    for P in golden_connections(golden.ring).values():
        outs.append(cr.chart_change_iso(cr.conn_to_strat(P), ds)[1]["cocycle"])
    ok, why = check(outs)
    el = time.perf_counter() - t
    ok = ok and el < 120
    record(10, ok, "iota_21 iota_32 = iota_31 on the golden triple, ranks 1 and 2"
           + ("" if ok else f": {why}"), el, 120)
    assert ok, why


def test_c11_end_to_end(tmp_path):
    t = time.perf_counter()
    outs = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        res = subprocess.run(
            [sys.executable, "-m", "prismal", "check", "--chart", str(DATA / "golden.json"),
             "--suite", "all", "--seed", "42", "--out", str(path)],
            cwd=ROOT, capture_output=True, text=True, timeout=900)
        outs.append((res.returncode, path.read_bytes(), res.stderr.strip()))
    el = time.perf_counter() - t
    report = json.loads(outs[0][1])
    same = outs[0][1] == outs[1][1]
    ok = outs[0][0] == 0 and outs[1][0] == 0 and same and el < 900
    record(11, ok, f"prismal check --suite all --seed 42: exit {outs[0][0]}, "
           f"{report['summary']['pass']} checks pass, reruns byte-identical: {same}", el, 900)
    assert ok, outs[0][2]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
