"""Run suites on the golden chart over a grid of (N, V) and tabulate exit codes.

    python3 scripts/precision_sweep.py --suites key-identity,lambda
"""

import argparse
import json
from dataclasses import dataclass, field

from prismal.cli import chart_from_dict, exit_code, run_suite


@dataclass
class Config:
    chart: str = "data/golden.json"
    suites: list = field(default_factory=lambda: ["key-identity", "lambda"])
    Ns: list = field(default_factory=lambda: [16, 24, 32, 40])
    Vs: list = field(default_factory=lambda: [12, 20, 31, 32])
    seed: int = 0


def run(cfg):
    with open(cfg.chart) as fh:
        base = json.load(fh)
    out = []
    for N in cfg.Ns:
        for V in cfg.Vs:
            data = dict(base, precision_N=N, denominator_budget_V=V)
            report = run_suite(cfg.chart, cfg.suites, cfg.seed, chart=chart_from_dict(data))
            g = report.get("guidance") or {}
            out.append((N, V, exit_code(report), g.get("needed_N"), g.get("needed_V")))
    return out


def ints(text):
    return [int(t) for t in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chart", default=Config.chart)
    ap.add_argument("--suites", default=",".join(Config().suites))
    ap.add_argument("--Ns", type=ints, default=Config().Ns)
    ap.add_argument("--Vs", type=ints, default=Config().Vs)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    cfg = Config(a.chart, a.suites.split(","), a.Ns, a.Vs, a.seed)
    print(" N  V  exit  needed N/V")
    for N, V, code, nN, nV in run(cfg):
        hint = f"{nN}/{nV}" if nN is not None else "-"
        print(f"{N:>2} {V:>2}  {code:>4}  {hint}")


if __name__ == "__main__":
    main()
