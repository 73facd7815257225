"""Print the worst p-adic denominator of each lambda(r, l) on a chart.

    python3 scripts/lambda_denominators.py --chart data/golden.json --depth 4
"""

import argparse
from dataclasses import dataclass

from prismal.cli import load_chart
from prismal.envelope import build_envelope, lambda_table, prism_membership


@dataclass
class Config:
    chart: str = "data/golden.json"
    depth: int = 4
    pair: str = "12"  # which delta-structures: 12, 13 or 23


def run(cfg):
    chart = load_chart(cfg.chart)
    ds = {"1": chart.delta, "2": chart.delta2, "3": chart.delta3}
    d1, d2 = ds[cfg.pair[0]], ds[cfg.pair[1]]
    x = chart.ideal_gens[0]
    table, _ = lambda_table(d1, d2, x, cfg.depth)
    env = build_envelope(chart)
    rows = []
    for (r, l), v in sorted(table.items()):
        val = v.valuation()
        den = max(0, -val) if val is not None else 0
        member = prism_membership(chart, env, 0, v, depth=r - 1).status
        rows.append((r, l, den, member))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chart", default=Config.chart)
    ap.add_argument("--depth", type=int, default=Config.depth)
    ap.add_argument("--pair", default=Config.pair, choices=["12", "13", "23"])
    cfg = Config(**vars(ap.parse_args()))
    print(f"{'r':>2} {'l':>2} {'v_p(denominator)':>17}  envelope membership")
    for r, l, den, member in run(cfg):
        print(f"{r:>2} {l:>2} {den:>17}  {member}")


if __name__ == "__main__":
    main()
