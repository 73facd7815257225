"""Kernel invariants of nabla on the de Rham and total complexes for
constant-matrix p-connections, over a range of X-degree windows.

    python3 scripts/h0_kernels.py --window 3
"""

import argparse
from dataclasses import dataclass

from prismal.cli import golden_connections, load_chart
from prismal.cohomology import h0_compare
from prismal.crystal import conn_to_strat


@dataclass
class Config:
    chart: str = "data/golden.json"
    window: int = 2


def run(cfg):
    chart = load_chart(cfg.chart)
    rows = []
    for name, P in sorted(golden_connections(chart.ring).items()):
        S = conn_to_strat(P)
        for w in range(cfg.window + 1):
            out = h0_compare(P, S, window=w)
            rows.append((name, w, out.detail["de_rham"], out.detail["total"], out.status))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chart", default=Config.chart)
    ap.add_argument("--window", type=int, default=Config.window)
    cfg = Config(**vars(ap.parse_args()))
    for name, w, a, b, status in run(cfg):
        print(f"{name} window={w}: de Rham {a}  total {b}  {status}")


if __name__ == "__main__":
    main()
