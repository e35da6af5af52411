"""Build near-optimal shapes for several N and report their scaled deficit.

    python scripts/construct.py --n 400 2500 10000 --window 8 16 32
"""

import argparse
import time

from maxrep.errors import ConstructionError
from maxrep.functionals import energy_breakdown
from maxrep.global_build import area_fix, build_near_optimizer, evaluate_candidate
from maxrep.partitions import area


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[400, 2500, 10_000])
    ap.add_argument("--window", type=int, nargs="+", default=[8, 16, 32])
    args = ap.parse_args()

    print("N,window,area_before,s_before,s_after,delta_energy,seconds")
    for N in args.n:
        for w in args.window:
            t0 = time.perf_counter()
            try:
                rep = build_near_optimizer(N, w)
            except ConstructionError as exc:
                print(f"{N},{w},infeasible: {exc}", flush=True)
                continue
            before = evaluate_candidate(rep.f).scaled_deficit
            f = area_fix(rep.f, N)
            delta = energy_breakdown(f, N).total - rep.breakdown.total
            after = evaluate_candidate(f).scaled_deficit
            print(f"{N},{w},{area(rep.f)},{before:.5f},{after:.5f},{delta:.3f},{time.perf_counter() - t0:.1f}", flush=True)


if __name__ == "__main__":
    main()
