"""Fill a sigma cache with exact records on the Chebyshev slope grid.

    python scripts/build_sigma_cache.py --grid 16 --n-max 48 --cache data/sigma_cache.ndjson
"""

import argparse
import time
from pathlib import Path

from maxrep.cache import SigmaCache
from maxrep.estimate import slope_grid
from maxrep.local_gas import sigma_exact_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, nargs="+", default=[16])
    ap.add_argument("--n-max", type=int, default=48)
    ap.add_argument("--cache", type=Path, default=Path("data/sigma_cache.ndjson"))
    args = ap.parse_args()

    store = SigmaCache(args.cache)
    have = {(r.rho, r.n) for r in store.load(verify=False).records if r.kind == "exact"}
    for g in args.grid:
        _, rhos, _ = slope_grid(g)
        for rho in map(float, rhos):
            if (rho, args.n_max) in have:
                continue
            t0 = time.perf_counter()
            recs = sigma_exact_table(args.n_max, rho, ceiling=args.n_max)
            store.append(recs)
            have.update((r.rho, r.n) for r in recs)
            print(f"grid {g} rho {rho:.6f}: sigma_n/n = {recs[-1].value / args.n_max:.6f} ({time.perf_counter() - t0:.1f}s)", flush=True)


if __name__ == "__main__":
    main()
