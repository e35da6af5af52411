"""Estimate the constant from the sigma cache and cross-check it against d_N.

    python scripts/estimate_d.py --grid 16 --cache data/sigma_cache.ndjson \
        --table data/dmax_table.csv --out results/estimate.json
"""

import argparse
import json
from pathlib import Path

from maxrep.cache import SigmaCache
from maxrep.estimate import LOWER_CONSTANT, UPPER_CONSTANT, compare_with_exact, estimate_d
from maxrep.maxdim import read_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, nargs="+", default=[16])
    ap.add_argument("--n-max", type=int, nargs="+", default=None, help="restrict to records with n <= these")
    ap.add_argument("--cache", type=Path, default=Path("data/sigma_cache.ndjson"))
    ap.add_argument("--table", type=Path, default=Path("data/dmax_table.csv"))
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    loaded = SigmaCache(args.cache).load()
    if loaded.quarantined:
        print(f"warning: {len(loaded.quarantined)} records quarantined")
    table = read_table(args.table)
    report = {"sandwich": [LOWER_CONSTANT, UPPER_CONSTANT], "runs": []}
    for g in args.grid:
        for cut in args.n_max or [None]:
            recs = [r for r in loaded.records if cut is None or r.n <= cut]
            est = estimate_d(g, recs)
            run = {"grid": g, "n_max": cut, "value": est.value, "lower": est.lower, "upper": est.upper,
                   "quadrature_error": est.quadrature_error, "tail_constant": est.tail_constant}
            if table:
                cmp = compare_with_exact(table, est)
                run["fitted_from_d_N"] = cmp.fitted_d
                run["discrepancy"] = cmp.discrepancy
                run["alternative_fits"] = cmp.alternative_fits
            report["runs"].append(run)
            print(f"grid {g:3d} n<={cut}: d_hat={est.value:.4f} in [{est.lower:.4f}, {est.upper:.4f}]"
                  + (f"  d_N fit {run['fitted_from_d_N']:.4f}" if table else ""))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
