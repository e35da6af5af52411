"""Exact d_N table (resumable) and the sqrt(N!)/N bound check.

    python scripts/dmax_table.py --n-max 100 --table data/dmax_table.csv
"""

import argparse
from pathlib import Path

from maxrep.maxdim import ScanConfig, check_mckay, d_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-max", type=int, default=100)
    ap.add_argument("--table", type=Path, default=Path("data/dmax_table.csv"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    table = d_table(args.n_max, ScanConfig(threads=args.threads), table_path=args.table)
    failures = []
    for rec in table:
        c = check_mckay(rec.N, rec)
        if not c.holds:
            failures.append((rec.N, c.margin))
    print(f"{len(table)} rows in {args.table}")
    print("bound d_N >= sqrt(N!)/N fails at:", ", ".join(f"{N} ({m:+.4f})" for N, m in failures) or "none")
    for rec in table[9::10]:
        print(f"N={rec.N:3d}  s_N={rec.s_value():.6f}  argmax={rec.argmax}")


if __name__ == "__main__":
    main()
