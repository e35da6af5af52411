"""Command-line entry point.

Exit status: 0 success, 1 bad input or missing data, 2 a size ceiling was
hit, 3 an internal check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache as cache_mod
from .errors import (
    ConstructionError,
    ConvergenceError,
    DataError,
    InvariantViolation,
    ResourceLimitError,
    ValidationError,
)

COMMANDS = ("maxdim", "verify-vk", "sigma", "estimate-d", "construct", "decompose")
log = logging.getLogger("maxrep")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    threads: int = 1
    cache_path: Path | None = None
    output: str = "json"
    seed: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.threads < 1:
            raise ValidationError("--threads must be >= 1")
        if self.output not in ("csv", "json"):
            raise ValidationError("--output must be csv or json")
        if self.cache_path is None:
            self.cache_path = cache_mod.default_path()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text: str, out) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _require(params, key, check, message):
    v = params.get(key)
    if v is None or not check(v):
        raise ValidationError(message)
    return v


# -- commands ---------------------------------------------------------------


def _cmd_maxdim(cfg: RunConfig) -> int:
    from .maxdim import ScanConfig, check_mckay, d_table, record_row, CSV_FIELDS

    p = cfg.params
    n_max = _require(p, "n_max", lambda v: v >= 0, "--n-max must be >= 0")
    mckay = p.get("check_mckay")
    top = max(n_max, mckay or 0)
    scan = ScanConfig(threads=cfg.threads, checkpoint=p.get("checkpoint"))
    records = d_table(top, scan, table_path=p.get("out"))
    if mckay is not None:
        rec = next(r for r in records if r.N == mckay)
        res = check_mckay(mckay, rec)
        sys.stdout.write(_dumps({"N": res.N, "holds": res.holds, "margin": res.margin}))
    if not p.get("out"):
        rows = [record_row(r) for r in records if r.N <= n_max]
        if cfg.output == "csv":
            import csv, io

            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
            sys.stdout.write(buf.getvalue())
        else:
            sys.stdout.write(_dumps(rows))
    elif mckay is not None and mckay > n_max:
        # the table on disk should hold exactly what was asked for
        from .maxdim import write_table

        write_table(p["out"], [r for r in records if r.N <= n_max])
    return 0


def _cmd_verify_vk(cfg: RunConfig) -> int:
    from .functionals import vk_residual
    from .partitions import iter_partitions, random_partition

    p = cfg.params
    n = _require(p, "n", lambda v: v >= 1, "--n must be >= 1")
    tol = _require(p, "tol", lambda v: v > 0, "--tol must be positive")
    if p.get("exhaustive"):
        parts = list(iter_partitions(n))
    else:
        samples = _require(p, "samples", lambda v: v >= 1, "give --exhaustive or --samples S >= 1")
        rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
        parts = [random_partition(n, rng) for _ in range(samples)]
    rows = [{"partition": str(lam), "residual": vk_residual(lam)} for lam in parts]
    worst = max(abs(r["residual"]) for r in rows)
    report = {"n": n, "count": len(rows), "max_abs_residual": worst, "tol": tol, "ok": worst <= tol, "residuals": rows}
    _emit(_dumps(report), p.get("out"))
    if worst > tol:
        raise InvariantViolation(f"identity residual {worst:.3e} exceeds {tol:.1e}")
    return 0


def _cmd_sigma(cfg: RunConfig) -> int:
    from .cache import SigmaCache, record_to_json
    from .local_gas import as_slope, sigma_exact_table, sigma_heuristic

    p = cfg.params
    n = _require(p, "n", lambda v: v >= 1, "--n must be >= 1")
    rho = as_slope(_require(p, "rho", lambda v: True, "--rho is required"))
    if p.get("heuristic"):
        if cfg.seed is None:
            raise ValidationError("--heuristic needs an explicit --seed")
        budget = _require(p, "budget", lambda v: v >= 0, "--budget must be >= 0")
        recs = [sigma_heuristic(n, rho, budget=budget, seed=cfg.seed)]
    else:
        ceiling = p.get("ceiling") or 28
        recs = sigma_exact_table(n, rho, ceiling=ceiling)
    SigmaCache(cfg.cache_path).append(recs)
    _emit(_dumps(record_to_json(recs[-1])), p.get("out"))
    return 0


def _cmd_estimate_d(cfg: RunConfig) -> int:
    from .cache import SigmaCache
    from .estimate import compare_with_exact, estimate_d, slope_grid
    from .local_gas import sigma_exact_table

    p = cfg.params
    grid = _require(p, "grid", lambda v: v >= 8, "--grid must be >= 8")
    store = SigmaCache(cfg.cache_path)
    fill = p.get("fill")
    if fill:
        have = {(r.rho, r.n) for r in store.load().records if r.kind == "exact"}
        _, rhos, _ = slope_grid(grid)
        for rho in rhos:
            if (float(rho), fill) not in have:
                store.append(sigma_exact_table(fill, float(rho), ceiling=max(fill, 28)))
    loaded = store.load()
    if loaded.quarantined:
        log.warning("%d cache records quarantined", len(loaded.quarantined))
    est = estimate_d(grid, loaded.records)
    report = {"estimate": est.to_json()}
    if p.get("table"):
        from .maxdim import read_table

        table = read_table(p["table"])
        if table:
            report["comparison"] = compare_with_exact(table, est).to_json()
    if cfg.output == "csv":
        _emit(est.grid_csv(), p.get("out"))
    else:
        _emit(_dumps(report), p.get("out"))
    return 0


def _cmd_construct(cfg: RunConfig) -> int:
    from .functionals import energy_breakdown
    from .global_build import area_fix, build_near_optimizer, evaluate_candidate, log_dim_of

    p = cfg.params
    n = _require(p, "n", lambda v: v >= 1, "--n must be >= 1")
    w = _require(p, "window", lambda v: v >= 1, "--window must be >= 1")
    rep = build_near_optimizer(n, w, margin=p.get("margin"), seed=cfg.seed or 0, with_breakdown=False)
    before = evaluate_candidate(rep.f)
    rep.f = area_fix(rep.f, n, p.get("R"))
    rep.breakdown = energy_breakdown(rep.f, n)
    rep.log_dim = log_dim_of(rep.f)
    out = rep.to_json()
    out["before_area_fix"] = before.to_json()
    out["candidate"] = evaluate_candidate(rep.f, p.get("d_hat")).to_json()
    _emit(_dumps(out), p.get("out"))
    return 0


def _cmd_decompose(cfg: RunConfig) -> int:
    from dataclasses import asdict

    from .global_build import window_decomposition
    from .partitions import Partition, to_step_function

    p = cfg.params
    lam = Partition.parse(_require(p, "partition", lambda v: True, "--partition is required"))
    if lam.size < 1:
        raise ValidationError("partition must be nonempty")
    w = _require(p, "window", lambda v: v >= 1, "--window must be >= 1")
    d = window_decomposition(to_step_function(lam), lam.size, w, margin=p.get("margin"))
    out = {"N": lam.size, "window": w, "sum_local": d.sum_local, "global": d.global_total, "slack": d.slack, "windows": [asdict(x) for x in d.windows]}
    _emit(_dumps(out), p.get("out"))
    return 0


_DISPATCH = {
    "maxdim": _cmd_maxdim,
    "verify-vk": _cmd_verify_vk,
    "sigma": _cmd_sigma,
    "estimate-d": _cmd_estimate_d,
    "construct": _cmd_construct,
    "decompose": _cmd_decompose,
}


def run(cfg: RunConfig) -> int:
    try:
        return _DISPATCH[cfg.command](cfg)
    except (ValidationError, DataError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2
    except (InvariantViolation, ConvergenceError) as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 3


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are bad input (status 1), not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="maxrep", description="Maximal irreducible dimensions of symmetric groups.")
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--cache", type=Path, default=None, help=f"sigma cache (default ${cache_mod.ENV_VAR} or {cache_mod.DEFAULT_PATH})")
    common.add_argument("--output", choices=("csv", "json"), default="json")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("maxdim", parents=[common], help="exact d_N table")
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--check-mckay", type=int, default=None)
    s.add_argument("--checkpoint", type=Path, default=None)

    s = sub.add_parser("verify-vk", parents=[common], help="check the exact energy identity")
    s.add_argument("--n", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--samples", type=int)
    s.add_argument("--tol", type=float, default=1e-6)

    s = sub.add_parser("sigma", parents=[common], help="local minimal energy")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rho", type=str, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", default=True)
    g.add_argument("--heuristic", action="store_true")
    s.add_argument("--budget", type=int, default=200_000)
    s.add_argument("--ceiling", type=int, default=None)

    s = sub.add_parser("estimate-d", parents=[common], help="bracket the limit constant")
    s.add_argument("--grid", type=int, required=True)
    s.add_argument("--fill", type=int, default=None, help="compute missing exact records up to this length")
    s.add_argument("--table", type=Path, default=None, help="d_N table for cross-validation")

    s = sub.add_parser("construct", parents=[common], help="near-optimal shape of size N")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--window", type=int, required=True)
    s.add_argument("--margin", type=int, default=None)
    s.add_argument("--R", type=int, default=None)
    s.add_argument("--d-hat", type=float, default=None)

    s = sub.add_parser("decompose", parents=[common], help="window decomposition of a partition")
    s.add_argument("--partition", type=str, required=True)
    s.add_argument("--window", type=int, required=True)
    s.add_argument("--margin", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    skip = {"command", "threads", "cache", "output", "seed", "verbose"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    try:
        cfg = RunConfig(args.command, params, args.threads, args.cache, args.output, args.seed)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
