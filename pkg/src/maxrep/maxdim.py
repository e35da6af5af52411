"""Exact maximal dimensions d_N by exhaustive scan.

Partitions are grown from the bottom row upwards.  Putting a new top row of
length r on a diagram mu leaves every old hook unchanged; the new cells have
hooks r - j + col_mu(j).  So every node of the search carries log prod(hooks)
of its diagram, and a single walk produces every partition of every N in a
range: each node mu with |mu| = s closes into a partition of N by a top row
of length N - s.

The walk keeps, per N, every partition whose log hook product lies within
``TIE_WINDOW`` of the running minimum.  Survivors are settled with exact
integer hook products, so floating point never decides the winner.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numba as nb
import numpy as np

from .errors import DataError, InvariantViolation, ResourceLimitError, ValidationError
from .partitions import LOG_DPS, Partition, hook_lengths, partition_count

DEFAULT_CEILING = 100
TIE_WINDOW = 1e-6
_SLOTS = 64


@dataclass
class MaxDimRecord:
    N: int
    argmax: Partition
    log_d: mpmath.mpf
    d_exact: int | None
    partitions_scanned: int
    conjugate: Partition | None = None  # the other maximiser, if not self-conjugate
    wall_seconds: float = 0.0

    def s_value(self) -> float:
        """-log(d_N / sqrt(N!)) / sqrt(N)."""
        with mpmath.workdps(LOG_DPS):
            return float((mpmath.loggamma(self.N + 1) / 2 - self.log_d) / mpmath.sqrt(self.N))


@dataclass
class ScanConfig:
    ceiling: int = DEFAULT_CEILING
    threads: int = 1
    checkpoint: Path | None = None


# -- kernel -----------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _offer(N, val, parts_buf, plen, best, cnt, vals, slots, lens, overflow):
    """Record a leaf if it is within the tie window of the best for N."""
    if val > best[N] + 1e-6:
        return
    if val < best[N]:
        best[N] = val
        # drop candidates that fell out of the window
        keep = 0
        for i in range(cnt[N]):
            if vals[N, i] <= val + 1e-6:
                vals[N, keep] = vals[N, i]
                lens[N, keep] = lens[N, i]
                slots[N, keep, :] = slots[N, i, :]
                keep += 1
        cnt[N] = keep
    c = cnt[N]
    if c >= vals.shape[1]:
        overflow[0] = 1
        return
    vals[N, c] = val
    lens[N, c] = plen
    for i in range(plen):
        slots[N, c, i] = parts_buf[i]
    cnt[N] = c + 1


@nb.njit(cache=True, nogil=True)
def _scan_shard(bottom, second, n_lo, n_hi, logs, logfact, best, cnt, vals, slots, lens, scanned, overflow):
    """Walk all partitions of sizes n_lo..n_hi whose two lowest rows are fixed.

    ``bottom = 0`` is the shard of one-row partitions; ``second = 0`` the
    two-row partitions with bottom row ``bottom``.
    """
    parts_buf = np.zeros(n_hi + 1, dtype=np.int64)
    if bottom == 0:
        for N in range(max(n_lo, 1), n_hi + 1):
            parts_buf[0] = N
            scanned[N] += 1
            _offer(N, logfact[N], parts_buf, 1, best, cnt, vals, slots, lens, overflow)
        return
    col = np.zeros(n_hi + 1, dtype=np.int64)
    rows = np.zeros(n_hi + 1, dtype=np.int64)
    H = np.zeros(n_hi + 1)
    # root: the bottom row alone
    rows[0] = bottom
    for j in range(bottom):
        col[j] = 1
    H[1] = logfact[bottom]
    size0 = bottom
    if second == 0:
        t = bottom
        for r in range(max(t, n_lo - size0), n_hi - size0 + 1):
            acc = H[1] + logfact[r - t]
            for j in range(t):
                acc += logs[r - j + col[j]]
            N = size0 + r
            parts_buf[0] = r
            parts_buf[1] = bottom
            scanned[N] += 1
            _offer(N, acc, parts_buf, 2, best, cnt, vals, slots, lens, overflow)
        return
    if size0 + 2 * second > n_hi:
        return
    # add the fixed second row
    acc = H[1] + logfact[second - bottom]
    for j in range(bottom):
        acc += logs[second - j + col[j]]
    for j in range(second):
        col[j] += 1
    rows[1] = second
    H[2] = acc
    depth = 2
    size = np.zeros(n_hi + 2, dtype=np.int64)
    size[1] = bottom
    size[2] = bottom + second
    nxt = np.zeros(n_hi + 2, dtype=np.int64)  # next top row to try at each depth
    nxt[2] = second
    while depth >= 2:
        s = size[depth]
        t = rows[depth - 1]
        r = nxt[depth]
        if r == t:
            # first visit: emit every closing top row
            for rr in range(max(t, n_lo - s), n_hi - s + 1):
                acc = H[depth] + logfact[rr - t]
                for j in range(t):
                    acc += logs[rr - j + col[j]]
                N = s + rr
                parts_buf[0] = rr
                for i in range(depth):
                    parts_buf[i + 1] = rows[depth - 1 - i]
                scanned[N] += 1
                _offer(N, acc, parts_buf, depth + 1, best, cnt, vals, slots, lens, overflow)
        # descend: internal top row r needs room for at least one more row >= r
        if s + 2 * r <= n_hi:
            acc = H[depth] + logfact[r - t]
            for j in range(t):
                acc += logs[r - j + col[j]]
            for j in range(r):
                col[j] += 1
            rows[depth] = r
            nxt[depth] = r + 1
            H[depth + 1] = acc
            size[depth + 1] = s + r
            nxt[depth + 1] = r
            depth += 1
            continue
        # backtrack
        depth -= 1
        if depth >= 2:
            top = rows[depth]
            for j in range(top):
                col[j] -= 1


# -- driver -----------------------------------------------------------------


def _shards(n_hi: int) -> list[tuple[int, int]]:
    out = [(0, 0)]
    for b in range(1, n_hi // 2 + 1):
        out.append((b, 0))
        for c in range(b, (n_hi - b) // 2 + 1):
            out.append((b, c))
    return out


class _ShardResult:
    def __init__(self, n_hi: int):
        self.best = np.full(n_hi + 1, np.inf)
        self.cnt = np.zeros(n_hi + 1, dtype=np.int64)
        self.vals = np.zeros((n_hi + 1, _SLOTS))
        self.slots = np.zeros((n_hi + 1, _SLOTS, n_hi + 1), dtype=np.int64)
        self.lens = np.zeros((n_hi + 1, _SLOTS), dtype=np.int64)
        self.scanned = np.zeros(n_hi + 1, dtype=np.int64)
        self.overflow = np.zeros(1, dtype=np.int64)

    def candidates(self, N: int) -> list[tuple[int, ...]]:
        return [tuple(int(p) for p in self.slots[N, i, : self.lens[N, i]]) for i in range(self.cnt[N])]


def _tables(n_hi: int):
    logs = np.zeros(2 * n_hi + 2)
    logs[1:] = np.log(np.arange(1, 2 * n_hi + 2))
    logfact = np.concatenate(([0.0], np.cumsum(logs[1 : n_hi + 1])))
    return logs, logfact


def _run_shard(shard, n_lo, n_hi, logs, logfact):
    res = _ShardResult(n_hi)
    _scan_shard(shard[0], shard[1], n_lo, n_hi, logs, logfact, res.best, res.cnt, res.vals, res.slots, res.lens, res.scanned, res.overflow)
    if res.overflow[0]:
        raise InvariantViolation(f"more than {_SLOTS} near-tied partitions in shard {shard}")
    return {
        N: {"scanned": int(res.scanned[N]), "best": float(res.best[N]), "candidates": res.candidates(N)}
        for N in range(n_lo, n_hi + 1)
        if res.scanned[N]
    }


def _hook_product(parts: tuple[int, ...]) -> int:
    return math.prod(hook_lengths(Partition(parts)))


def _reverse_lex_key(parts):
    # earlier in reverse-lexicographic enumeration means lexicographically larger
    return tuple(-p for p in parts) + (1,)


def _settle(N: int, pooled: list[tuple[float, tuple[int, ...]]], scanned: int, seconds: float) -> MaxDimRecord:
    best = min(v for v, _ in pooled)
    finalists = {p for v, p in pooled if v <= best + TIE_WINDOW}
    products = {p: _hook_product(p) for p in finalists}
    smallest = min(products.values())
    winners = sorted((p for p, h in products.items() if h == smallest), key=_reverse_lex_key)
    argmax = Partition(winners[0])
    conj = argmax.conjugate()
    d, rem = divmod(math.factorial(N), smallest)
    if rem:
        raise InvariantViolation(f"hook product does not divide {N}!")
    with mpmath.workdps(LOG_DPS):
        log_d = +mpmath.log(d)
    return MaxDimRecord(N, argmax, log_d, d, scanned, None if conj == argmax else conj, seconds)


def scan_range(n_lo: int, n_hi: int, cfg: ScanConfig | None = None) -> list[MaxDimRecord]:
    cfg = cfg or ScanConfig()
    if n_lo < 1 or n_hi < n_lo:
        raise ValidationError(f"bad range [{n_lo}, {n_hi}]")
    if n_hi > cfg.ceiling:
        raise ResourceLimitError(f"N = {n_hi} exceeds the scan ceiling {cfg.ceiling}")
    if cfg.threads < 1:
        raise ValidationError("threads must be >= 1")
    t0 = time.perf_counter()
    logs, logfact = _tables(n_hi)
    shards = _shards(n_hi)
    done = _load_checkpoint(cfg.checkpoint, n_lo, n_hi)
    todo = [s for s in shards if s not in done]

    def work(shard):
        out = _run_shard(shard, n_lo, n_hi, logs, logfact)
        if cfg.checkpoint is not None:
            _append_checkpoint(cfg.checkpoint, n_lo, n_hi, shard, out)
        return shard, out

    if cfg.threads == 1:
        results = [work(s) for s in todo]
    else:
        with ThreadPoolExecutor(cfg.threads) as pool:
            results = list(pool.map(work, todo))
    merged = dict(done)
    merged.update(results)
    seconds = time.perf_counter() - t0
    records = []
    for N in range(n_lo, n_hi + 1):
        pooled, scanned = [], 0
        for shard in shards:
            entry = merged[shard].get(N)
            if entry is None:
                continue
            scanned += entry["scanned"]
            pooled.extend((entry["best"], tuple(p)) for p in entry["candidates"])
        if scanned != partition_count(N):
            raise InvariantViolation(f"scanned {scanned} partitions of {N}, expected {partition_count(N)}")
        records.append(_settle(N, pooled, scanned, seconds))
    return records


# shard checkpoints: one JSON object per completed shard


def _load_checkpoint(path, n_lo, n_hi):
    if path is None or not Path(path).exists():
        return {}
    done = {}
    with open(path) as fh:
        for line in fh:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                continue  # a torn final line from an interrupted run
            if obj.get("range") != [n_lo, n_hi]:
                continue
            done[tuple(obj["shard"])] = {int(k): v for k, v in obj["result"].items()}
    return done


def _append_checkpoint(path, n_lo, n_hi, shard, result):
    line = json.dumps({"range": [n_lo, n_hi], "shard": list(shard), "result": result})
    with open(path, "a") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


# -- public operations ------------------------------------------------------


def d_exact(N: int, cfg: ScanConfig | None = None) -> MaxDimRecord:
    if N == 0:
        return MaxDimRecord(0, Partition(()), mpmath.mpf(0), 1, 1)
    return scan_range(N, N, cfg)[0]


CSV_FIELDS = ["N", "log_d", "log_d_minus_half_log_Nfactorial_over_sqrtN", "argmax", "scanned", "wall_seconds"]


def run_length(parts: Partition) -> str:
    """'5^2 3 1^4' style encoding of the parts."""
    out = []
    ps = list(parts.parts)
    i = 0
    while i < len(ps):
        j = i
        while j < len(ps) and ps[j] == ps[i]:
            j += 1
        out.append(f"{ps[i]}^{j - i}" if j - i > 1 else str(ps[i]))
        i = j
    return " ".join(out)


def parse_run_length(text: str) -> Partition:
    parts = []
    for tok in text.split():
        base, _, mult = tok.partition("^")
        parts += [int(base)] * (int(mult) if mult else 1)
    return Partition(tuple(parts))


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def record_row(rec: MaxDimRecord) -> dict:
    with mpmath.workdps(LOG_DPS):
        scaled = (rec.log_d - mpmath.loggamma(rec.N + 1) / 2) / mpmath.sqrt(rec.N)
    return {
        "N": rec.N,
        "log_d": _fmt(float(rec.log_d)),
        "log_d_minus_half_log_Nfactorial_over_sqrtN": _fmt(float(scaled)),
        "argmax": run_length(rec.argmax),
        "scanned": rec.partitions_scanned,
        "wall_seconds": _fmt(rec.wall_seconds),
    }


def read_table(path) -> list[MaxDimRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                lam = parse_run_length(row["argmax"])
                N = int(row["N"])
                if lam.size != N:
                    raise DataError(f"argmax in row N={N} has size {lam.size}")
                d = math.factorial(N) // _hook_product(lam.parts)
                with mpmath.workdps(LOG_DPS):
                    log_d = +mpmath.log(d)
                conj = lam.conjugate()
                out.append(MaxDimRecord(N, lam, log_d, d, int(row["scanned"]), None if conj == lam else conj, float(row["wall_seconds"])))
    except (KeyError, ValueError) as exc:
        raise DataError(f"malformed table {path}: {exc}") from exc
    return out


def write_table(path, records: list[MaxDimRecord]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for rec in records:
            w.writerow(record_row(rec))
    os.replace(tmp, path)


def d_table(N_max: int, cfg: ScanConfig | None = None, table_path=None) -> list[MaxDimRecord]:
    """Records for N = 1..N_max, reusing rows already present in ``table_path``."""
    cfg = cfg or ScanConfig()
    if N_max < 0:
        raise ValidationError("N_max must be >= 0")
    if N_max > cfg.ceiling:
        raise ResourceLimitError(f"N = {N_max} exceeds the scan ceiling {cfg.ceiling}")
    have = [r for r in read_table(table_path) if r.N <= N_max] if table_path else []
    have.sort(key=lambda r: r.N)
    # only a gapless prefix is trusted
    prefix = []
    for r in have:
        if r.N != len(prefix) + 1:
            break
        prefix.append(r)
    start = len(prefix) + 1
    records = prefix
    if start <= N_max:
        records = prefix + scan_range(start, N_max, cfg)
    if table_path:
        write_table(table_path, records)
    return records


@dataclass(frozen=True)
class McKayCheck:
    N: int
    holds: bool
    margin: float  # log d_N - (log N!/2 - log N)


def check_mckay(N: int, record: MaxDimRecord | None = None, cfg: ScanConfig | None = None) -> McKayCheck:
    rec = record if record is not None else d_exact(N, cfg)
    if rec.N != N or rec.d_exact is None:
        raise ValidationError("record does not match N")
    # d >= sqrt(N!) / N  <=>  d^2 N^2 >= N!
    holds = rec.d_exact**2 * N * N >= math.factorial(N)
    with mpmath.workdps(LOG_DPS):
        margin = float(rec.log_d - mpmath.loggamma(N + 1) / 2 + mpmath.log(N))
    return McKayCheck(N, holds, margin)
