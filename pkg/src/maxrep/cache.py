"""Append-only NDJSON store of sigma records.

Every record is re-evaluated on load.  A record whose stored value does not
match the energy of its witness is quarantined and never reaches the
estimator, so each lower bound it uses is backed by a checked path.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .local_gas import LocalPath, SigmaRecord, Theta_local

SCHEMA_VERSION = 1
ENV_VAR = "MAXREP_CACHE"
DEFAULT_PATH = Path("sigma_cache.ndjson")

log = logging.getLogger(__name__)


def default_path() -> Path:
    return Path(os.environ.get(ENV_VAR, DEFAULT_PATH))


def record_to_json(rec: SigmaRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n": rec.n,
        "rho": rec.rho,
        "value": rec.value,
        "kind": rec.kind,
        "seed": rec.seed,
        "witness": str(rec.witness),
    }


def record_from_json(obj: dict) -> SigmaRecord:
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {obj.get('schema_version')!r}")
    witness = LocalPath.parse(obj["witness"])
    if witness.n != obj["n"]:
        raise ValueError("witness length differs from n")
    return SigmaRecord(int(obj["n"]), float(obj["rho"]), float(obj["value"]), witness, obj["kind"], obj.get("seed"))


@dataclass
class LoadResult:
    records: list[SigmaRecord] = field(default_factory=list)
    quarantined: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)


class SigmaCache:
    def __init__(self, path=None):
        self.path = Path(path) if path is not None else default_path()
        self._lock = threading.Lock()

    def load(self, verify: bool = True) -> LoadResult:
        out = LoadResult()
        if not self.path.exists():
            return out
        try:
            fh = open(self.path)
        except OSError as exc:
            raise DataError(f"cannot read sigma cache {self.path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = record_from_json(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("sigma cache line %d skipped: %s", lineno, exc)
                    out.quarantined.append((lineno, f"unreadable: {exc}"))
                    continue
                if verify and Theta_local(rec.witness, rec.rho) != rec.value:
                    log.warning("sigma cache line %d quarantined: value does not match witness", lineno)
                    out.quarantined.append((lineno, "witness mismatch"))
                    continue
                out.records.append(rec)
        return out

    def append(self, records) -> None:
        lines = "".join(json.dumps(record_to_json(r)) + "\n" for r in records)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fh.write(lines)
                fh.flush()
                os.fsync(fh.fileno())


def best_by_key(records) -> dict[tuple[float, int, str], SigmaRecord]:
    """Smallest value per (rho, n, kind); later duplicates never loosen a bound."""
    best: dict[tuple[float, int, str], SigmaRecord] = {}
    for r in records:
        key = (r.rho, r.n, r.kind)
        if key not in best or r.value < best[key].value:
            best[key] = r
    return best
