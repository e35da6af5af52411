"""Brackets on the per-length limit of sigma and on the integral constant.

The constant is d = int_{-1}^{1} sigma^{Omega'(x)} dx.  Sampling x at the
Chebyshev points cos((2k - 1) pi / 4G) makes the slopes Omega'(x) the
midpoint grid 1 - (2k - 1) / 2G on (0, 1), and sigma is even in the slope,
so only nonnegative slopes are ever computed.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .errors import DataError, ValidationError
from .local_gas import SigmaRecord, as_slope

LOWER_CONSTANT = 2 * (math.pi - 2) / math.pi**2
UPPER_CONSTANT = math.pi / math.sqrt(6)


@dataclass(frozen=True)
class FitConfig:
    # fit on n >= fit_fraction * (largest n available)
    fit_fraction: float = 0.5
    # below this many expected down-steps in the longest path the data say
    # nothing about the limit and the tail bound takes over
    tail_steps: float = 8.0
    tail_constant: float | None = None  # None: calibrated from the data


@dataclass(frozen=True)
class SigmaBracket:
    rho: float
    lower: float
    upper: float
    n_used: list[int]
    slope: float = 0.0  # b in sigma_n / n = sigma - b / log n
    residual: float = 0.0
    tail: bool = False

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass
class DEstimate:
    value: float
    lower: float
    upper: float
    grid: list[SigmaBracket] = field(default_factory=list)
    quadrature_error: float = 0.0
    tail_constant: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        for g, b in zip(d["grid"], self.grid):
            g["mid"] = b.mid
        return d

    def grid_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "rho", "sigma_lower", "sigma_mid", "sigma_upper"])
        for b in self.grid:
            x = math.sin(math.pi * b.rho / 2)
            w.writerow([f"{v:.12g}" for v in (x, b.rho, b.lower, b.mid, b.upper)])
        return buf.getvalue()


def slope_grid(grid_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positive-half Chebyshev nodes x, their slopes, and symmetric Fejer weights.

    ``sum(2 * w * h(x))`` integrates an even h over [-1, 1].
    """
    if grid_size < 1:
        raise ValidationError("grid_size must be >= 1")
    M = 2 * grid_size
    k = np.arange(1, grid_size + 1)
    theta = (2 * k - 1) * np.pi / (2 * M)
    x = np.cos(theta)
    j = np.arange(1, M // 2 + 1)
    w = 2.0 / M * (1 - 2 * np.sum(np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1), axis=1))
    rho = 1.0 - (2 * k - 1) / M
    return x, rho, w


def _by_slope(records) -> dict[float, dict[int, dict[str, float]]]:
    out: dict[float, dict[int, dict[str, float]]] = defaultdict(lambda: defaultdict(dict))
    for r in records:
        slot = out[abs(r.rho)][r.n]
        if r.kind not in slot or r.value < slot[r.kind]:
            slot[r.kind] = r.value
    return out


def tail_bound(rho: float, C: float) -> float:
    gap = 1.0 - abs(rho)
    if gap <= 0:
        return 0.0
    return C * gap * math.log(2.0 / gap)


def sigma_limit(rho, records, cfg: FitConfig | None = None, tail_constant: float | None = None) -> SigmaBracket:
    """Bracket sigma^rho from per-length records at this slope (or its mirror)."""
    cfg = cfg or FitConfig()
    rho = as_slope(rho)
    data = _by_slope([r for r in records if abs(abs(r.rho) - abs(rho)) == 0]).get(abs(rho), {})
    exact = {n: v["exact"] for n, v in data.items() if "exact" in v}
    if len(exact) < 3:
        raise DataError(f"need exact records at >= 3 lengths for rho = {rho}, have {len(exact)}")
    lower = max(v / n for n, v in exact.items())
    # upper bounds on sigma_n from either source
    best = {n: min(v.values()) for n, v in data.items()}
    n_max = max(best)
    ns = sorted(n for n in best if n >= cfg.fit_fraction * n_max and n >= 2)
    if len(ns) < 2:
        ns = sorted(best)[-2:]
    y = np.array([best[n] / n for n in ns])
    t = np.array([1.0 / math.log(n) for n in ns])
    # y = s - b t with b >= 0
    A = np.vstack([np.ones_like(t), -t]).T
    (s, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    if b < 0:
        b, s = 0.0, float(np.mean(y))
    residual = float(np.sqrt(np.mean((y - (s - b * t)) ** 2)))
    upper = max(float(s), lower)
    tail = n_max * (1 - abs(rho)) < cfg.tail_steps
    if tail and tail_constant is not None:
        upper = max(lower, tail_bound(rho, tail_constant))
    return SigmaBracket(rho, lower, upper, ns, float(b), residual, tail)


def calibrate_tail_constant(brackets: list[SigmaBracket]) -> float:
    """Smallest C with C (1-rho) log(2/(1-rho)) above every fitted upper value
    on the informative part of the grid with rho >= 1/2."""
    ratios = [b.upper / tail_bound(b.rho, 1.0) for b in brackets if not b.tail and 0.5 <= abs(b.rho) < 1 and b.upper > 0]
    return max(ratios) if ratios else 1.0


def estimate_d(grid_size: int, records, cfg: FitConfig | None = None) -> DEstimate:
    cfg = cfg or FitConfig()
    if grid_size < 8:
        raise ValidationError("grid_size must be >= 8")
    x, rhos, w = slope_grid(grid_size)
    records = list(records)
    if records and all(r.value == 0 for r in records):
        zero = [SigmaBracket(float(r), 0.0, 0.0, []) for r in rhos]
        return DEstimate(0.0, 0.0, 0.0, zero)
    first = [sigma_limit(float(r), records, cfg) for r in rhos]
    C = cfg.tail_constant if cfg.tail_constant is not None else calibrate_tail_constant(first)
    grid = [sigma_limit(float(r), records, cfg, tail_constant=C) for r in rhos]
    lo = np.array([b.lower for b in grid])
    hi = np.array([b.upper for b in grid])
    mid = 0.5 * (lo + hi)
    value = float(2 * np.sum(w * mid))
    # compare with the midpoint rule in the slope variable, dx = (pi/2) cos(pi rho / 2) d rho
    alt = float(2 * np.sum(mid * (np.pi / 2) * np.cos(np.pi * rhos / 2)) / grid_size)
    return DEstimate(value, float(2 * np.sum(w * lo)), float(2 * np.sum(w * hi)), grid, abs(value - alt), C)


# -- cross-validation against exact d_N ---------------------------------------


@dataclass(frozen=True)
class Comparison:
    N: list[int]
    s: list[float]
    fitted_d: float
    fitted_b: float
    d_hat: float | None
    discrepancy: float | None
    alternative_fits: dict

    def to_json(self) -> dict:
        return asdict(self)


def s_values(table) -> tuple[list[int], list[float]]:
    Ns, ss = [], []
    with mpmath.workdps(30):
        for rec in table:
            Ns.append(rec.N)
            ss.append(float((mpmath.loggamma(rec.N + 1) / 2 - rec.log_d) / mpmath.sqrt(rec.N)))
    return Ns, ss


def _linear_fit(t, y):
    A = np.vstack([np.ones_like(t), -t]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(a), float(b)


def compare_with_exact(table, d_hat: DEstimate | None = None, n_min: int = 10) -> Comparison:
    table = list(table)
    if not table:
        raise DataError("empty d_N table")
    Ns, ss = s_values(table)
    N = np.array(Ns, dtype=float)
    s = np.array(ss)
    use = N >= n_min
    if use.sum() < 2:
        raise DataError(f"need at least two N >= {n_min} for the fit")
    a, b = _linear_fit(1 / np.log(N[use]), s[use])
    alt = {}
    a2, b2 = _linear_fit(1 / np.sqrt(N[use]), s[use])
    alt["inv_sqrt"] = {"d": a2, "b": b2}
    # subtracting the known (1/4) log(2 pi N) / sqrt N term before fitting
    corrected = s[use] + 0.25 * np.log(2 * np.pi * N[use]) / np.sqrt(N[use])
    a3, b3 = _linear_fit(1 / np.log(N[use]), corrected)
    alt["stirling_corrected_inv_log"] = {"d": a3, "b": b3}
    a4, b4 = _linear_fit(1 / np.sqrt(N[use]), corrected)
    alt["stirling_corrected_inv_sqrt"] = {"d": a4, "b": b4}
    dh = d_hat.value if d_hat is not None else None
    return Comparison(Ns, ss, a, b, dh, None if dh is None else abs(a - dh), alt)
