"""Near-optimal global shapes built from local minimisers.

The shape follows the staircase under Omega_N outside a central range.
Inside, it is a chain of windows: each window carries a local minimiser at
the slope of Omega_N there, with its endpoint retargeted so that the chain
is pinned to the staircase at every window boundary.  ``area_fix`` then
bends the profile to enclose exactly the requested number of cells.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .errors import ConstructionError, ValidationError
from .functionals import EnergyBreakdown, QuadratureConfig, energy_breakdown
from .local_gas import LocalPath, Theta_local, adjust_endpoint, sigma_exact, sigma_heuristic
from .partitions import LOG_DPS, StepFunction, area, hook_distances
from .shape import omega_N, omega_N_prime, staircase_below


@dataclass(frozen=True)
class Window:
    x_start: int
    length: int
    rho: float
    local_total: float


@dataclass
class BuildReport:
    f: StepFunction
    N_target: int
    breakdown: EnergyBreakdown | None
    log_dim: float
    window_size: int
    windows: list[Window] = field(default_factory=list)

    def to_json(self, max_parts: int = 1000) -> dict:
        from .partitions import from_step_function

        lam = from_step_function(self.f)
        return {
            "N_target": self.N_target,
            "area": area(self.f),
            "window_size": self.window_size,
            "log_dim": self.log_dim,
            "breakdown": self.breakdown.to_json() if self.breakdown else None,
            "windows": [asdict(w) for w in self.windows],
            "parts_head": list(lam.parts[:max_parts]),
            "profile_rle": step_run_length(self.f),
        }


def step_run_length(f: StepFunction) -> str:
    """Window radius then runs like '+3-1+2'."""
    out = [f"{f.L}:"]
    steps = f.steps
    i = 0
    while i < len(steps):
        j = i
        while j < len(steps) and steps[j] == steps[i]:
            j += 1
        out.append(("+" if steps[i] > 0 else "-") + str(j - i))
        i = j
    return "".join(out)


def window_grid(N: int, window: int, margin: int) -> list[tuple[int, int]]:
    """(start, length) of the windows covering [-(E - margin), E - margin], E = floor(2 sqrt N)."""
    edge = math.isqrt(4 * N) - margin
    if edge <= 0:
        return []
    out = []
    x = -edge
    while x < edge:
        m = min(window, edge - x)
        out.append((x, m))
        x += m
    return out


def _heights_on(f: StepFunction, L: int) -> np.ndarray:
    return f.extended(L).heights() if L > f.L else f.heights()


def _local_minimiser(m: int, rho: float, solver: str, seed: int) -> LocalPath:
    if solver == "exact":
        return sigma_exact(m, rho, ceiling=max(m, 1)).witness
    return sigma_heuristic(m, rho, seed=seed).witness


def log_dim_of(f: StepFunction) -> float:
    """log dim of the partition with profile f."""
    N = area(f)
    counts = hook_distances(f.array)
    with mpmath.workdps(LOG_DPS):
        s = mpmath.fsum(int(c) * mpmath.log(h) for h, c in enumerate(counts) if c and h > 0)
        return float(mpmath.loggamma(N + 1) - s)


def build_near_optimizer(
    N: int,
    window: int,
    margin: int | None = None,
    solver: str | None = None,
    seed: int = 0,
    with_breakdown: bool = True,
) -> BuildReport:
    if N < 1:
        raise ValidationError("N must be >= 1")
    if window < 1:
        raise ValidationError("window must be >= 1")
    margin = 4 * window if margin is None else margin
    solver = solver or ("exact" if window <= 32 else "heuristic")
    base = staircase_below(N)
    L = math.isqrt(4 * N) + window + 4
    h = _heights_on(base, L).copy()
    xs = np.arange(-L, L + 1)
    windows = []
    cache: dict[tuple[int, float], LocalPath] = {}
    for i, (x0, m) in enumerate(window_grid(N, window, margin)):
        rho = float(omega_N_prime(x0, N))
        key = (m, rho)
        if key not in cache:
            cache[key] = _local_minimiser(m, rho, solver, seed)
        g = cache[key]
        target = int(h[x0 + m + L] - h[x0 + L])
        try:
            g = adjust_endpoint(g, target, rho)
        except ConstructionError as exc:
            raise ConstructionError(f"window {i} at x = {x0}: {exc}") from exc
        h[x0 + L + 1 : x0 + L + m + 1] = h[x0 + L] + np.cumsum(g.steps)
        windows.append(Window(x0, m, rho, Theta_local(g, rho)))
    f = StepFunction.from_heights(L, h).trimmed()
    dev = np.max(np.abs(h - omega_N(xs, N)))
    if dev > window + 2 + 1e-9:
        raise ConstructionError(f"profile strays {dev:.3f} from Omega_N (limit {window + 2})")
    breakdown = energy_breakdown(f, N) if with_breakdown else None
    return BuildReport(f, N, breakdown, log_dim_of(f), window, windows)


# -- exact area ------------------------------------------------------------


def _raised(h, L, z, r, R):
    """Vertex values of the deficit modification on [0, z] (indices into h)."""
    xz = np.arange(0, z + 1)
    f = h[xz + L]
    f0, fz = h[L], h[z + L]
    g = np.where(
        xz >= z - r,
        fz + z - xz,
        np.maximum(f, np.where(xz >= z - r - 1, fz + r - (z - r - xz), fz - 2 + z - xz)),
    )
    return np.minimum(np.minimum(f0 + xz, f + R), g)


def _lowered(h, L, z, r, R):
    xz = np.arange(0, z + 1)
    f = h[xz + L]
    f0, fz = h[L], h[z + L]
    g = np.where(
        xz >= z - r,
        fz - (z - xz),
        np.minimum(f, np.where(xz >= z - r - 1, fz - r + (z - r - xz), fz + 2 - (z - xz))),
    )
    return np.maximum(np.maximum(np.maximum(f0 - xz, f - R), g), xz)


def area_fix(f: StepFunction, N: int, R: int | None = None) -> StepFunction:
    """Bend f on [0, z] until it encloses exactly N cells.

    Too little area: f is raised towards min(f(0) + x, f + R), keeping a
    notch that walks left as r grows; each increment of r adds at most one
    cell, so scanning (z, r) in order hits N exactly.  Too much area uses the
    reflected construction, clipped at |x|.

    ``R=None`` takes the smallest even R whose sweep reaches N.  The energy
    cost grows like R^2 log(z), so the smallest workable lift is the cheapest.
    """
    if N < 0:
        raise ValidationError("N must be nonnegative")
    current = area(f)
    if current == N:
        return f
    if R is not None:
        if R < 0 or R % 2:
            raise ValidationError("R must be a nonnegative even integer")
        out = _sweep(f, N, R)
        if out is None:
            raise ConstructionError(f"area {current} cannot reach {N} with R = {R}")
        return out
    for R in range(2, 2 * f.L + abs(N - current) + 4, 2):
        out = _sweep(f, N, R)
        if out is not None:
            return out
    raise ConstructionError(f"area {current} cannot reach {N}")


def _sweep(f: StepFunction, N: int, R: int) -> StepFunction | None:
    current = area(f)
    L = f.L + R + 2
    h = _heights_on(f, L).astype(np.int64)
    modify = _raised if current < N else _lowered
    sign = 1 if current < N else -1
    base = int(np.sum(h - np.abs(np.arange(-L, L + 1))))

    def area_with(z, r):
        seg = modify(h, L, z, r, R)
        delta = int(np.sum(seg - h[L : L + z + 1]))
        return (base + delta) // 2, seg

    for z in range(1, L + 1):
        if sign * (area_with(z, 0)[0] - N) > 0 or sign * (area_with(z, z)[0] - N) < 0:
            continue
        for r in range(0, z + 1):
            a, seg = area_with(z, r)
            if a == N:
                out = h.copy()
                out[L : L + z + 1] = seg
                return StepFunction.from_heights(L, out).trimmed()
    return None


# -- diagnostics ------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    sum_local: float
    global_total: float
    slack: float
    windows: list[Window]


def window_decomposition(f: StepFunction, N: int, window: int, margin: int | None = None, cfg: QuadratureConfig | None = None) -> Decomposition:
    margin = window if margin is None else margin
    L = max(f.L, math.isqrt(4 * N) + 1)
    h = _heights_on(f, L)
    wins = []
    for x0, m in window_grid(N, window, margin):
        g = LocalPath(tuple(int(d) for d in np.diff(h[x0 + L : x0 + L + m + 1])))
        rho = float(omega_N_prime(x0, N))
        wins.append(Window(x0, m, rho, Theta_local(g, rho)))
    total = energy_breakdown(f, N, cfg).total
    s = math.fsum(w.local_total for w in wins)
    return Decomposition(s, total, total - s, wins)


@dataclass(frozen=True)
class CandidateReport:
    N: int
    log_dim: float
    scaled_deficit: float  # -log(dim / sqrt(N!)) / sqrt(N)
    gap: float | None

    def to_json(self) -> dict:
        return asdict(self)


def evaluate_candidate(f: StepFunction, d_hat: float | None = None) -> CandidateReport:
    N = area(f)
    if N < 1:
        raise ValidationError("candidate must enclose at least one cell")
    ld = log_dim_of(f)
    with mpmath.workdps(LOG_DPS):
        s = float((mpmath.loggamma(N + 1) / 2 - ld) / mpmath.sqrt(N))
    return CandidateReport(N, ld, s, None if d_hat is None else s - d_hat)
