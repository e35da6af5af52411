"""Energy decomposition of log(prod h^2 / (N/e)^N) for a lattice profile.

For f in S and g = f - Omega_N the three terms are

    theta_N(f)     = iint ((g(x) - g(y)) / (x - y))^2 dx dy
    bar_theta_N(f) = int_{|x| >= 2 sqrt N} (f(x) - |x|) arccosh(|x| / 2 sqrt N) dx
    tilde_theta(f) = sum over cells of phi(hook length)

and log(prod h^2 / (N/e)^N) = theta_N / 8 + tilde_theta + bar_theta_N exactly.

theta_N is evaluated in closed form.  Integrating by parts twice,

    theta_N = iint (x - y)^2 log|x - y| dmu(x) dmu(y),   mu = f'' - Omega_N'',

where f'' is a sum of point masses +-2 at the corners of f and Omega_N'' is
the arcsine density on [-2 sqrt N, 2 sqrt N].  The arcsine log-potential has
a terminating Chebyshev expansion against 1, v and v^2, which makes the
Omega_N parts elementary.  Everything runs in mpmath at LOG_DPS digits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .partitions import LOG_DPS, Partition, StepFunction, hook_distances, hook_lengths, to_step_function
from .shape import omega_N

PHI_1 = 3.0 - 4.0 * math.log(2.0)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    max_subdivisions: int = 200
    # quadrature diagnostics integrate out to tail_radius * (support radius)
    tail_radius: float = 4.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")


@dataclass(frozen=True)
class EnergyBreakdown:
    theta: float
    tilde_theta: float
    bar_theta: float
    total: float
    quad_error: float

    def to_json(self) -> dict:
        return asdict(self)


# -- phi --------------------------------------------------------------------


@lru_cache(maxsize=None)
def phi(h: int) -> float:
    """sum_{k>=1} 1 / (k (k+1) (2k+1) h^(2k))."""
    if h < 1:
        raise DomainError("phi needs h >= 1")
    if h == 1:
        # telescopes to 3 - 4 log 2; the series itself converges like k^-3
        return PHI_1
    z = 1.0 / (h * h)
    total = 0.0
    zk = z
    k = 1
    while True:
        term = zk / (k * (k + 1) * (2 * k + 1))
        total += term
        if term < 1e-18 * total:
            return total
        k += 1
        zk *= z


def phi_table(hmax: int) -> np.ndarray:
    """``table[h] = phi(h)`` for 1 <= h <= hmax; ``table[0] = 0``."""
    return np.array([0.0] + [phi(h) for h in range(1, hmax + 1)])


def tilde_theta(f: StepFunction) -> float:
    counts = hook_distances(f.array)
    if not counts.any():
        return 0.0
    return math.fsum((counts * phi_table(len(counts) - 1)).tolist())


# -- theta_N ------------------------------------------------------------------


def _corners(f: StepFunction):
    """Positions and slope jumps of f, including the window ends."""
    slopes = np.concatenate(([-1], f.array, [1]))
    jumps = np.diff(slopes)
    xs = np.arange(-f.L, f.L + 1)
    keep = jumps != 0
    return xs[keep], jumps[keep]


def _arcsine_moments(u):
    """int v^k log|u - v| dmu(v), k = 0, 1, 2, for the arcsine law on [-1, 1]."""
    if abs(u) <= 1:
        return -mpmath.log(2), -u, -(2 * u * u - 1) / 4 - mpmath.log(2) / 2
    w = abs(u) + mpmath.sqrt(u * u - 1)
    sign = 1 if u > 0 else -1
    l0 = mpmath.log(w / 2)
    return l0, -sign / w, l0 / 2 - 1 / (4 * w * w)


def _potential_term(x, R):
    """int (x - y)^2 log|x - y| Omega_N''(y) dy."""
    u = mpmath.mpf(x) / R
    l0, l1, l2 = _arcsine_moments(u)
    # Omega_N'' integrates to 2, i.e. it is twice the arcsine law
    kernel = 2 * (u * u * l0 - 2 * u * l1 + l2)
    return R * R * (mpmath.log(R) * (2 * u * u + 1) + kernel)


def theta_N(f: StepFunction, N: int, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    cfg = cfg or QuadratureConfig()
    if N < 1:
        raise DomainError("N must be >= 1")
    xs, cs = _corners(f)
    with mpmath.workdps(LOG_DPS):
        R = mpmath.sqrt(4 * N)
        # corner-corner part: sum_d 2 d^2 log d * C(d) with C the integer
        # autocorrelation of the jump sequence
        dense = np.zeros(2 * f.L + 1, dtype=np.int64)
        dense[xs + f.L] = cs
        corr = np.correlate(dense, dense, mode="full")[2 * f.L + 1:]
        t1_terms = [2 * int(c) * d * d * mpmath.log(d) for d, c in enumerate(corr, start=1) if c]
        t2_terms = [int(c) * _potential_term(int(x), R) for x, c in zip(xs, cs)]
        t3 = 8 * N * mpmath.log(N) + 16 * N
        t1 = mpmath.fsum(t1_terms)
        t2 = mpmath.fsum(t2_terms)
        value = t1 - 2 * t2 + t3
        scale = mpmath.fsum(abs(t) for t in t1_terms) + 2 * mpmath.fsum(abs(t) for t in t2_terms) + abs(t3)
        error = scale * mpmath.mpf(10) ** (-(LOG_DPS - 3))
    value, error = float(value), float(error)
    if error > cfg.abs_tol:
        raise ConvergenceError("theta_N rounding bound exceeds abs_tol", value, error)
    return value, error


def _arccosh_antiderivatives(x, R):
    """Antiderivatives of arccosh(x/R) and x arccosh(x/R) for x >= R."""
    a = mpmath.acosh(x / R)
    s = mpmath.sqrt(x * x - R * R)
    return x * a - s, (x * x / 2 - R * R / 4) * a - x * s / 4


def bar_theta_N(f: StepFunction, N: int, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    cfg = cfg or QuadratureConfig()
    if N < 1:
        raise DomainError("N must be >= 1")
    with mpmath.workdps(LOG_DPS):
        R = mpmath.sqrt(4 * N)
        if f.L <= R:
            return 0.0, 0.0
        h = f.heights()
        terms = []
        for side in (1, -1):
            # walk outward on one side; reflect the left side onto x > 0
            for k in range(0, f.L):
                x0, x1 = k, k + 1
                if x1 <= R:
                    continue
                e0 = int(h[side * x0 + f.L]) - x0
                e1 = int(h[side * x1 + f.L]) - x1
                if e0 == 0 and e1 == 0:
                    continue
                # excess is linear on the piece: e(x) = p + q x
                q = e1 - e0
                p = e0 - q * x0
                a = max(mpmath.mpf(x0), R)
                g0b, g1b = _arccosh_antiderivatives(mpmath.mpf(x1), R)
                g0a, g1a = _arccosh_antiderivatives(a, R)
                terms.append(p * (g0b - g0a) + q * (g1b - g1a))
        value = mpmath.fsum(terms)
        error = mpmath.fsum(abs(t) for t in terms) * mpmath.mpf(10) ** (-(LOG_DPS - 3))
    return float(value), float(error)


def energy_breakdown(f: StepFunction, N: int, cfg: QuadratureConfig | None = None) -> EnergyBreakdown:
    th, e1 = theta_N(f, N, cfg)
    tb, e2 = bar_theta_N(f, N, cfg)
    tt = tilde_theta(f)
    return EnergyBreakdown(theta=th, tilde_theta=tt, bar_theta=tb, total=th / 8 + tt, quad_error=e1 + e2)


def log_hook_ratio(lam: Partition) -> float:
    """log(prod h^2 / (N/e)^N)."""
    N = lam.size
    with mpmath.workdps(LOG_DPS):
        logs = mpmath.fsum(mpmath.log(h) for h in hook_lengths(lam))
        return float(2 * logs - N * mpmath.log(N) + N)


def vk_residual(lam: Partition, cfg: QuadratureConfig | None = None) -> float:
    """Left side minus right side of the exact energy identity."""
    N = lam.size
    if N < 1:
        raise DomainError("the identity needs N >= 1")
    f = to_step_function(lam)
    b = energy_breakdown(f, N, cfg)
    return log_hook_ratio(lam) - (b.total + b.bar_theta)


# -- dyadic decomposition -----------------------------------------------------


@dataclass(frozen=True)
class DyadicProfile:
    """Split of a theta double integral by the distance |x - y|.

    ``diagonal`` covers |x - y| <= 1, band k covers 2^k < |x - y| <= 2^(k+1).
    """

    diagonal: float
    bands: list[tuple[int, float]]

    @property
    def total(self) -> float:
        return self.diagonal + math.fsum(v for _, v in self.bands)


def band_edges(diameter: float) -> list[tuple[int, float, float]]:
    edges = []
    k = 0
    while 2.0 ** k < diameter:
        edges.append((k, 2.0 ** k, 2.0 ** (k + 1)))
        k += 1
    return edges


def _global_lag_energy(f: StepFunction, N: int, cfg: QuadratureConfig):
    R = math.sqrt(4 * N)
    a = max(f.L, R)
    knots = sorted(set(range(-math.ceil(a), math.ceil(a) + 1)) | {-R, R})

    def g(y):
        return float(f(y)) - omega_N(y, N) if abs(y) < a else 0.0

    def lag(h):
        pts = sorted({k for k in knots} | {k - h for k in knots})
        pts = [p for p in pts if -a - h <= p <= a]
        total = 0.0
        for lo, hi in zip(pts, pts[1:]):
            val, _ = integrate.quad(lambda y: (g(y + h) - g(y)) ** 2, lo, hi, epsabs=cfg.abs_tol * 1e-2, limit=cfg.max_subdivisions)
            total += val
        return total

    g2, _ = integrate.quad(lambda y: g(y) ** 2, -a, a, points=[k for k in knots if -a < k < a], limit=max(cfg.max_subdivisions, 4 * len(knots)), epsabs=cfg.abs_tol * 1e-2)
    return lag, 2 * a, g2


def dyadic_energy(f, slope_reference, cfg: QuadratureConfig | None = None) -> DyadicProfile:
    """Distance-band decomposition of theta for a global profile or local path.

    For a :class:`StepFunction` ``slope_reference`` is N (compare against
    Omega_N); for a local path it is the slope rho.
    """
    from .local_gas import LocalPath, theta_local_profile

    cfg = cfg or QuadratureConfig()
    if isinstance(f, LocalPath):
        return theta_local_profile(f, float(slope_reference))
    N = int(slope_reference)
    lag, diameter, g2 = _global_lag_energy(f, N, cfg)

    def band(lo, hi):
        # theta = 2 int_0^inf lag(h) / h^2 dh
        pts = [float(p) for p in range(math.ceil(lo), math.floor(hi) + 1) if lo < p < hi]
        val, _ = integrate.quad(lambda h: lag(h) / (h * h), lo, hi, points=pts or None, epsabs=cfg.abs_tol * 1e-1, limit=cfg.max_subdivisions)
        return 2 * val

    diag = band(1e-12, 1.0)
    bands = []
    edges = band_edges(diameter)
    for k, lo, hi in edges:
        bands.append((k, band(lo, hi)))
    # past the diameter the two copies of g no longer overlap: lag = 2 int g^2
    far = edges[-1][2] if edges else 1.0
    k_last, v_last = bands[-1] if bands else (0, 0.0)
    tail = 2 * (2 * g2) / far
    if bands:
        bands[-1] = (k_last, v_last + tail)
    else:
        diag += tail
    return DyadicProfile(diag, bands)
