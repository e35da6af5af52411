"""The Logan-Shepp / Vershik-Kerov limit shape and its lattice roundings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError
from .partitions import StepFunction

TWO_OVER_PI = 2.0 / math.pi


@dataclass(frozen=True)
class ShapeEval:
    x: float
    value: float
    derivative: float


def _excess_theta(theta):
    """sin t - t cos t, with a series near t = 0 where the two terms cancel."""
    theta = np.asarray(theta, dtype=float)
    t2 = theta * theta
    series = theta * t2 * (1 / 3 - t2 * (1 / 30 - t2 * (1 / 840 - t2 / 45360)))
    direct = np.sin(theta) - theta * np.cos(theta)
    return np.where(theta < 0.05, series, direct)


def omega_excess(x):
    """Omega(x) - |x|, accurate near the edges |x| -> 1."""
    a = np.minimum(np.abs(np.asarray(x, dtype=float)), 1.0)
    # arccos(a) = 2 arcsin(sqrt((1 - a)/2)) keeps precision as a -> 1
    theta = 2.0 * np.arcsin(np.sqrt((1.0 - a) / 2.0))
    return TWO_OVER_PI * _excess_theta(theta)


def omega(x):
    x = np.asarray(x, dtype=float)
    out = np.abs(x) + omega_excess(x)
    return float(out) if out.ndim == 0 else out


def omega_prime(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise DomainError("omega_prime is defined on [-1, 1]")
    out = TWO_OVER_PI * np.arcsin(x)
    return float(out) if out.ndim == 0 else out


def omega_eval(x: float) -> ShapeEval:
    d = omega_prime(x) if abs(x) <= 1 else math.copysign(1.0, x)
    return ShapeEval(float(x), omega(x), d)


def omega_N(x, N: int):
    if N < 1:
        raise DomainError("N must be >= 1")
    R = math.sqrt(4 * N)
    x = np.asarray(x, dtype=float)
    out = R * omega(x / R)
    return float(out) if np.ndim(out) == 0 else out


def omega_N_prime(x, N: int):
    """Slope of Omega_N on the whole line (+-1 outside the support)."""
    R = math.sqrt(4 * N)
    u = np.clip(np.asarray(x, dtype=float) / R, -1.0, 1.0)
    out = TWO_OVER_PI * np.arcsin(u)
    return float(out) if out.ndim == 0 else out


def _omega_N_mp(x: int, N: int):
    with mpmath.workdps(40):
        R = mpmath.sqrt(4 * N)
        u = mpmath.mpf(x) / R
        if abs(u) >= 1:
            return abs(mpmath.mpf(x))
        return R * 2 / mpmath.pi * (u * mpmath.asin(u) + mpmath.sqrt(1 - u * u))


def _below(value: int, x: int, N: int) -> bool:
    """value <= Omega_N(x), deciding near-ties in extended precision."""
    om = omega_N(x, N)
    if abs(om - value) > 1e-9 * max(1.0, abs(om)):
        return value <= om
    return value <= _omega_N_mp(x, N)


def staircase_below(N: int) -> StepFunction:
    """Pointwise-largest lattice profile lying below Omega_N.

    Built greedily from the left.  Checking vertices is enough: Omega_N is
    convex with slopes in [-1, 1], so on an up-segment the gap to Omega_N is
    smallest at the right end and on a down-segment at the left end.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    L = math.ceil(2 * math.sqrt(N)) + 1
    h = L
    steps = []
    for x in range(-L, L):
        if _below(h + 1, x + 1, N):
            steps.append(1)
            h += 1
        else:
            steps.append(-1)
            h -= 1
    return StepFunction(L, tuple(steps)).trimmed()
