"""Partitions, hook lengths, dimensions and the rotated boundary profile.

A partition is drawn in Russian convention: cell (i, j) (row i, column j,
both 1-based) is the unit diamond centred at ``x = j - i``.  The upper
boundary of the diagram is a lattice path ``f`` with slopes +-1 which equals
``|x|`` far away.  Moving right along a row is an up-step, moving up along a
column is a down-step, so cells correspond exactly to pairs
(up-step at i, down-step at j > i) and the hook length of that cell is j - i.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .errors import InvariantViolation, ResourceLimitError, ValidationError

DEFAULT_CEILING = 120
# 30 decimal digits is ~100 bits, comfortably above the 80-bit floor.
LOG_DPS = 30


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        for a, b in zip(parts, parts[1:]):
            if b > a:
                raise ValidationError(f"parts must be weakly decreasing: {parts}")
        if parts and parts[-1] < 1:
            raise ValidationError(f"parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __str__(self):
        return ",".join(str(p) for p in self.parts)

    def conjugate(self) -> Partition:
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0])))

    @classmethod
    def parse(cls, text: str) -> Partition:
        text = text.strip()
        if not text:
            return cls(())
        try:
            parts = tuple(int(t) for t in text.split(","))
        except ValueError as exc:
            raise ValidationError(f"cannot parse partition {text!r}") from exc
        return cls(parts)


@dataclass(frozen=True)
class StepFunction:
    """Lattice profile equal to |x| outside [-L, L].

    ``steps[k]`` is the slope on ``[-L + k, -L + k + 1)`` and ``f(-L) = L``.
    """

    L: int
    steps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if self.L < 0 or len(steps) != 2 * self.L:
            raise InvariantViolation(f"expected {2 * self.L} steps, got {len(steps)}")
        if any(s not in (-1, 1) for s in steps):
            raise InvariantViolation("steps must be +-1")
        object.__setattr__(self, "steps", steps)
        h = self.heights()
        if h[-1] != self.L:
            raise InvariantViolation("profile does not return to |x| at x = L")
        if np.any(h < np.abs(self.xs())):
            raise InvariantViolation("profile dips below |x|")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.steps, dtype=np.int64)

    def xs(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def heights(self) -> np.ndarray:
        """Integer values f(-L), ..., f(L)."""
        return self.L + np.concatenate(([0], np.cumsum(self.steps, dtype=np.int64)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs = self.xs()
        inside = np.interp(x, xs, self.heights()) if self.L else np.abs(x)
        return np.where(np.abs(x) >= self.L, np.abs(x), inside)

    def height_at(self, x: int) -> int:
        if abs(x) >= self.L:
            return abs(x)
        return int(self.heights()[x + self.L])

    def extended(self, L: int) -> StepFunction:
        """Same function over a wider window."""
        if L < self.L:
            raise ValidationError("can only widen the window")
        pad = L - self.L
        return StepFunction(L, (-1,) * pad + self.steps + (1,) * pad)

    def trimmed(self) -> StepFunction:
        """Smallest symmetric window carrying the deviation from |x|."""
        L = self.L
        s = self.steps
        while L > 0 and s[0] == -1 and s[-1] == 1:
            s = s[1:-1]
            L -= 1
        return StepFunction(L, s)

    @classmethod
    def from_heights(cls, L: int, heights: Sequence[int]) -> StepFunction:
        h = np.asarray(heights, dtype=np.int64)
        if len(h) != 2 * L + 1 or h[0] != L:
            raise InvariantViolation("heights must cover [-L, L] starting at f(-L) = L")
        return cls(L, tuple(int(d) for d in np.diff(h)))

    def __str__(self):
        return f"{self.L}:" + "".join("+" if s > 0 else "-" for s in self.steps)

    @classmethod
    def parse(cls, text: str) -> StepFunction:
        head, _, bits = text.strip().partition(":")
        try:
            L = int(head)
        except ValueError as exc:
            raise ValidationError(f"cannot parse step function {text!r}") from exc
        if any(b not in "+-" for b in bits):
            raise ValidationError(f"step string must use '+' and '-': {bits!r}")
        return cls(L, tuple(1 if b == "+" else -1 for b in bits))


@dataclass(frozen=True)
class BigDim:
    """Dimension of an irreducible representation, exact and in log form."""

    exact: int | None
    log_value: mpmath.mpf | None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    @property
    def has_log(self) -> bool:
        return self.log_value is not None

    def __float__(self):
        return float(self.log_value)


# -- enumeration ------------------------------------------------------------


def iter_partitions(N: int, first_part: int | None = None, ceiling: int = DEFAULT_CEILING) -> Iterator[Partition]:
    """Partitions of N in reverse-lexicographic order.

    ``first_part`` restricts to partitions with that largest part, which is
    how enumeration is split into independent shards.
    """
    if N < 0:
        raise ValidationError("N must be nonnegative")
    if N > ceiling:
        raise ResourceLimitError(f"N = {N} exceeds the enumeration ceiling {ceiling}")
    if N == 0:
        if first_part in (None, 0):
            yield Partition(())
        return
    firsts = range(N, 0, -1) if first_part is None else [first_part]
    for a in firsts:
        if not 1 <= a <= N:
            continue
        for rest in _descending(N - a, a):
            yield Partition((a,) + rest)


def _descending(n: int, cap: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for p in range(min(n, cap), 0, -1):
        for rest in _descending(n - p, p):
            yield (p,) + rest


def enumerate_partitions(
    N: int,
    visitor: Callable[[Partition], object] | None = None,
    ceiling: int = DEFAULT_CEILING,
    first_part: int | None = None,
) -> int:
    count = 0
    for lam in iter_partitions(N, first_part=first_part, ceiling=ceiling):
        if visitor is not None:
            visitor(lam)
        count += 1
    return count


@lru_cache(maxsize=None)
def partition_count_bounded(n: int, k: int) -> int:
    """Number of partitions of n with all parts <= k."""
    if n == 0:
        return 1
    if n < 0 or k == 0:
        return 0
    return partition_count_bounded(n, k - 1) + partition_count_bounded(n - k, k)


def partition_count(n: int) -> int:
    for m in range(0, n, 50):  # warm the cache bottom-up, avoids deep recursion
        partition_count_bounded(m, m)
    return partition_count_bounded(n, n)


def random_partition(N: int, rng: np.random.Generator) -> Partition:
    """Uniformly random partition of N (unranking by largest part)."""
    partition_count(N)
    parts = []
    n, k = N, N
    while n > 0:
        # choose largest part p <= k with weight p(n - p, parts <= p)
        total = partition_count_bounded(n, k)
        u = int(rng.integers(0, total)) if total < 2**63 else _big_randbelow(rng, total)
        for p in range(k, 0, -1):
            w = partition_count_bounded(n - p, p)
            if u < w:
                break
            u -= w
        parts.append(p)
        n, k = n - p, p
    return Partition(tuple(parts))


def _big_randbelow(rng, total):
    nbytes = (total.bit_length() + 7) // 8 + 8
    return int.from_bytes(rng.bytes(nbytes), "little") % total


# -- hooks and dimensions ---------------------------------------------------


def hook_lengths(lam: Partition) -> tuple[int, ...]:
    """Hook length of every cell, row by row."""
    conj = lam.conjugate().parts
    hooks = []
    for i, row in enumerate(lam.parts):
        for j in range(row):
            hooks.append(row - j + conj[j] - i - 1)
    return tuple(hooks)


def log_hook_product(hooks) -> mpmath.mpf:
    with mpmath.workdps(LOG_DPS):
        return mpmath.fsum(mpmath.log(h) for h in hooks)


def dim_exact(lam: Partition) -> BigDim:
    hooks = hook_lengths(lam)
    N = lam.size
    prod = math.prod(hooks)
    exact, rem = divmod(math.factorial(N), prod)
    if rem:
        raise InvariantViolation(f"hook product does not divide {N}! for {lam}")
    with mpmath.workdps(LOG_DPS):
        log_value = mpmath.loggamma(N + 1) - log_hook_product(hooks)
    return BigDim(exact, +log_value)


# -- step functions ---------------------------------------------------------


def to_step_function(lam: Partition, L: int | None = None) -> StepFunction:
    rows = len(lam.parts)
    first = lam.parts[0] if rows else 0
    need = max(rows, first)
    if L is None:
        L = need
    elif L < need:
        raise ValidationError(f"window L = {L} too small for {lam}")
    steps = [-1] * (L - rows)
    padded = list(lam.parts) + [0]
    for i in range(rows - 1, -1, -1):
        steps += [1] * (padded[i] - padded[i + 1]) + [-1]
    steps += [1] * (2 * L - len(steps))
    return StepFunction(L, tuple(steps))


def from_step_function(f: StepFunction) -> Partition:
    # walk the boundary: each down-step closes a row whose length is the
    # number of up-steps seen so far
    rows = []
    ups = 0
    seen_up = False
    for s in f.steps:
        if s == 1:
            ups += 1
            seen_up = True
        elif seen_up:
            rows.append(ups)
    rows = [r for r in rows if r > 0]
    # rows were collected bottom to top
    lam = Partition(tuple(reversed(rows)))
    if lam.size != area(f):
        raise InvariantViolation("profile and recovered partition disagree in size")
    return lam


def hook_distances(steps: np.ndarray) -> np.ndarray:
    """Histogram ``c[h]`` = number of (up at i, down at j) pairs with j - i = h."""
    steps = np.asarray(steps)
    n = len(steps)
    ups = np.flatnonzero(steps > 0)
    downs = np.flatnonzero(steps < 0)
    counts = np.zeros(n + 1, dtype=np.int64)
    if len(ups) == 0 or len(downs) == 0:
        return counts
    # correlation of the up-indicator with the down-indicator
    up_ind = (steps > 0).astype(np.int64)
    down_ind = (steps < 0).astype(np.int64)
    corr = np.correlate(down_ind, up_ind, mode="full")[n - 1:]
    counts[: len(corr)] = corr
    counts[0] = 0
    return counts


def hooks_from_steps(f: StepFunction) -> tuple[int, ...]:
    c = hook_distances(f.array)
    return tuple(np.repeat(np.arange(len(c)), c).tolist())


def area(f: StepFunction) -> int:
    """N(f) = (1/2) * integral of (f - |x|), from the integer vertex values."""
    excess = int(np.sum(f.heights() - np.abs(f.xs())))
    if excess % 2:
        raise InvariantViolation("odd excess: profile has wrong parity")
    return excess // 2
