"""Slow reference implementations sharing no code with the package."""

import math


def partitions(n, cap=None):
    cap = n if cap is None else cap
    if n == 0:
        yield ()
        return
    for p in range(min(n, cap), 0, -1):
        for rest in partitions(n - p, p):
            yield (p,) + rest


def dim(parts):
    n = sum(parts)
    cols = [sum(1 for r in parts if r > j) for j in range(parts[0])] if parts else []
    prod = 1
    for i, r in enumerate(parts):
        for j in range(r):
            prod *= (r - j - 1) + (cols[j] - i - 1) + 1
    return math.factorial(n) // prod


def max_dim(n):
    """(d_N, all maximisers)."""
    best, who = 0, []
    for p in partitions(n):
        d = dim(p)
        if d > best:
            best, who = d, [p]
        elif d == best:
            who.append(p)
    return best, who
