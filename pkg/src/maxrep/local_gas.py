"""The local slope-rho problem on [0, n]: energies, exact minimisation, heuristics.

Energies are accumulated in integer fixed point.  Every pair-of-cells term is
rounded once to a multiple of 2**-44 (for theta) and every hook term to a
multiple of 2**-47 (for the phi sum), so

    Theta = theta / 8 + tilde = units * 2**-47

with ``units`` an exact integer.  Sums are then independent of evaluation
order, which makes the structural facts about sigma hold bit-for-bit:
superadditivity (the pair terms of a sub-path are literally a subset of the
pair terms of the whole path) and the rotation symmetry between rho and -rho.
The rounding costs at most n^2 * 2**-45 in absolute accuracy.  Diagonal terms
are rounded up rather than to nearest so the diagonal lower bound is exact.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .errors import ConstructionError, DomainError, ResourceLimitError
from .functionals import DyadicProfile, band_edges, phi

THETA_BITS = 44
TOTAL_BITS = 47
THETA_SCALE = float(2**THETA_BITS)
TOTAL_SCALE = float(2**TOTAL_BITS)
EXACT_CEILING = 28
_GL_NODES = 24


@dataclass(frozen=True)
class LocalPath:
    """Lattice path on [0, n] starting at 0 with slopes +-1."""

    steps: tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(s not in (-1, 1) for s in steps):
            raise DomainError("steps must be +-1")
        object.__setattr__(self, "steps", steps)

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.steps, dtype=np.int8)

    def heights(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.steps, dtype=np.int64)))

    @property
    def endpoint(self) -> int:
        return int(sum(self.steps))

    def __str__(self):
        return "".join("+" if s > 0 else "-" for s in self.steps)

    @classmethod
    def parse(cls, text: str) -> LocalPath:
        text = text.strip()
        if any(c not in "+-" for c in text):
            raise DomainError(f"path must use '+' and '-': {text!r}")
        return cls(tuple(1 if c == "+" else -1 for c in text))

    @classmethod
    def all_up(cls, n: int) -> LocalPath:
        return cls((1,) * n)


@dataclass(frozen=True)
class LocalEnergy:
    theta: float
    tilde: float
    total: float
    units: int  # total * 2**47


@dataclass(frozen=True)
class SigmaRecord:
    n: int
    rho: float
    value: float
    witness: LocalPath
    kind: str  # "exact" or "heuristic_upper"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "heuristic_upper"):
            raise DomainError(f"unknown record kind {self.kind!r}")


def as_slope(rho) -> float:
    """Validate a slope given as float, int, Fraction or 'p/q' string."""
    if isinstance(rho, str):
        try:
            rho = Fraction(rho)
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse slope {rho!r}") from exc
    value = float(rho)
    if not -1.0 <= value <= 1.0 or math.isnan(value):
        raise DomainError(f"slope must lie in [-1, 1], got {value}")
    return value + 0.0  # normalises -0.0


# -- pair tables ------------------------------------------------------------


class EnergyTable:
    """Quantised pair and hook terms for one slope, for paths of length < capacity.

    ``pair[D, a, b, e]`` is twice the integral of the squared slope deviation
    over the cell pair (j, j + D) whose steps have indices a, b (0 for a down
    step, 1 for an up step) and whose heights satisfy f(j+D) - f(j+1) = 2e - D + 1.
    """

    def __init__(self, rho: float, capacity: int):
        self.rho = rho
        self.capacity = capacity
        if rho < 0:
            mirror = table_for(-rho, capacity)
            # rotating a path by 180 degrees swaps and negates the two steps
            # of every pair and negates the height offset
            pair = mirror.pair[:, ::-1, ::-1, :].transpose(0, 2, 1, 3).copy()
            for D in range(1, capacity):
                pair[D, :, :, :D] = pair[D, :, :, :D][:, :, ::-1]
            self.pair = pair
            self.diag = mirror.diag[::-1].copy()
        else:
            self.pair, self.diag = _build_pairs(rho, capacity)
        self.phi = np.array([0] + [round(phi(h) * TOTAL_SCALE) for h in range(1, capacity + 1)], dtype=np.int64)


_tables: dict[float, EnergyTable] = {}
_tables_lock = threading.Lock()


def table_for(rho: float, n: int) -> EnergyTable:
    rho = as_slope(rho)
    with _tables_lock:
        t = _tables.get(rho)
    if t is None or t.capacity < n:
        cap = max(n, 32, 2 * t.capacity if t else 0)
        t = EnergyTable(rho, cap)
        with _tables_lock:
            _tables[rho] = t
    return t


def _pair_integrals(D, H, a, b):
    """int_{-1}^{1} I(w) / (D + w)^2 dw for D >= 2, Gauss-Legendre per half.

    The integrand is a polynomial over (D + w)^2 with the pole at distance
    >= 1 from each half, so 24 nodes reach full double precision.  The
    logarithmic antiderivative loses ~D^5 to cancellation and is avoided.
    """
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    t = (x + 1) / 2
    wt = w / 2
    beta = a - b
    total = np.zeros(np.broadcast(D, H, a, b).shape)
    for sign, slope in ((1.0, a), (-1.0, b)):
        for tk, wk in zip(t, wt):
            ww = sign * tk
            c = H + slope * ww
            ell = 1.0 - tk
            I = c * c * ell + c * beta * ell * ell + beta * beta * ell**3 / 3
            total = total + wk * I / (D + ww) ** 2
    return total


def _adjacent_integral(a, b):
    return 0.5 * (a * a + b * b) + 0.5 * (a - b) ** 2 * (1 - 2 * math.log(2))


def _build_pairs(rho: float, capacity: int):
    pair = np.zeros((capacity, 2, 2, capacity), dtype=np.int64)
    signs = (-1.0, 1.0)
    # rounded up, in exact arithmetic, so Theta >= n (1 - |rho|)^2 / 8 survives quantisation
    exact = Fraction(rho)
    diag = np.array([math.ceil((s - exact) ** 2 * 2**THETA_BITS) for s in (-1, 1)], dtype=np.int64)
    for ia, sa in enumerate(signs):
        for ib, sb in enumerate(signs):
            pair[1, ia, ib, 0] = round(2 * _adjacent_integral(sb - rho, sa - rho) * THETA_SCALE)
    if capacity > 2:
        Ds, es = [], []
        for D in range(2, capacity):
            Ds.append(np.full(D, D))
            es.append(np.arange(D))
        D = np.concatenate(Ds).astype(float)
        eidx = np.concatenate(es)
        e = 2 * eidx - D + 1
        Di = D.astype(np.int64)
        for ia, sa in enumerate(signs):
            for ib, sb in enumerate(signs):
                H = sa + e - rho * D
                vals = _pair_integrals(D, H, sb - rho, sa - rho)
                if rho == 0.0:
                    # the table must be exactly invariant under rotation
                    Hm = -sb - e - rho * D
                    vals = 0.5 * (vals + _pair_integrals(D, Hm, -sa - rho, -sb - rho))
                pair[Di, ia, ib, eidx] = np.round(2 * vals * THETA_SCALE).astype(np.int64)
    return pair, diag


# -- kernels ----------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _step_increment(steps, F, k, s, pair, diag, phiq):
    si = 1 if s > 0 else 0
    inc_theta = diag[si]
    inc_tilde = 0
    Fk = F[k]
    for j in range(k):
        D = k - j
        sj = 1 if steps[j] > 0 else 0
        inc_theta += pair[D, sj, si, (Fk - F[j + 1] + D - 1) // 2]
        if s < 0 and sj == 1:
            inc_tilde += phiq[D]
    return inc_theta, inc_tilde


@nb.njit(cache=True, nogil=True)
def _energy_units(steps, pair, diag, phiq):
    n = steps.shape[0]
    F = np.zeros(n + 1, dtype=np.int64)
    theta = 0
    tilde = 0
    for k in range(n):
        a, b = _step_increment(steps, F, k, steps[k], pair, diag, phiq)
        theta += a
        tilde += b
        F[k + 1] = F[k] + steps[k]
    return theta, tilde


@nb.njit(cache=True, nogil=True)
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


@nb.njit(cache=True, nogil=True)
def _branch_and_bound(n, pair, diag, phiq, rest, first, incumbent, witness):
    steps = np.zeros(n, dtype=np.int8)
    F = np.zeros(n + 1, dtype=np.int64)
    cost = np.zeros(n + 1, dtype=np.int64)
    tried = np.zeros(n + 1, dtype=np.int8)
    best = incumbent
    nodes = 0
    k = 0
    while k >= 0:
        if k == n:
            val = cost[n]
            if val < best or (val == best and _lex_less(steps, witness)):
                best = val
                witness[:] = steps
            k -= 1
            continue
        c = tried[k]
        if c == 2:
            tried[k] = 0
            k -= 1
            continue
        tried[k] = c + 1
        s = first if c == 0 else -first
        nodes += 1
        a, b = _step_increment(steps, F, k, s, pair, diag, phiq)
        new = cost[k] + a + b
        # ties are kept alive so the lexicographic tie-break sees every minimiser
        if new + rest[n - k - 1] > best:
            continue
        steps[k] = s
        F[k + 1] = F[k] + s
        cost[k + 1] = new
        k += 1
    return best, nodes


@nb.njit(cache=True, nogil=True)
def _anneal(start, budget, chain_length, t_hot, t_cold, seed, pair, diag, phiq):
    np.random.seed(seed)
    n = start.shape[0]
    best = start.copy()
    a, b = _energy_units(best, pair, diag, phiq)
    best_e = a + b
    cur = start.copy()
    cur_e = best_e
    used = 0
    chain = 0
    ratio = (t_cold / t_hot) ** (1.0 / max(chain_length - 1, 1))
    while used < budget:
        if chain > 0:
            if chain % 2 == 1:
                cur[:] = best
                for _ in range(1 + n // 16):
                    i = np.random.randint(n)
                    cur[i] = -cur[i]
            else:
                for i in range(n):
                    cur[i] = 1 if np.random.random() < 0.5 else -1
            a, b = _energy_units(cur, pair, diag, phiq)
            cur_e = a + b
        temp = t_hot
        for _ in range(chain_length):
            if used >= budget:
                break
            used += 1
            move = np.random.random()
            i = np.random.randint(n)
            j = -1
            if move < 0.4 or n == 1:
                cur[i] = -cur[i]
            elif move < 0.7:
                # swap an adjacent pair of different steps
                if i == n - 1:
                    i = n - 2
                j = i + 1
                if cur[i] == cur[j]:
                    continue
                cur[i] = -cur[i]
                cur[j] = -cur[j]
            else:
                # flip two opposite steps anywhere: keeps the endpoint
                j = np.random.randint(n)
                if j == i or cur[i] == cur[j]:
                    continue
                cur[i] = -cur[i]
                cur[j] = -cur[j]
            a, b = _energy_units(cur, pair, diag, phiq)
            e = a + b
            delta = (e - cur_e) / 1.4073748835532800e14  # 2**47
            if delta <= 0 or np.random.random() < math.exp(-delta / temp):
                cur_e = e
                if e < best_e or (e == best_e and _lex_less(cur, best)):
                    best_e = e
                    best[:] = cur
            else:
                cur[i] = -cur[i]
                if j >= 0:
                    cur[j] = -cur[j]
            temp *= ratio
        chain += 1
    return best, best_e


# -- energies ---------------------------------------------------------------


def _as_array(p: LocalPath) -> np.ndarray:
    return np.ascontiguousarray(p.array)


def local_energy(p: LocalPath, rho) -> LocalEnergy:
    rho = as_slope(rho)
    if p.n == 0:
        return LocalEnergy(0.0, 0.0, 0.0, 0)
    t = table_for(rho, p.n)
    th, tl = _energy_units(_as_array(p), t.pair, t.diag, t.phi)
    th, tl = int(th), int(tl)
    return LocalEnergy(th / THETA_SCALE, tl / TOTAL_SCALE, (th + tl) / TOTAL_SCALE, th + tl)


def theta_local(p: LocalPath, rho) -> float:
    return local_energy(p, rho).theta


def tilde_local(p: LocalPath) -> float:
    from .partitions import hook_distances

    counts = hook_distances(p.array)
    return math.fsum(int(c) * phi(h) for h, c in enumerate(counts) if c)


def Theta_local(p: LocalPath, rho) -> float:
    return local_energy(p, rho).total


# -- band decomposition -----------------------------------------------------


def _lag_energy(F: np.ndarray, rho: float, h: float) -> float:
    """int_0^{n-h} (F(y+h) - F(y) - rho h)^2 dy for the piecewise linear F."""
    n = len(F) - 1
    if h >= n:
        return 0.0
    grid = np.arange(n + 1, dtype=float)
    knots = np.unique(np.concatenate((grid, grid - h)))
    knots = knots[(knots >= 0) & (knots <= n - h)]
    lo, hi = knots[:-1], knots[1:]
    mid = (lo + hi) / 2

    def g(y):
        return np.interp(y + h, grid, F) - np.interp(y, grid, F) - rho * h

    # the integrand is quadratic on each piece, so Simpson is exact
    return float(np.sum((hi - lo) / 6 * (g(lo) ** 2 + 4 * g(mid) ** 2 + g(hi) ** 2)))


def _band_integral(F, rho, lo, hi):
    """2 int_lo^hi Q(h) / h^2 dh, exact per unit interval of h.

    Q is a cubic on each (m, m+1) with Q = O(h^2) at 0, so Q/h^2 is a
    rational function whose pole stays at least one half-length away.
    """
    x, w = np.polynomial.legendre.leggauss(16)
    total = 0.0
    a = lo
    while a < hi:
        b = min(math.floor(a) + 1.0, hi)
        mid, half = (a + b) / 2, (b - a) / 2
        for xk, wk in zip(x, w):
            h = mid + half * xk
            total += wk * half * _lag_energy(F, rho, h) / (h * h)
        a = b
    return 2 * total


def theta_local_profile(p: LocalPath, rho) -> DyadicProfile:
    rho = as_slope(rho)
    F = p.heights().astype(float)
    diag = _band_integral(F, rho, 0.0, 1.0)
    bands = [(k, _band_integral(F, rho, lo, min(hi, p.n))) for k, lo, hi in band_edges(p.n)]
    return DyadicProfile(diag, bands)


def theta_local_band(p: LocalPath, rho, k: int | None) -> float:
    """theta restricted to 2^k < |x - y| <= 2^(k+1); ``k=None`` is |x - y| <= 1."""
    rho = as_slope(rho)
    F = p.heights().astype(float)
    if k is None:
        return _band_integral(F, rho, 0.0, 1.0)
    lo, hi = 2.0**k, 2.0 ** (k + 1)
    if lo >= p.n:
        return 0.0
    return _band_integral(F, rho, lo, min(hi, p.n))


# -- optimisation -----------------------------------------------------------


def _exact_units(n: int, rho: float, t: EnergyTable, rest: np.ndarray):
    first = 1 if rho >= 0 else -1
    seed = staircase_path(n, rho)
    witness = _as_array(seed).copy()
    a, b = _energy_units(witness, t.pair, t.diag, t.phi)
    best, _ = _branch_and_bound(n, t.pair, t.diag, t.phi, rest, first, a + b, witness)
    return int(best), witness


def sigma_exact_table(n: int, rho, ceiling: int = EXACT_CEILING) -> list[SigmaRecord]:
    """Exact records for lengths 1..n; each length bounds the next search."""
    rho = as_slope(rho)
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > ceiling:
        raise ResourceLimitError(f"n = {n} exceeds the exact-search ceiling {ceiling}")
    t = table_for(rho, n)
    rest = np.zeros(n + 1, dtype=np.int64)
    out = []
    for m in range(1, n + 1):
        units, witness = _exact_units(m, rho, t, rest)
        rest[m] = units
        out.append(SigmaRecord(m, rho, units / TOTAL_SCALE, LocalPath(tuple(int(s) for s in witness)), "exact"))
    return out


def sigma_exact(n: int, rho, ceiling: int = EXACT_CEILING) -> SigmaRecord:
    return sigma_exact_table(n, rho, ceiling)[-1]


def sigma_bruteforce(n: int, rho) -> SigmaRecord:
    """Minimum over all 2^n paths, same arithmetic, same tie-break."""
    rho = as_slope(rho)
    t = table_for(rho, n)
    units, code = _bruteforce(n, t.pair, t.diag, t.phi)
    steps = tuple(1 if (code >> (n - 1 - i)) & 1 else -1 for i in range(n))
    return SigmaRecord(n, rho, int(units) / TOTAL_SCALE, LocalPath(steps), "exact")


@nb.njit(cache=True)
def _bruteforce(n, pair, diag, phiq):
    steps = np.empty(n, dtype=np.int8)
    best = np.iinfo(np.int64).max
    best_code = 0
    # codes ascend in lexicographic order with -1 < +1 (bit 1 is an up step)
    for code in range(1 << n):
        for i in range(n):
            steps[i] = 1 if (code >> (n - 1 - i)) & 1 else -1
        a, b = _energy_units(steps, pair, diag, phiq)
        if a + b < best:
            best = a + b
            best_code = code
    return best, best_code


def sigma_heuristic(n: int, rho, budget: int = 200_000, seed: int = 0, chain_length: int = 20_000) -> SigmaRecord:
    """Annealing upper bound on sigma.

    The chain schedule does not depend on ``budget``: a larger budget only
    runs the same seeded sequence further, so the result never gets worse.
    """
    rho = as_slope(rho)
    if n < 1:
        raise DomainError("n must be >= 1")
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    t = table_for(rho, n)
    start = _as_array(staircase_path(n, rho)).copy()
    best, units = _anneal(start, budget, chain_length, 0.5, 1e-3, seed, t.pair, t.diag, t.phi)
    return SigmaRecord(n, rho, int(units) / TOTAL_SCALE, LocalPath(tuple(int(s) for s in best)), "heuristic_upper", seed)


# -- constructions ----------------------------------------------------------


def staircase_path(n: int, rho) -> LocalPath:
    """Pointwise-largest path with f(x) <= rho x; stays within 2 of the line."""
    rho = as_slope(rho)
    steps = []
    h = 0
    for x in range(n):
        # vertices suffice since the constraint is linear
        if h + 1 <= rho * (x + 1) + 1e-12:
            steps.append(1)
            h += 1
        else:
            steps.append(-1)
            h -= 1
    return LocalPath(tuple(steps))


def mirror(p: LocalPath) -> LocalPath:
    """Rotation by 180 degrees: maps slope rho energies to slope -rho."""
    return LocalPath(tuple(-s for s in reversed(p.steps)))


def adjust_endpoint(p: LocalPath, a: int, rho=None) -> LocalPath:
    """Flip well-separated middle-third steps until the path ends at ``a``.

    Flips are at least ceil(n / 10s) apart.  Without ``rho`` they are spread
    evenly over the middle third; with ``rho`` each flip is chosen greedily
    to raise the slope-rho energy the least.
    """
    n = p.n
    if (a - n) % 2:
        raise ConstructionError(f"endpoint {a} has the wrong parity for length {n}")
    diff = p.endpoint - a
    if diff == 0:
        return p
    s = abs(diff) // 2
    want = 1 if diff > 0 else -1  # lowering the endpoint flips up-steps
    lo, hi = math.ceil(n / 3), (2 * n) // 3
    gap = max(1, math.ceil(n / (10 * s)))
    candidates = [i for i in range(lo, hi) if p.steps[i] == want]
    chosen = _spread_flips(candidates, s, gap, lo, hi) if rho is None else _cheapest_flips(p, candidates, s, gap, as_slope(rho), want)
    if chosen is None:
        raise ConstructionError(f"fewer than {s} separated flips available in the middle third")
    steps = list(p.steps)
    for i in chosen:
        steps[i] = -want
    return LocalPath(tuple(steps))


def _spread_flips(candidates, s, gap, lo, hi):
    chosen: list[int] = []
    pool = list(candidates)
    for k in range(s):
        target = lo + (k + 0.5) * (hi - lo) / s
        ok = [i for i in pool if all(abs(i - c) >= gap for c in chosen)]
        if not ok:
            break
        chosen.append(min(ok, key=lambda i: (abs(i - target), i)))
    if len(chosen) < s:
        # fall back to the leftmost packing, which fits the most flips
        chosen = []
        for i in candidates:
            if not chosen or i - chosen[-1] >= gap:
                chosen.append(i)
        if len(chosen) < s:
            return None
        chosen = chosen[:s]
    return sorted(chosen)


def _cheapest_flips(p, candidates, s, gap, rho, want):
    t = table_for(rho, p.n)
    steps = p.array.copy()
    chosen: list[int] = []
    for _ in range(s):
        best = None
        for i in candidates:
            if any(abs(i - c) < gap for c in chosen):
                continue
            steps[i] = -want
            a, b = _energy_units(steps, t.pair, t.diag, t.phi)
            steps[i] = want
            if best is None or a + b < best[0]:
                best = (a + b, i)
        if best is None:
            return _spread_flips(candidates, s, gap, math.ceil(p.n / 3), (2 * p.n) // 3)
        chosen.append(best[1])
        steps[best[1]] = -want
    return sorted(chosen)


def _block_target(m: int, rho: float, above: bool) -> int:
    x = rho * m
    if above:
        a = math.floor(x + 1e-12)
        if (a - m) % 2:
            a -= 1
    else:
        a = math.ceil(x - 1e-12)
        if (a - m) % 2:
            a += 1
    return a


def concatenate(g: LocalPath, ell: int, rho) -> LocalPath:
    """ell copies of g, each retargeted so block ends stay within 2 of rho x."""
    rho = as_slope(rho)
    m = g.n
    if abs(g.endpoint - rho * m) > 10:
        raise ConstructionError("block endpoint must lie within 10 of rho * m")
    steps: list[int] = []
    height = 0
    for i in range(ell):
        a = _block_target(m, rho, height >= rho * i * m)
        block = adjust_endpoint(g, a, rho)
        steps.extend(block.steps)
        height += a
    return LocalPath(tuple(steps))


@dataclass(frozen=True)
class Flatness:
    max_dev: float
    location: int
    curve: np.ndarray


def flatness_profile(p: LocalPath, rho) -> Flatness:
    rho = as_slope(rho)
    dev = np.abs(p.heights() - rho * np.arange(p.n + 1))
    i = int(np.argmax(dev))
    return Flatness(float(dev[i]), i, dev)
