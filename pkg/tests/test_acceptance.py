"""End-to-end acceptance checks; the summary prints one PASS/FAIL line per criterion."""

import math
from fractions import Fraction

import numpy as np
import pytest

from maxrep.estimate import LOWER_CONSTANT, UPPER_CONSTANT, compare_with_exact
from maxrep.functionals import vk_residual
from maxrep.global_build import area_fix, build_near_optimizer, evaluate_candidate
from maxrep.local_gas import (
    TOTAL_BITS,
    TOTAL_SCALE,
    LocalPath,
    Theta_local,
    local_energy,
    mirror,
    sigma_bruteforce,
    sigma_exact,
    sigma_exact_table,
    theta_local,
)
from maxrep.maxdim import check_mckay
from maxrep.partitions import area, dim_exact, iter_partitions, partition_count, random_partition

import naive
from quadrature_oracle import theta_quadrature

SLOPES = [0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 0.9, -0.9]
crit = pytest.mark.criterion


@crit(1, "energy identity residual <= 1e-5 (all N <= 8, 50 random partitions at each N in 20, 50, 100, 200)")
def test_identity_residual():
    worst = max(abs(vk_residual(lam)) for n in range(1, 9) for lam in iter_partitions(n))
    rng = np.random.default_rng(1)
    for N in (20, 50, 100, 200):
        worst = max(worst, max(abs(vk_residual(random_partition(N, rng))) for _ in range(50)))
    assert worst <= 1e-5


@crit(2, "d_N for N <= 40 matches naive brute force; sum of dim^2 = N! for N <= 20")
def test_max_dim_table_against_brute_force(max_dim_table):
    for rec in max_dim_table[:40]:
        best, who = naive.max_dim(rec.N)
        assert rec.d_exact == best and rec.argmax.parts in who
    for N in range(21):
        assert sum(dim_exact(lam).exact ** 2 for lam in iter_partitions(N)) == math.factorial(N)


@crit(3, "dimension bound sqrt(N!)/N holds for all N <= 75 and fails at N = 81")
def test_mckay_counterexample(max_dim_table):
    by_N = {r.N: r for r in max_dim_table}
    assert by_N[81].partitions_scanned == partition_count(81) == 18_004_327
    assert all(check_mckay(N, by_N[N]).holds for N in range(1, 76))
    assert not check_mckay(81, by_N[81]).holds


@crit(4, "branch-and-bound equals 2^n enumeration for n <= 16 on the slope grid")
def test_exact_search_matches_enumeration():
    for rho in (0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 1.0):
        for n in range(1, 17):
            assert sigma_exact(n, rho) == sigma_bruteforce(n, rho)


@crit(5, "superadditivity with zero tolerance for n + m <= 24")
def test_superadditivity():
    for rho in SLOPES:
        units = {r.n: round(r.value * TOTAL_SCALE) for r in sigma_exact_table(24, rho)}
        for n in range(1, 24):
            for m in range(1, 25 - n):
                assert units[n + m] >= units[n] + units[m], (rho, n, m)


@crit(6, "diagonal lower bound n(1-|rho|)^2/8 on 1e5 random paths")
def test_diagonal_lower_bound():
    rng = np.random.default_rng(6)
    grid = SLOPES + [1.0, -1.0]
    violations = 0
    for _ in range(100_000):
        n = int(rng.integers(1, 65))
        rho = grid[int(rng.integers(0, len(grid)))]
        p = LocalPath(tuple(int(s) for s in rng.choice((-1, 1), n)))
        bound = n * (1 - abs(Fraction(rho))) ** 2 / 8
        violations += Fraction(local_energy(p, rho).units, 2**TOTAL_BITS) < bound
    assert violations == 0


@crit(7, "sigma_n at rho equals sigma_n at -rho exactly")
def test_slope_symmetry(sigma_cache):
    for rho in SLOPES[1::2]:
        for a, b in zip(sigma_exact_table(24, rho), sigma_exact_table(24, -rho)):
            assert a.value == b.value
            assert Theta_local(mirror(a.witness), -rho) == b.value
    for r in sigma_cache:
        assert Theta_local(mirror(r.witness), -r.rho) == r.value


@crit(8, "local theta equals adaptive quadrature within 1e-9 on 100 random cases")
def test_theta_against_quadrature():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 17))
        steps = tuple(int(s) for s in rng.choice((-1, 1), n))
        rho = float(rng.uniform(-1, 1))
        worst = max(worst, abs(theta_local(LocalPath(steps), rho) - theta_quadrature(steps, rho)))
    assert worst <= 1e-9


@crit(9, "the constant's bracket lies inside [2(pi-2)/pi^2, pi/sqrt 6]")
def test_bracket_inside_sandwich(d_estimate):
    assert LOWER_CONSTANT <= d_estimate.lower <= d_estimate.value <= d_estimate.upper <= UPPER_CONSTANT
    # the same check against the constants as printed to five places
    assert 0.23132 <= d_estimate.lower and d_estimate.upper <= 1.28255
    assert LOWER_CONSTANT == pytest.approx(0.23132, abs=1e-4) and UPPER_CONSTANT == pytest.approx(1.28255, abs=1e-5)


@crit(10, "fit of exact d_N (N <= 100) agrees with the slope-integral estimate within 0.15")
def test_cross_validation(max_dim_table, d_estimate):
    cmp = compare_with_exact(max_dim_table, d_estimate)
    assert cmp.discrepancy <= 0.15


@crit(11, "N = 1e4 construction: exact area, |x| outside the window range, scaled deficit within 0.3 of the bracket")
def test_construction(d_estimate):
    N, window = 10_000, 32
    rep = build_near_optimizer(N, window, with_breakdown=False)
    f = area_fix(rep.f, N)
    assert area(f) == N
    reach = 2 * math.sqrt(N) + window
    xs = np.arange(-f.L, f.L + 1)
    outside = np.abs(xs) >= reach
    assert np.array_equal(f.heights()[outside], np.abs(xs[outside]))
    assert f.L <= math.ceil(reach)
    s = evaluate_candidate(f).scaled_deficit
    assert d_estimate.lower - 0.3 <= s <= d_estimate.upper + 0.3
