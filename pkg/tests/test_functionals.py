import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxrep.errors import DomainError
from maxrep.functionals import (
    EnergyBreakdown,
    bar_theta_N,
    dyadic_energy,
    energy_breakdown,
    log_hook_ratio,
    phi,
    phi_table,
    theta_N,
    tilde_theta,
    vk_residual,
)
from maxrep.partitions import Partition, StepFunction, iter_partitions, random_partition, to_step_function
from maxrep.shape import staircase_below

PHI_1 = 3 - 4 * math.log(2)


def phi_partial_sum(h, terms=60):
    with mpmath.workdps(40):
        return float(mpmath.fsum(1 / (mpmath.mpf(k) * (k + 1) * (2 * k + 1) * mpmath.mpf(h) ** (2 * k)) for k in range(1, terms)))


def test_phi_values():
    assert phi(1) == pytest.approx(PHI_1, abs=1e-15)
    assert phi(2) == pytest.approx(phi_partial_sum(2), abs=1e-15)
    assert phi(2) == pytest.approx(1 / 24 + 1 / 480 + 1 / 5376 + 1 / 69120, abs=2e-5)
    assert phi(10**6) == pytest.approx(1e-12 / 6, rel=1e-9)
    with pytest.raises(DomainError):
        phi(0)


def test_phi_one_series_limit():
    with mpmath.workdps(30):
        s = mpmath.nsum(lambda k: 1 / (k * (k + 1) * (2 * k + 1)), [1, mpmath.inf])
    assert phi(1) == pytest.approx(float(s), abs=1e-15)


def test_phi_monotone_and_bounded():
    t = phi_table(500)
    assert np.all(np.diff(t[1:]) < 0)
    h = np.arange(1, 501)
    assert np.all(t[1:] <= PHI_1 / h**2 + 1e-18)


def test_tilde_theta_examples():
    assert tilde_theta(StepFunction(0, ())) == 0.0
    assert tilde_theta(to_step_function(Partition((1,)))) == pytest.approx(PHI_1, abs=1e-15)
    expected = phi(1) + 2 * phi(2) + phi(3)
    assert tilde_theta(to_step_function(Partition((2, 2)))) == pytest.approx(expected, abs=1e-15)


def test_theta_single_cell():
    val, err = theta_N(to_step_function(Partition((1,))), 1)
    assert val == pytest.approx(32 * math.log(2) - 16, abs=1e-9)
    assert err < 1e-8


def test_theta_matches_independent_quadrature():
    # the distance-band split integrates the double integral numerically
    f = to_step_function(Partition((1,)))
    prof = dyadic_energy(f, 1)
    assert prof.total == pytest.approx(theta_N(f, 1)[0], abs=1e-6)


@pytest.mark.slow
def test_theta_matches_independent_quadrature_larger():
    f = to_step_function(Partition((2, 1)))
    assert dyadic_energy(f, 3).total == pytest.approx(theta_N(f, 3)[0], abs=1e-6)


def test_theta_positive_off_limit_shape():
    assert theta_N(staircase_below(25), 25)[0] > 0


def test_bar_theta_examples():
    assert bar_theta_N(to_step_function(Partition((1,))), 1)[0] == 0.0
    # a single row of length 4 still ends at 2 sqrt(4)
    assert bar_theta_N(to_step_function(Partition((4,))), 4)[0] == 0.0
    assert bar_theta_N(to_step_function(Partition((5,))), 5)[0] > 0
    assert bar_theta_N(to_step_function(Partition((1, 1, 1, 1, 1))), 5)[0] > 0


def test_residual_examples():
    assert abs(vk_residual(Partition((1,)))) <= 1e-6
    assert abs(vk_residual(Partition((2, 2)))) <= 1e-6
    assert abs(vk_residual(Partition((2, 1)))) <= 1e-6


def test_residual_exhaustive_small():
    for n in range(1, 9):
        for lam in iter_partitions(n):
            assert abs(vk_residual(lam)) <= 1e-6, lam


def test_residual_random_50(rng):
    for _ in range(20):
        assert abs(vk_residual(random_partition(50, rng))) <= 1e-5


@given(st.integers(1, 120), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_theta_reflection_invariant(N, seed):
    lam = random_partition(N, np.random.default_rng(seed))
    a = theta_N(to_step_function(lam), N)[0]
    b = theta_N(to_step_function(lam.conjugate()), N)[0]
    assert a == pytest.approx(b, abs=1e-8)


@given(st.integers(1, 120), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_bar_theta_nonnegative(N, seed):
    lam = random_partition(N, np.random.default_rng(seed))
    assert bar_theta_N(to_step_function(lam), N)[0] >= 0


def test_breakdown_json():
    b = energy_breakdown(to_step_function(Partition((2, 2))), 4)
    assert isinstance(b, EnergyBreakdown)
    d = b.to_json()
    assert set(d) == {"theta", "tilde_theta", "bar_theta", "total", "quad_error"}
    assert d["total"] == pytest.approx(d["theta"] / 8 + d["tilde_theta"])


def test_log_hook_ratio_single_cell():
    assert log_hook_ratio(Partition((1,))) == pytest.approx(1.0)


def test_dyadic_all_up_at_slope_one():
    from maxrep.local_gas import LocalPath

    prof = dyadic_energy(LocalPath.all_up(16), 1.0)
    # zero up to interpolation rounding
    assert prof.diagonal < 1e-20 and all(v < 1e-20 for _, v in prof.bands)
