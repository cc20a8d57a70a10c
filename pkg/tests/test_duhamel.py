import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from schrokernel.duhamel import (DuhamelGrid, check_convolution_bound, check_equ1,
                                 convolution_integral, duhamel_sum, duhamel_term, equ1_lhs,
                                 equ1_rhs, radial_gaussian_mean, radial_gaussian_mean_quad)
from schrokernel.fkmc import McConfig, estimate_kernel
from schrokernel.potentials import PotentialSpec

WEAK3 = PotentialSpec.power(3.0, 0.05, sign=-1, dim=3)


@pytest.fixture(scope="module")
def weak_sum():
    grid = DuhamelGrid.build(3, 2.0, n_time=40)
    return grid, duhamel_sum(WEAK3, grid)


@pytest.mark.parametrize("d", [1, 3])
def test_constant_potential_factorials(d):
    grid = DuhamelGrid.build(d, 1.0, n_time=50)
    pot = PotentialSpec.constant(-0.2, dim=d)
    q0 = grid.q()
    mask = grid.core_mask()
    prev = q0
    for n in (1, 2, 3):
        prev = duhamel_term(pot, n, grid, prev)
        ratio = prev[mask] / q0[mask]
        ref = (0.2 * np.broadcast_to(grid.times[:, None], q0.shape)[mask]) ** n / math.factorial(n)
        assert np.max(np.abs(ratio - ref)) <= 1e-3 * np.max(ref)


def test_first_term_frozen_radial():
    grid = DuhamelGrid.build(3, 1.0, n_time=10)
    p1 = duhamel_term(WEAK3, 1, grid)
    assert p1[-1, 0] / grid.q()[-1, 0] == pytest.approx(0.014579756257753344, rel=1e-12)


def test_first_term_line_against_double_quadrature():
    pot = PotentialSpec.power(3.0, 0.05, sign=-1, dim=1)
    grid = DuhamelGrid.build(1, 1.0, n_time=10, y=0.5)
    p1 = duhamel_term(pot, 1, grid)
    i = int(np.argmin(np.abs(grid.space)))
    x, y, t = grid.space[i], 0.5, 1.0

    def inner(s):
        m, v = y + s / t * (x - y), s * (t - s) / t
        f = lambda z: 0.05 * (1 + abs(z)) ** -3 * math.exp(-(z - m) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
        return sum(integrate.quad(f, a, b, limit=200, epsabs=0, epsrel=1e-12)[0]
                   for a, b in ((-np.inf, 0.0), (0.0, np.inf)))

    ref = integrate.quad(inner, 0, t, limit=200)[0]
    assert p1[-1, i] / grid.q()[-1, i] == pytest.approx(ref, rel=1e-8)


def test_terms_positive_and_partial_sums_monotone(weak_sum):
    grid, rep = weak_sum
    for term in rep.terms:
        assert np.all(term >= -1e-15)
    partial = np.cumsum(rep.terms, axis=0)
    assert np.all(np.diff(partial, axis=0) >= -1e-15)


def test_weak_potential_geometric(weak_sum):
    grid, rep = weak_sum
    assert not rep.diverged and rep.observed_ratio < 1
    core = grid.core_mask()
    r = rep.total[core] / grid.q()[core]
    assert r.min() >= 1.0 and r.max() <= 1.0 / (1.0 - rep.observed_ratio)


def test_strong_potential_diverges():
    grid = DuhamelGrid.build(3, 5.0, n_time=30)
    rep = duhamel_sum(PotentialSpec.power(3.0, 5.0, sign=-1, dim=3), grid, n_max=12)
    assert rep.diverged


def test_agrees_with_monte_carlo(weak_sum):
    grid, rep = weak_sum
    cfg = McConfig(n_paths=40000, n_steps=64, seed=12)
    for r in (0.0, 0.5, 1.5):
        i = int(round(r / (grid.space[1] - grid.space[0])))
        est = estimate_kernel(WEAK3, 2.0, np.array([grid.space[i], 0.0, 0.0]), np.zeros(3), cfg)
        assert abs(rep.total[-1, i] - est.value) <= 3 * est.stderr + 2e-3 * est.value


def test_positive_potential_rejected():
    with pytest.raises(ValueError):
        duhamel_term(PotentialSpec.power(3.0, 0.05, dim=3), 1, DuhamelGrid.build(3, 1.0, n_time=4))


def test_equ1_right_side_at_origin():
    # at x = 0, s = 1 and d = alpha = 3 both branches give 1 + log 2
    assert equ1_rhs(3.0, 3, 1.0, 0.0) == pytest.approx(1 + math.log(2.0))
    assert equ1_lhs(3.0, 3, 1e-6, 2.0) == pytest.approx(math.pi ** 1.5 * 3.0 ** -3, rel=1e-4)


def test_equ1_single_constant():
    samples = [(s, x) for s in np.geomspace(0.01, 1e4, 8) for x in (0.0, 1.0, 5.0, 20.0, 100.0)]
    rep = check_equ1(3.0, 3, samples)
    assert rep.passed and rep.band <= 10


def test_convolution_constant_bounds_wide_sample():
    core = [(t, np.zeros(3), np.zeros(3)) for t in np.geomspace(1, 1e4, 6)]
    C = check_convolution_bound(3.0, 3, 0.25, 0.5, core).fitted_constant
    wide = [(0.05, [0, 0, 0], [0.2, 0, 0]), (0.5, [3, 0, 0], [0, 0, 0]),
            (2.0, [10, 0, 0], [-10, 0, 0]), (30.0, [0, 5, 0], [0, 0, 0])]
    for t, x, y in wide:
        x, y = np.array(x, float), np.array(y, float)
        rhs = t ** -1.5 * math.exp(-0.25 * np.sum((x - y) ** 2) / t)
        assert convolution_integral(3.0, 3, 0.25, 0.5, t, x, y) <= C * rhs * 1.05


def test_convolution_input_checks():
    with pytest.raises(ValueError):
        check_convolution_bound(3.0, 3, 0.5, 0.25, [])
    with pytest.raises(ValueError):
        check_equ1(1.5, 3, [(1.0, 0.0)])


@given(rho=st.floats(0.0, 30.0), v=st.floats(1e-3, 50.0), d=st.sampled_from([1, 3]))
def test_radial_mean_matches_quad(rho, v, d):
    f = lambda r: (1.0 + r) ** -3.0
    a = float(radial_gaussian_mean(f, np.array([rho]), v, d)[0])
    assert a == pytest.approx(radial_gaussian_mean_quad(f, rho, v, d), rel=1e-7)
