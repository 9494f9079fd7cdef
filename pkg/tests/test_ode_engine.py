from __future__ import annotations

import math

import numpy as np
import pytest

from exceptions import ArgumentError, DomainError
from ode_engine import (ZETA, Z_FIXED_POINT_BOUND, System, closed_forms_at, error_band, get_solution,
                        integrate, kappa, master_equation_residual, rhs, richardson_order,
                        solution_covering)


@pytest.fixture(scope="module")
def ysol():
    return get_solution(System.Y)


def test_y_rises_concavely_to_zeta(ysol):
    assert ZETA == pytest.approx(0.63676, abs=1e-5)
    assert np.all(np.diff(ysol.values) >= 0)
    assert np.all(np.diff(ysol.derivatives) <= 1e-12)
    assert ZETA - 1e-4 <= ysol(5.0) <= ZETA + 1e-12


def test_initial_slopes():
    assert rhs(System.Y, 0.0) == 2.0
    assert rhs(System.A, 0.0) == 1.0
    assert rhs(System.Z, 0.0) == 2.0


def test_a_and_z_solutions():
    asol = get_solution(System.A)
    zsol = get_solution(System.Z)
    assert np.all(np.diff(asol.values) > 0)
    assert asol(0.1) == pytest.approx(0.1 - 4 * 0.1 ** 3 / 3, abs=1e-4)
    assert zsol(5.0) <= Z_FIXED_POINT_BOUND
    assert zsol(5.0) == pytest.approx(Z_FIXED_POINT_BOUND, abs=1e-3)


def test_solution_interpolates_and_checks_range(ysol):
    t = ysol.grid[1234]
    assert ysol(t) == pytest.approx(ysol.values[1234], abs=1e-14)
    assert ysol.derivative(1.0) == pytest.approx(rhs(System.Y, ysol(1.0)), abs=1e-8)
    with pytest.raises(DomainError):
        ysol(5.5)
    frame = ysol.to_frame()
    assert list(frame.columns) == ["t", "value", "derivative"]


def test_integrate_lands_on_t_end():
    sol = integrate(System.Y, 1.0, 0.3)
    assert sol.grid[-1] == pytest.approx(1.0)
    with pytest.raises(ArgumentError):
        integrate(System.Y, 1.0, 0.0)


def test_solution_covering_extends_range():
    assert solution_covering(System.A, 2.0).t_end == 5.0
    assert solution_covering(System.A, 6.2).t_end >= 6.2


def test_rk4_order():
    assert richardson_order(System.Y, 0.5, h=0.02) == pytest.approx(4.0, abs=0.5)
    assert richardson_order(System.A, 0.5, h=0.02) == pytest.approx(4.0, abs=0.5)


@pytest.mark.parametrize("eps", [1e-3, 5e-4, 2e-4])
def test_kappa_near_zero(eps):
    assert kappa(0.0) == 0.0
    assert abs(kappa(eps) - 2 * eps) <= eps ** 3 + 1e-18


def test_closed_forms_at_zero_and_identities():
    cf = closed_forms_at(0.0)
    assert cf.q(0, 0) == 1.0 and cf.r(0) == 1.0 and cf.s(0) == 0.0
    assert cf.q(-1, 0) == 0.0 and cf.r(-1) == 0.0
    cf = closed_forms_at(0.6)
    assert sum(cf.r(c) for c in range(40)) == pytest.approx(1.0)
    assert sum(cf.q(b, c) for b in range(30) for c in range(30)) == pytest.approx(1.0)
    assert cf.alpha == pytest.approx(2 * 0.6 * math.exp(-0.36))
    assert cf.kappa_series() == pytest.approx(cf.kappa, rel=1e-12)
    with pytest.raises(DomainError):
        closed_forms_at(1.2)
    with pytest.raises(ArgumentError):
        cf.q(41, 0)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_master_equations_hold_along_y(ysol, t):
    for b in range(4):
        for c in range(4):
            res = master_equation_residual(ysol, t, b, c)
            assert max(res.res_q, res.res_r, res.res_s) < 1e-6
            assert not res.one_sided


def test_master_equations_at_the_boundary(ysol):
    res = master_equation_residual(ysol, 0.0, 1, 1)
    assert res.one_sided
    assert max(res.res_q, res.res_r, res.res_s) < 1e-5
    with pytest.raises(ArgumentError):
        master_equation_residual(get_solution(System.A), 0.5, 0, 0)


def test_error_band():
    assert error_band(10 ** 6, 0.0) == pytest.approx(10 ** -1.2)
    assert error_band(10 ** 6, 10.0) == math.inf
    with pytest.raises(ArgumentError):
        error_band(5, 0.1)


def test_slopes_stay_in_range_and_a_stays_below_t(ysol):
    assert np.all(ysol.derivatives >= 0.0)
    assert np.all(ysol.derivatives <= 2.0)
    asol = get_solution(System.A)
    assert np.all(asol.values <= asol.grid + 1e-12)


def test_kappa_identity_up_to_zeta():
    for y in np.linspace(0.0, ZETA, 201):
        assert y * kappa(y) == pytest.approx(2.0 * (1.0 - math.exp(-y * y)), abs=1e-12)


def test_halving_the_step_leaves_y_unchanged():
    assert abs(integrate(System.Y, 3.0, 2e-4)(3.0) - integrate(System.Y, 3.0, 1e-4)(3.0)) < 1e-10
