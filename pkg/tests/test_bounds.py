from __future__ import annotations

import math

import numpy as np
import pytest

from bounds import (G_CHECK_K, G_CHECK_VALUE, H_CHECK_K, H_CHECK_VALUE, BoundsTable, appendix_report,
                    bounds_table, dg_numerator, g_formula, g_value, h_value, k_grid, l_nu_old,
                    l_nu_star, ratio_summary, u_tau)
from exceptions import ArgumentError, DomainError
from ode_engine import System, get_solution, integrate


@pytest.fixture(scope="module")
def sols():
    return get_solution(System.Y), get_solution(System.A), get_solution(System.Z)


def test_bounds_vanish_at_zero(sols):
    ysol, asol, zsol = sols
    assert l_nu_star(0.0, ysol) == 0.0
    assert l_nu_old(0.0, zsol) == 0.0
    assert u_tau(0.0, asol).value == 0.0
    assert dg_numerator(0.0, 0.0) == 0.0


def test_lower_bound_formula(sols):
    ysol, _, _ = sols
    assert l_nu_star(1.0, ysol) == pytest.approx((1.0 - ysol(1.0) / 2) / 3)
    for k in (0.5, 1.0, 2.5):
        assert g_value(k, ysol) == pytest.approx(g_formula(k, ysol))


@pytest.mark.parametrize("k", [1.0, 2.0, 3.0])
def test_new_lower_bound_beats_the_earlier_one(sols, k):
    ysol, _, zsol = sols
    assert l_nu_star(k, ysol) > l_nu_old(k, zsol)


def test_cover_bound_switches_branch(sols):
    _, asol, _ = sols
    small = u_tau(0.3, asol)
    large = u_tau(3.0, asol)
    assert small.branch == "k-a(k)"
    assert small.value == pytest.approx(0.3 - asol(0.3))
    assert large.branch == "k/2"
    assert large.value == 1.5


def test_bounds_reject_k_outside_solution(sols):
    ysol, _, _ = sols
    with pytest.raises(DomainError):
        l_nu_star(6.0, ysol)


def test_appendix_point_checks(sols):
    ysol, asol, _ = sols
    assert g_value(G_CHECK_K, ysol) <= G_CHECK_VALUE
    assert h_value(H_CHECK_K, ysol, asol) <= H_CHECK_VALUE


def test_k_grid():
    grid = k_grid(0.2, 3.0, 1e-3)
    assert len(grid) == 2801
    assert grid[0] == 0.2 and grid[-1] == 3.0
    with pytest.raises(ArgumentError):
        k_grid(0.2, 3.0, 0.0)


def test_appendix_report_passes():
    report = appendix_report(1e-3)
    assert report.passed, report.text()
    assert report.values["max_ratio"] < 2.0
    assert set(report.gap_ratios) == {"[0.2, 0.2403]", "[0.2403, 2.1243]", "[2.1243, 3.0]"}
    assert all(ratio < 2.0 for ratio in report.gap_ratios.values())
    assert "PASS" in report.text()
    with pytest.raises(ArgumentError):
        appendix_report(2e-3)


def test_bounds_table_and_ratio_summary():
    table = bounds_table(k_grid(0.2, 3.0, 0.01))
    assert list(table.frame.columns) == BoundsTable.COLUMNS
    assert len(table.frame) == 281
    assert np.all(table.frame["u_tau"] <= table.frame["k"] / 2 + 1e-15)
    max_ratio, k_at = ratio_summary(table)
    assert max_ratio < 2.0
    assert 0.2 <= k_at <= 3.0
    record = table.to_records()[0]
    assert record["k"] == 0.2 and not math.isnan(record["ratio"])


def test_simpson_halving_leaves_the_earlier_bound_unchanged(sols):
    _, _, zsol = sols
    coarse = integrate(System.Z, zsol.t_end, 2 * zsol.h)
    for k in (0.5, 1.0, 2.0, 3.0):
        assert abs(l_nu_old(k, coarse) - l_nu_old(k, zsol)) < 1e-8


def test_new_lower_bound_dominates_on_the_whole_range(sols):
    ysol, _, zsol = sols
    for k in k_grid(0.2, 3.0, 0.05):
        assert l_nu_old(k, zsol) <= l_nu_star(k, ysol)
