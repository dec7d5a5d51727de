from __future__ import annotations

import math

import numpy as np
import pytest

from isoyamabe import UnsupportedGeometryError, c_n_value, make_problem, solution_energy, sphere_volume, yamabe_value
from isoyamabe.energy import _gauss_legendre, energy_report, split_dimensions, weighted_integral

ANALYTIC = {3: 2 * math.pi**2, 4: 8 * math.pi**2 / 3, 5: math.pi**3, 6: 16 * math.pi**3 / 15, 7: math.pi**4 / 3}


@pytest.mark.parametrize("n", sorted(ANALYTIC))
def test_sphere_volumes(n):
    assert c_n_value(n) == pytest.approx(ANALYTIC[n], rel=1e-12)


def test_low_dimensional_spheres():
    assert sphere_volume(0) == pytest.approx(2.0)
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n", range(3, 8))
def test_unit_profile_quadrature_is_exact(n):
    for m1 in range(1, n - 1):
        spec = make_problem(n, 2, m1, n - 1 - m1)
        e = solution_energy(spec, None, None, lambda r: np.ones_like(r))
        assert e == pytest.approx(c_n_value(n), rel=1e-9)


def test_split_and_consistency_checks():
    spec = make_problem(4, 2, 1, 2)
    assert split_dimensions(spec) == (3, 2)
    with pytest.raises(ValueError, match="inconsistent"):
        solution_energy(spec, 2, 3, lambda r: np.ones_like(r))
    with pytest.raises(ValueError):
        solution_energy(spec, 2, 2, lambda r: np.ones_like(r))
    with pytest.raises(UnsupportedGeometryError):
        split_dimensions(make_problem(7, 3, 2, 2))


def test_panel_doubling_order():
    def fun(r):
        return np.exp(np.cos(3 * r)) * np.sin(0.5 * r) * np.cos(0.5 * r) ** 2

    ref = _gauss_legendre(fun, 0, math.pi, 256, order=4)
    errs = [abs(_gauss_legendre(fun, 0, math.pi, p, order=4) - ref) for p in (4, 8, 16)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 4


def test_weighted_integral_reports_panels():
    val, panels = weighted_integral(lambda r: np.ones_like(r), 1, 1)
    # int sin(r/2) cos(r/2) = 1
    assert val == pytest.approx(1.0, rel=1e-12) and panels >= 32


def test_yamabe_value():
    assert yamabe_value(3, 326.0) == pytest.approx(0.75 * 326 ** (2 / 3))
    assert yamabe_value(3, 326.0) == pytest.approx(35.6, abs=0.1)
    with pytest.raises(ValueError):
        yamabe_value(3, 0.0)


def test_report_for_constant_solution(n4_solutions):
    sol = n4_solutions[0]
    rep = energy_report(sol.spec, sol.profile)
    assert rep.ratio == pytest.approx(1.0, rel=1e-9)
    assert set(rep.as_dict()) == {"energy", "c_n", "ratio", "yamabe"}
