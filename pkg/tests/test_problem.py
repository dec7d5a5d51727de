from __future__ import annotations

import math

import numpy as np
import pytest

from isoyamabe import InvalidSpecError, make_problem
from isoyamabe.problem import G_eval, f_eval, h_eval, h_tilde_eval


def test_derived_constants_n3():
    s = make_problem(3, 2, 1, 1)
    assert s.lam == pytest.approx(3 / 16)
    assert s.p == 5.0
    assert s.a0 == pytest.approx(math.pi / 2)


def test_matching_point_is_zero_of_h():
    for n, m1, m2 in [(4, 1, 2), (5, 1, 3), (7, 2, 4), (7, 1, 5)]:
        s = make_problem(n, 2, m1, m2)
        assert abs(h_eval(s, s.a0)) < 1e-14
        r = np.linspace(0, math.pi, 200)
        vals = [h_eval(s, x) for x in r]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_reflection_swaps_multiplicities():
    s = make_problem(4, 2, 1, 2)
    refl = s.reflected()
    assert (refl.m1, refl.m2) == (2, 1)
    for r in np.linspace(0.1, 3.0, 7):
        assert h_eval(refl, r) == pytest.approx(-h_eval(s, math.pi - r))
        assert h_tilde_eval(s, r) == pytest.approx(-h_eval(s, math.pi - r))
    assert refl.a0 == pytest.approx(math.pi - s.a0)


@pytest.mark.parametrize(
    "args, fragment",
    [
        ((2, 2, 1, 1), "n must be >= 3"),
        ((4, 5, 1, 1), "ell must be one of"),
        ((4, 2, 0, 3), "multiplicities"),
        ((4, 3, 1, 2), "odd ell"),
        ((3, 2, 1, 2), "Munzner"),
        ((3.5, 2, 1, 1), "integer"),
    ],
)
def test_invalid_specs_name_the_constraint(args, fragment):
    with pytest.raises(InvalidSpecError, match=fragment):
        make_problem(*args)


def test_strict_flag_checks_ell3_families():
    # ell=3, m=3 satisfies Munzner (n=10) but no such family exists
    make_problem(10, 3, 3, 3)
    with pytest.raises(InvalidSpecError, match="strict"):
        make_problem(10, 3, 3, 3, strict=True)
    make_problem(7, 3, 2, 2, strict=True)
    # ell=4 and ell=6 only need the Munzner relation, even under strict
    make_problem(5, 4, 1, 1, strict=True)
    make_problem(19, 6, 3, 3, strict=True)


def test_nodal_flag():
    assert make_problem(3, 2, 1, 1).nodal
    assert not make_problem(3, 1, 2, 2).nodal


def test_nonlinearity_zeros_and_oddness():
    nl = make_problem(5, 2, 2, 2).nonlinearity
    for w in (0.0, 1.0, -1.0):
        assert f_eval(nl, w) == 0.0
    for w in (0.3, 1.7, 4.0):
        assert nl(-w) == -nl(w)


def test_potential_derivative_is_f():
    nl = make_problem(6, 2, 2, 3).nonlinearity
    for t in (-2.0, -0.4, 0.5, 1.3):
        h = 1e-6
        fd = (G_eval(nl, t + h) - G_eval(nl, t - h)) / (2 * h)
        assert fd == pytest.approx(f_eval(nl, t), rel=1e-7, abs=1e-9)
    assert G_eval(nl, 0.0) == 0.0
