from __future__ import annotations

import math

import numpy as np
import pytest

from isoyamabe import InvalidSpecError, NotFoundError, c_n_value, find_nodal, make_problem
from isoyamabe.matcher import assemble, match_residual


def test_constant_solution_for_k0(n4_solutions, spec4):
    sol = n4_solutions[0]
    assert (sol.d, sol.c, sol.zeroes) == (1.0, 1.0, ())
    assert sol.energy == pytest.approx(c_n_value(4), rel=1e-9)


@pytest.mark.parametrize("k", range(1, 6))
def test_prescribed_zero_counts(n4_solutions, spec4, k):
    sol = n4_solutions[k]
    assert len(sol.zeroes) == k
    assert list(sol.zeroes) == sorted(sol.zeroes)
    assert sol.parity_sign == (-1) ** k
    assert sol.d > 0 and sol.c > 0
    # profile endpoints carry the shooting data with zero slope
    assert sol.profile.r[0] == 0 and sol.profile.r[-1] == math.pi
    assert sol.profile.w[-1] == pytest.approx(sol.parity_sign * sol.c)


def test_slope_nonzero_at_every_zero(n4_solutions):
    for k in range(1, 6):
        prof = n4_solutions[k].profile
        _, der = prof.dense(np.array(n4_solutions[k].zeroes))
        assert np.all(0.5 * der**2 > 0)


def test_residual_function_vanishes_at_solution(n4_solutions, spec4, config):
    sol = n4_solutions[3]
    res = match_residual(spec4, config, sol.d, sol.c, 3)
    assert np.linalg.norm(res) <= 1e-8 * (1 + sol.radius)


def test_radial_case_refused(config):
    with pytest.raises(InvalidSpecError, match="radial"):
        find_nodal(make_problem(3, 1, 2, 2), config, 1)


def test_radial_case_allows_constant(config):
    sol = find_nodal(make_problem(3, 1, 2, 2), config, 0)
    assert sol.zeroes == () and sol.energy is None


@pytest.mark.parametrize("args", [(5, 4, 1, 1), (4, 3, 1, 1), (7, 3, 2, 2)])
def test_other_families_solve_without_energy(args, config):
    sol = find_nodal(make_problem(*args), config, 1)
    assert len(sol.zeroes) == 1 and sol.energy is None
    # equal multiplicities make the problem symmetric about pi/2
    assert sol.c == pytest.approx(sol.d, rel=1e-8)


def test_all_seeds_contains_default(spec4, config, n4_solutions):
    sols = find_nodal(spec4, config, 2, all_seeds=True)
    assert sols[0].d == pytest.approx(n4_solutions[2].d, rel=1e-10)
    assert all(len(s.zeroes) == 2 for s in sols)


def test_not_found_names_scan_range(spec4, config):
    with pytest.raises(NotFoundError, match=r"\[1, 2\]"):
        find_nodal(spec4, config, 5, scan_max=2.0)


def test_rejects_negative_k(spec4, config):
    with pytest.raises(ValueError):
        find_nodal(spec4, config, -1)


def test_manifest_fields(n4_solutions, config):
    man = n4_solutions[1].manifest(config)
    for key in ("n", "ell", "m1", "m2", "k", "d", "c", "parity_sign", "residual", "energy", "yamabe_value", "zeroes", "config"):
        assert key in man


def test_assemble_rejects_unmatched_pair(spec4, config):
    with pytest.raises(Exception):
        assemble(spec4, config, 3.0, 7.0, 1)
