from __future__ import annotations

import numpy as np
import pytest

from oracles import rk4_fixed_zeroes

from isoyamabe import IntegrationError, IntegratorConfig, integrate_backward, integrate_forward, make_problem, ode_defect
from isoyamabe.integrator import (
    dopri,
    effective_eps0,
    energy_profile,
    hermite_eval,
    read_trajectory_csv,
    refine_zero,
    series_start_left,
    write_trajectory_csv,
)


def test_constant_solution_stays_constant(spec3, config):
    tr = integrate_forward(spec3, config, 1.0)
    assert np.max(np.abs(tr.w - 1.0)) < 1e-14
    assert tr.zeroes == ()
    assert tr.end_state.r == pytest.approx(spec3.a0)


def test_series_start_curvature(spec4):
    st = series_start_left(spec4, 2.0, 1e-4)
    curv = -spec4.lam * (2.0**spec4.p - 2.0) / (1 + spec4.m1)
    assert st.w == pytest.approx(2.0 + 0.5 * curv * 1e-8, rel=1e-15)
    assert st.wp == pytest.approx(curv * 1e-4)


def test_effective_offset_shrinks_for_large_d(spec3, config):
    assert effective_eps0(spec3, config, 2.0) == config.eps0
    assert effective_eps0(spec3, config, 1e4) < 1e-6


def test_config_validation(spec3):
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(eps0=0.2).validate_for(spec3)


@pytest.mark.parametrize("n,m1,m2,d", [(3, 1, 1, 5.0), (4, 1, 2, 4.0), (5, 1, 3, -3.0), (6, 2, 3, 2.5)])
def test_zeroes_match_fixed_step_oracle(n, m1, m2, d, config):
    spec = make_problem(n, 2, m1, m2)
    tr = integrate_forward(spec, config, d, r_end=3.0)
    ref = rk4_fixed_zeroes(n, m1, m2, d, 3.0, 40000)
    assert len(tr.zeroes) == len(ref)
    assert max(abs(a - b) for a, b in zip(tr.zeroes, ref)) < 1e-9


def test_small_d_stays_positive(spec4, config):
    for d in (0.05, 0.4, 0.9, 1.0):
        tr = integrate_forward(spec4, config, d)
        assert tr.zeroes == () and tr.w.min() > 0


def test_small_c_has_no_zeroes_on_the_right(spec4, config):
    for c in (0.1, 0.5, 1.0):
        tr = integrate_backward(spec4, config, c)
        assert tr.zeroes == () and tr.w.min() > 0


def test_backward_is_reflected_forward(spec4, config):
    bwd = integrate_backward(spec4, config, 3.0)
    fwd = integrate_forward(spec4.reflected(), config, 3.0)
    assert bwd.r[0] == pytest.approx(spec4.a0)
    assert np.allclose(bwd.w[::-1], fwd.w) and np.allclose(bwd.wp[::-1], -fwd.wp)
    assert np.all(np.diff(bwd.r) > 0)


def test_energy_nonincreasing_forward(spec4, config):
    E = energy_profile(spec4, integrate_forward(spec4, config, 6.0))[:, 1]
    assert np.all(np.diff(E) <= 1e-9 * (1 + abs(E[0])))


def test_blowup_raises_with_last_state():
    def accel(r, w, v):
        return w * w

    with pytest.raises(IntegrationError) as info:
        dopri(accel, 0.0, 1.0, 0.0, 10.0, 1e-8, 1e-10, 0.1, blowup=1e6)
    assert info.value.last_state is not None


def test_hermite_reproduces_cubic():
    r = np.array([0.0, 0.5, 1.3])
    w, wp = r**3 - r, 3 * r**2 - 1
    x = np.linspace(0, 1.3, 11)
    val, der = hermite_eval(r, w, wp, x)
    assert np.allclose(val, x**3 - x) and np.allclose(der, 3 * x**2 - 1)


def test_refine_zero_agrees_with_events(spec3, config):
    tr = integrate_forward(spec3, config, 5.0)
    z = tr.zeroes[0]
    assert refine_zero(tr, (z - 0.01, z + 0.01)) == pytest.approx(z, abs=1e-12)


def test_defect_small_and_csv_roundtrip(spec4, config, tmp_path):
    tr = integrate_forward(spec4, config, 3.0)
    assert ode_defect(spec4, tr) < 1e-5 * (1 + np.abs(tr.w).max()) ** spec4.p
    path = tmp_path / "t.csv"
    write_trajectory_csv(tr, path)
    r, w, wp = read_trajectory_csv(path)
    assert np.array_equal(r, tr.r) and np.array_equal(w, tr.w) and np.array_equal(wp, tr.wp)
    assert path.read_text().splitlines()[0] == "r,w,wp"
