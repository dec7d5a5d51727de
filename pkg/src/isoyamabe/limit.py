"""Blow-up limit near a singular endpoint.

For large initial values the rescaled shots

    z_d(s) = D^{-1} w_D(s / (d sqrt(lam))),   D = d^{2/(p-1)},

approach the solution v0 of the Emden-Fowler type Cauchy problem

    v'' + H0/s v' + |v|^{p-1} v = 0,   v(0) = 1, v'(0) = 0,

which oscillates forever when (H0 + 1)/2 < (p + 1)/(p - 1). In the critical
case H0 = n - 1, p = (n+2)/(n-2) it is the positive bubble
(1 + s^2/(n(n-2)))^{-(n-2)/2}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .integrator import (
    IntegratorConfig,
    ODEState,
    Trajectory,
    _events,
    dopri,
    effective_eps0,
    integrate_forward,
)
from .problem import ProblemSpec


@dataclass(frozen=True)
class LimitConfig:
    H0: float
    p: float
    K: float = 100.0

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("horizon K must be positive")
        if self.H0 < 0:
            raise ValueError("H0 must be >= 0")
        if not self.p > 1:
            raise ValueError("p must exceed 1")


def subcritical_check(H0: float, p: float) -> bool:
    """True iff (H0 + 1)/2 < (p + 1)/(p - 1); equality counts as critical."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    return (H0 + 1) / 2 < (p + 1) / (p - 1)


def limit_accel(H0: float, p: float):
    copysign = math.copysign

    def accel(s, v, vp):
        return -H0 / s * vp - copysign(abs(v) ** p, v)

    return accel


def solve_limit(cfg: LimitConfig, config: Optional[IntegratorConfig] = None) -> Trajectory:
    """v0 on [0, K]: series start at eps0, adaptive DP5 afterwards.

    The sample at s = 0 is the exact initial state (1, 0).
    """
    config = config or IntegratorConfig()
    eps0 = config.eps0
    curv = -1.0 / (1.0 + cfg.H0)
    accel = limit_accel(cfg.H0, cfg.p)
    rs, ws, vs = dopri(
        accel,
        eps0,
        1.0 + 0.5 * curv * eps0 * eps0,
        curv * eps0,
        cfg.K,
        config.rtol,
        config.atol,
        config.max_step,
        0.1 * eps0,
    )
    zeroes, extrema = _events(accel, rs, ws, vs, config.zero_tol)
    return Trajectory(
        side="limit",
        shoot_param=1.0,
        r=np.concatenate([[0.0], rs]),
        w=np.concatenate([[1.0], ws]),
        wp=np.concatenate([[0.0], vs]),
        zeroes=tuple(zeroes),
        extrema=tuple(extrema),
        end_state=ODEState(rs[-1], ws[-1], vs[-1]),
        accel=accel,
    )


def bubble_profile(n: int, s):
    s = np.asarray(s, dtype=float)
    return (1.0 + s * s / (n * (n - 2))) ** (-(n - 2) / 2)


def bubble_error(n: int, horizon: float = 20.0, config: Optional[IntegratorConfig] = None) -> float:
    """max |v0 - bubble| on a fine grid of [0, horizon] in the critical case."""
    traj = solve_limit(LimitConfig(n - 1, (n + 2) / (n - 2), horizon), config)
    grid = np.linspace(0.0, horizon, 4001)
    v = traj.dense(grid)[0]
    nodes = np.max(np.abs(traj.w - bubble_profile(n, traj.r)))
    return float(max(nodes, np.max(np.abs(v - bubble_profile(n, grid)))))


def rescale_z(
    spec: ProblemSpec,
    config: IntegratorConfig,
    dscaled: float,
    K: float,
    traj_of_w: Optional[Trajectory] = None,
) -> Trajectory:
    """Rescaled forward shot z_d on [0, min(K, d a0 sqrt(lam))].

    ``traj_of_w`` may supply a precomputed forward trajectory for
    w(0) = d^{2/(p-1)}; otherwise it is integrated here. ``meta`` carries
    ``truncated`` when K exceeds the rescaled source domain.
    """
    if not dscaled > 0:
        raise ValueError("rescaling parameter must be positive")
    p, sl = spec.p, math.sqrt(spec.lam)
    D = dscaled ** (2.0 / (p - 1))
    s_max_domain = dscaled * spec.a0 * sl
    truncated = K > s_max_domain
    s_max = min(K, s_max_domain)
    r_end = s_max / (dscaled * sl)
    if traj_of_w is None:
        traj_of_w = integrate_forward(spec, config, D, r_end=r_end)
    elif abs(traj_of_w.shoot_param - D) > 1e-12 * D:
        raise ValueError("traj_of_w was not shot from d^{2/(p-1)}")
    keep = traj_of_w.r <= r_end * (1 + 1e-14)
    r, w, wp = traj_of_w.r[keep], traj_of_w.w[keep], traj_of_w.wp[keep]
    if r[-1] < r_end * (1 - 1e-14):
        # a longer precomputed shot has no sample at r_end; close with its dense output
        we, wpe = traj_of_w.dense(np.array([r_end]))
        r, w, wp = np.append(r, r_end), np.append(w, we), np.append(wp, wpe)
    scale_r = dscaled * sl
    s = np.concatenate([[0.0], r * scale_r])
    z = np.concatenate([[1.0], w / D])
    zp = np.concatenate([[0.0], wp / (D * scale_r)])
    zeroes = tuple(zz * scale_r for zz in traj_of_w.zeroes if zz <= r_end)
    return Trajectory(
        side="rescaled",
        shoot_param=float(dscaled),
        r=s,
        w=z,
        wp=zp,
        zeroes=zeroes,
        extrema=tuple((a * scale_r, b / D) for a, b in traj_of_w.extrema if a <= r_end),
        end_state=ODEState(float(s[-1]), float(z[-1]), float(zp[-1])),
        meta={"truncated": truncated, "D": D, "s_max": s_max},
    )


def convergence_gap(z: Trajectory, v0: Trajectory, K: float, points: int = 1000) -> float:
    """max over a uniform grid on [0, K] of |z - v0| + |z' - v0'|."""
    for name, tr in (("z", z), ("v0", v0)):
        if tr.r[0] > 0 or tr.r[-1] < K * (1 - 1e-14):
            raise ValueError(f"{name} is only defined on [{tr.r[0]:.6g}, {tr.r[-1]:.6g}], not on [0, {K:.6g}]")
    grid = np.linspace(0.0, K, points)
    zv, zd = z.dense(grid)
    vv, vd = v0.dense(grid)
    return float(np.max(np.abs(zv - vv) + np.abs(zd - vd)))


def zero_growth_check(
    spec: ProblemSpec, config: IntegratorConfig, eps: float, d_ladder: Sequence[float]
) -> list:
    """Number of zeroes of w_d in (0, eps) for each d of the ladder."""
    if not 0 < eps < spec.a0:
        raise ValueError("eps must lie in (0, a0)")
    ladder = [float(x) for x in d_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be increasing")
    counts = []
    for d in ladder:
        if effective_eps0(spec, config, d) >= eps:
            counts.append(0)
            continue
        tr = integrate_forward(spec, config, d, r_end=eps)
        counts.append(sum(1 for zz in tr.zeroes if zz < eps))
    return counts


def convergence_report(
    spec: ProblemSpec, config: IntegratorConfig, d_values: Sequence[float], K: float = 5.0
) -> dict:
    v0 = solve_limit(LimitConfig(spec.m1, spec.p, K), config)
    gaps = []
    for d in d_values:
        z = rescale_z(spec, config, d, K)
        gaps.append({"d": float(d), "gap": convergence_gap(z, v0, K), "truncated": z.meta["truncated"]})
    return {
        "H0": spec.m1,
        "p": spec.p,
        "K": K,
        "subcritical": subcritical_check(spec.m1, spec.p),
        "gaps": gaps,
        "decreasing": all(b["gap"] < a["gap"] for a, b in zip(gaps, gaps[1:])),
    }


def write_limit_csv(traj: Trajectory, path) -> None:
    """``r,v,vp`` rows with 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("r,v,vp\n")
        for a, b, c in zip(traj.r, traj.w, traj.wp):
            fh.write(f"{a:.17g},{b:.17g},{c:.17g}\n")


def write_report_json(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
