"""Double shooting: glue a forward and a backward shot at a0.

A solution with exactly k zeroes corresponds to I(d) = (-1)^k J(c) with
vartheta(c) - theta(d) = k pi. Candidate (d, c) pairs come from crossings
of the polyline R with S shifted left by k pi, drawn in (angle, log radius)
coordinates; each candidate is polished by a damped quasi-Newton iteration
on the two-component residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import c_n_value, solution_energy, yamabe_value
from .errors import (
    IntegrationError,
    InvalidSpecError,
    NotFoundError,
    SeedRejectedError,
    WrongBranchError,
)
from .integrator import IntegratorConfig, ODEState, Trajectory, make_accel
from .problem import ProblemSpec
from .shooting import CurveScan, I_map, J_map, geometric_grid, scan_curve

log = logging.getLogger(__name__)

MATCH_TOL = 1e-8
DEFAULT_SCAN_MAX = 8.0
SCAN_LIMIT = 1024.0
POINTS_PER_DOUBLING = 16


@dataclass(frozen=True)
class NodalSolution:
    spec: ProblemSpec
    k: int
    d: float
    c: float
    parity_sign: int
    profile: Trajectory = field(repr=False)
    zeroes: tuple
    match_residual: float
    radius: float
    energy: Optional[float]
    yamabe_value: Optional[float]
    defect: float = float("nan")

    @property
    def c_n(self) -> float:
        return c_n_value(self.spec.n)

    def manifest(self, config: IntegratorConfig) -> dict:
        return {
            **self.spec.as_dict(),
            "k": self.k,
            "d": self.d,
            "c": self.c,
            "parity_sign": self.parity_sign,
            "residual": self.match_residual,
            "energy": self.energy,
            "c_n": self.c_n,
            "ratio": None if self.energy is None else self.energy / self.c_n,
            "yamabe_value": self.yamabe_value,
            "zeroes": list(self.zeroes),
            "config": config.as_dict(),
            "branch_assumption": "smallest-|d| seed among verified k-zero solutions",
        }


def match_residual(spec: ProblemSpec, config: IntegratorConfig, d: float, c: float, k: int) -> np.ndarray:
    """I(d) - (-1)^k J(c)."""
    s = -1.0 if k % 2 else 1.0
    ip = I_map(spec, config, d)
    jp = J_map(spec, config, c)
    return np.array([ip.x - s * jp.x, ip.y - s * jp.y])


def _segment_crossings(P, Q):
    """Parameters (i, t, j, u) of crossings of polylines P and Q (N x 2 arrays)."""
    if len(P) < 2 or len(Q) < 2:
        return []
    p0, dp = P[:-1, None, :], (P[1:] - P[:-1])[:, None, :]
    q0, dq = Q[None, :-1, :], (Q[1:] - Q[:-1])[None, :, :]
    den = dp[..., 0] * dq[..., 1] - dp[..., 1] * dq[..., 0]
    rel = q0 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel[..., 0] * dq[..., 1] - rel[..., 1] * dq[..., 0]) / den
        u = (rel[..., 0] * dp[..., 1] - rel[..., 1] * dp[..., 0]) / den
    eps = 1e-12
    ok = (den != 0) & (t >= -eps) & (t <= 1 + eps) & (u >= -eps) & (u <= 1 + eps)
    ii, jj = np.nonzero(ok)
    return [(int(i), float(np.clip(t[i, j], 0, 1)), int(j), float(np.clip(u[i, j], 0, 1))) for i, j in zip(ii, jj)]


def _interp_param(params, i, t):
    a, b = params[i], params[i + 1]
    return float(math.exp(math.log(a) + t * (math.log(b) - math.log(a))))


def seed_candidates(spec, config, k: int, scan_R: CurveScan, scan_S: CurveScan):
    """(d, c) pairs bracketing crossings of R with S - (k pi, 0), ordered by d.

    Each entry is ``((d, c), (d_lo, d_hi, c_lo, c_hi))``.
    """
    P = np.column_stack([scan_R.thetas, np.log(scan_R.radii)])
    Q = np.column_stack([scan_S.thetas - k * math.pi, np.log(scan_S.radii)])
    seeds = []
    if k == 0:
        seeds.append(((1.0, 1.0), (1.0, 1.0, 1.0, 1.0)))
    for i, t, j, u in _segment_crossings(P, Q):
        d = _interp_param(scan_R.params, i, t)
        c = _interp_param(scan_S.params, j, u)
        brk = (scan_R.params[i], scan_R.params[i + 1], scan_S.params[j], scan_S.params[j + 1])
        seeds.append(((d, c), tuple(float(x) for x in brk)))
    seeds.sort(key=lambda s: (abs(s[0][0]), abs(s[0][1])))
    out = []
    for s in seeds:
        if not any(abs(s[0][0] - o[0][0]) <= 1e-12 * abs(o[0][0]) and abs(s[0][1] - o[0][1]) <= 1e-12 * abs(o[0][1]) for o in out):
            out.append(s)
    if not out:
        raise NotFoundError(
            f"no crossing of R and S-({k}pi,0): theta in [{scan_R.thetas.min():.4g}, "
            f"{scan_R.thetas.max():.4g}], vartheta in [{scan_S.thetas.min():.4g}, "
            f"{scan_S.thetas.max():.4g}]; widen the scan"
        )
    return out


def _newton(spec, config, d, c, k, max_iter=60, rel_step=1e-6):
    s = -1.0 if k % 2 else 1.0

    def F(dd, cc):
        ip = I_map(spec, config, dd)
        jp = J_map(spec, config, cc)
        return np.array([ip.x - s * jp.x, ip.y - s * jp.y]), max(ip.radius, jp.radius)

    x = np.array([d, c], dtype=float)
    fx, rad = F(*x)
    target = 1e-3 * MATCH_TOL * (1 + rad)
    for _ in range(max_iter):
        nrm = np.linalg.norm(fx)
        if nrm <= target:
            break
        J = np.empty((2, 2))
        for col in range(2):
            hstep = rel_step * max(1.0, abs(x[col]))
            xp = x.copy()
            xp[col] += hstep
            J[:, col] = (F(*xp)[0] - fx) / hstep
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError as exc:
            raise SeedRejectedError(f"singular Jacobian at (d, c)=({x[0]:.6g}, {x[1]:.6g})") from exc
        lam = 1.0
        while True:
            xn = x + lam * step
            # stay on the same sheet: the shots never cross zero
            if np.all(np.sign(xn) == np.sign(x)) and np.all(np.abs(xn) > 1e-3 * np.abs(x)):
                try:
                    fn, rn = F(*xn)
                except IntegrationError:
                    fn = None
                if fn is not None and np.linalg.norm(fn) < nrm:
                    break
            lam *= 0.5
            if lam < 1e-6:
                return x, fx, rad
        x, fx, rad = xn, fn, rn
        target = 1e-3 * MATCH_TOL * (1 + rad)
    return x, fx, rad


def _subdivided_seed(spec, config, k, brk, levels=3):
    """Shrink a crossing bracket by re-scanning finer sub-grids."""
    d_lo, d_hi, c_lo, c_hi = brk
    seed = None
    for _ in range(levels):
        gd = np.geomspace(d_lo, d_hi, 5)
        gc = np.geomspace(c_lo, c_hi, 5)
        sR = scan_curve(spec, config, "R", gd)
        sS = scan_curve(spec, config, "S", gc)
        try:
            cands = seed_candidates(spec, config, k, sR, sS)
        except NotFoundError:
            break
        seed, (d_lo, d_hi, c_lo, c_hi) = cands[0]
    return seed


def _merge_profile(spec, config, fwd: Trajectory, bwd: Trajectory, d, c, sign):
    r = np.concatenate([[0.0], fwd.r, bwd.r[1:], [math.pi]])
    w = np.concatenate([[d], fwd.w, sign * bwd.w[1:], [sign * c]])
    wp = np.concatenate([[0.0], fwd.wp, sign * bwd.wp[1:], [0.0]])
    return Trajectory(
        side="merged",
        shoot_param=float(d),
        r=r,
        w=w,
        wp=wp,
        zeroes=(),
        extrema=(),
        end_state=ODEState(math.pi, sign * c, 0.0),
        accel=make_accel(spec),
    )


def assemble(spec: ProblemSpec, config: IntegratorConfig, d: float, c: float, k: int) -> NodalSolution:
    """Build and verify the glued solution for a converged (d, c)."""
    from .integrator import ode_defect

    sign = -1 if k % 2 else 1
    ip = I_map(spec, config, d, keep=True)
    jp = J_map(spec, config, c, keep=True)
    fwd, bwd = ip.trajectory, jp.trajectory
    res = float(np.hypot(ip.x - sign * jp.x, ip.y - sign * jp.y))
    radius = max(ip.radius, jp.radius)
    tol = config.zero_tol
    a0 = spec.a0
    zs = [z for z in fwd.zeroes if z < a0 - tol]
    if abs(ip.x) <= tol * abs(ip.y) or (ip.x != 0 and jp.x != 0 and (ip.x > 0) != (sign * jp.x > 0)):
        zs.append(a0)
    zs += [z for z in bwd.zeroes if z > a0 + tol]
    profile = _merge_profile(spec, config, fwd, bwd, d, c, sign)
    if res > MATCH_TOL * (1 + radius):
        raise SeedRejectedError(f"match residual {res:.3g} above tolerance at (d, c)=({d:.9g}, {c:.9g})")
    if len(zs) != k:
        raise WrongBranchError(f"converged solution at (d, c)=({d:.9g}, {c:.9g}) has {len(zs)} zeroes, wanted {k}")
    energy = yam = None
    if spec.ell == 2:
        energy = solution_energy(spec, None, None, profile)
        yam = yamabe_value(spec.n, energy)
    return NodalSolution(
        spec=spec,
        k=k,
        d=float(d),
        c=float(c),
        parity_sign=sign,
        profile=profile,
        zeroes=tuple(zs),
        match_residual=res,
        radius=radius,
        energy=energy,
        yamabe_value=yam,
        defect=ode_defect(spec, profile),
    )


def refine_match(spec, config, seed, k: int, bracket=None) -> NodalSolution:
    """Polish ``seed`` = (d, c) to a verified k-zero solution.

    Falls back to shrinking ``bracket`` (d_lo, d_hi, c_lo, c_hi) by nested
    re-scans when the quasi-Newton iteration fails from the raw seed.
    """
    d, c = seed
    if d == c == 1.0 and k == 0:
        return assemble(spec, config, 1.0, 1.0, 0)
    x, fx, rad = _newton(spec, config, d, c, k)
    if np.linalg.norm(fx) > MATCH_TOL * (1 + rad) and bracket is not None:
        better = _subdivided_seed(spec, config, k, bracket)
        if better is not None:
            x, fx, rad = _newton(spec, config, *better, k)
    if np.linalg.norm(fx) > MATCH_TOL * (1 + rad):
        raise SeedRejectedError(
            f"quasi-Newton did not converge from seed ({d:.6g}, {c:.6g}); residual {np.linalg.norm(fx):.3g}"
        )
    return assemble(spec, config, float(x[0]), float(x[1]), k)


def scan_pair(spec, config, scan_max, executor=None):
    num = max(8, int(POINTS_PER_DOUBLING * math.log2(max(scan_max, 2.0))) + 1)
    grid = geometric_grid(1.0, scan_max, num)
    return (
        scan_curve(spec, config, "R", grid, executor=executor),
        scan_curve(spec, config, "S", grid, executor=executor),
    )


def find_nodal(
    spec: ProblemSpec,
    config: IntegratorConfig,
    k: int,
    scan_max: Optional[float] = None,
    all_seeds: bool = False,
    scan_limit: float = SCAN_LIMIT,
    executor=None,
):
    """Solve the double shooting problem for exactly k zeroes.

    Scans d, c over [1, scan_max], doubling the range until some seed
    refines to a verified solution. Returns the solution from the
    smallest-|d| seed, or all distinct solutions when ``all_seeds``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > 0 and not spec.nodal:
        raise InvalidSpecError(
            f"nodal solutions need m1, m2 < n-1 (got m1={spec.m1}, m2={spec.m2}, n={spec.n}); "
            "the radial case has none"
        )
    config.validate_for(spec)
    if k == 0:
        sol = assemble(spec, config, 1.0, 1.0, 0)
        return [sol] if all_seeds else sol
    smax = float(scan_max or DEFAULT_SCAN_MAX)
    tried = []
    while True:
        scan_R, scan_S = scan_pair(spec, config, smax, executor)
        tried.append(smax)
        found = []
        try:
            seeds = seed_candidates(spec, config, k, scan_R, scan_S)
        except NotFoundError:
            seeds = []
        for seed, brk in seeds:
            try:
                sol = refine_match(spec, config, seed, k, brk)
            except (SeedRejectedError, WrongBranchError, IntegrationError) as exc:
                log.debug("seed %s rejected: %s", seed, exc)
                continue
            if not any(abs(sol.d - o.d) <= 1e-7 * abs(o.d) and abs(sol.c - o.c) <= 1e-7 * abs(o.c) for o in found):
                found.append(sol)
            if not all_seeds:
                break
        if found:
            found.sort(key=lambda s: (abs(s.d), abs(s.c)))
            return found if all_seeds else found[0]
        if scan_max is not None or smax * 2 > scan_limit:
            raise NotFoundError(
                f"no verified {k}-zero solution; scan ranges tried: "
                + ", ".join(f"[1, {t:g}]" for t in tried)
            )
        smax *= 2
