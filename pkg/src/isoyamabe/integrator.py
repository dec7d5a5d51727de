"""Adaptive integration of the reduced ODE away from its singular endpoints.

Both endpoints r=0 and r=pi are regular singular points. Trajectories are
started a short distance ``eps0`` inside the interval from the even Taylor
expansion w(r) = d + w''(0) r^2 / 2, with w''(0) = -f(d) / (1 + h(0)), and then
advanced with a Dormand-Prince 5(4) pair under PI step-size control.

The backward problem (prescribed value c at r=pi) is solved as a forward
problem for the reflected coefficient h~(r) = -h(pi - r) and mapped back
through r -> pi - r.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, IntegrationError
from .problem import G_eval, ProblemSpec, f_eval

Accel = Callable[[float, float, float], float]

BLOWUP = 1e12

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@dataclass(frozen=True)
class IntegratorConfig:
    eps0: float = 1e-4
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 1e-2
    zero_tol: float = 1e-12

    def __post_init__(self):
        for name in ("eps0", "rtol", "atol", "max_step", "zero_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def validate_for(self, spec: ProblemSpec):
        lim = min(spec.a0, math.pi - spec.a0) / 10
        if self.eps0 >= lim:
            raise ValueError(f"eps0={self.eps0} must be below {lim:.3g} for this spec")

    def as_dict(self) -> dict:
        return {
            "eps0": self.eps0,
            "rtol": self.rtol,
            "atol": self.atol,
            "max_step": self.max_step,
            "zero_tol": self.zero_tol,
        }


@dataclass(frozen=True)
class ODEState:
    r: float
    w: float
    wp: float


@dataclass(frozen=True)
class Trajectory:
    """Integrated path with refined events.

    ``r``, ``w``, ``wp`` are parallel sample arrays with strictly increasing
    ``r``. For backward trajectories the arrays are already mapped onto
    [a0, pi - eps0], so ``wp`` is the derivative in the original variable.
    """

    side: str
    shoot_param: float
    r: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    zeroes: tuple
    extrema: tuple
    end_state: ODEState
    accel: Optional[Accel] = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def samples(self) -> list:
        return [ODEState(float(a), float(b), float(c)) for a, b, c in zip(self.r, self.w, self.wp)]

    def __len__(self):
        return len(self.r)

    def dense(self, x):
        """Cubic Hermite interpolation of (w, w') at the points ``x``."""
        return hermite_eval(self.r, self.w, self.wp, x)


def make_accel(spec: ProblemSpec) -> Accel:
    """Return w'' as a function of (r, w, w') for the equation with coefficient h."""
    c1 = 0.5 * (spec.m1 + spec.m2)
    c0 = 0.5 * (spec.m2 - spec.m1)
    lam, p = spec.lam, spec.p
    cos, sin, copysign = math.cos, math.sin, math.copysign

    def accel(r, w, v):
        return -(c1 * cos(r) - c0) / sin(r) * v - lam * (copysign(abs(w) ** p, w) - w)

    return accel


def _dp_step(accel, r, w, v, kw1, kv1, h):
    """One Dormand-Prince step; returns new state, FSAL slopes and error estimate."""
    w2 = w + h * _A21 * kw1
    v2 = v + h * _A21 * kv1
    kw2, kv2 = v2, accel(r + _C2 * h, w2, v2)
    w3 = w + h * (_A31 * kw1 + _A32 * kw2)
    v3 = v + h * (_A31 * kv1 + _A32 * kv2)
    kw3, kv3 = v3, accel(r + _C3 * h, w3, v3)
    w4 = w + h * (_A41 * kw1 + _A42 * kw2 + _A43 * kw3)
    v4 = v + h * (_A41 * kv1 + _A42 * kv2 + _A43 * kv3)
    kw4, kv4 = v4, accel(r + _C4 * h, w4, v4)
    w5 = w + h * (_A51 * kw1 + _A52 * kw2 + _A53 * kw3 + _A54 * kw4)
    v5 = v + h * (_A51 * kv1 + _A52 * kv2 + _A53 * kv3 + _A54 * kv4)
    kw5, kv5 = v5, accel(r + _C5 * h, w5, v5)
    w6 = w + h * (_A61 * kw1 + _A62 * kw2 + _A63 * kw3 + _A64 * kw4 + _A65 * kw5)
    v6 = v + h * (_A61 * kv1 + _A62 * kv2 + _A63 * kv3 + _A64 * kv4 + _A65 * kv5)
    kw6, kv6 = v6, accel(r + h, w6, v6)
    wn = w + h * (_B1 * kw1 + _B3 * kw3 + _B4 * kw4 + _B5 * kw5 + _B6 * kw6)
    vn = v + h * (_B1 * kv1 + _B3 * kv3 + _B4 * kv4 + _B5 * kv5 + _B6 * kv6)
    kw7, kv7 = vn, accel(r + h, wn, vn)
    ew = h * (_E1 * kw1 + _E3 * kw3 + _E4 * kw4 + _E5 * kw5 + _E6 * kw6 + _E7 * kw7)
    ev = h * (_E1 * kv1 + _E3 * kv3 + _E4 * kv4 + _E5 * kv5 + _E6 * kv6 + _E7 * kv7)
    return wn, vn, kw7, kv7, ew, ev


def single_step(accel, r, w, v, h):
    """Advance (w, w') from r by exactly h (h may be negative) in one DP5 step."""
    if h == 0.0:
        return w, v
    wn, vn, *_ = _dp_step(accel, r, w, v, v, accel(r, w, v), h)
    return wn, vn


def dopri(
    accel: Accel,
    r0: float,
    w0: float,
    v0: float,
    r_end: float,
    rtol: float,
    atol: float,
    max_step: float,
    h0: Optional[float] = None,
    blowup: float = BLOWUP,
):
    """Integrate w'' = accel(r, w, w') from r0 to r_end > r0.

    Returns the accepted sample lists (r, w, w'). Raises IntegrationError on
    step-size underflow or when |w| or |w'| exceeds ``blowup``.
    """
    safety, fac_min, fac_max = 0.9, 0.2, 5.0
    alpha, beta = 0.7 / 5, 0.4 / 5
    rs, ws, vs = [r0], [w0], [v0]
    r, w, v = r0, w0, v0
    kw, kv = v, accel(r, w, v)
    span = r_end - r0
    h = min(max_step, span, h0 if h0 is not None else max_step)
    err_prev = 1.0
    rejected = False
    sqrt = math.sqrt
    while r < r_end:
        if r + h >= r_end or r_end - (r + h) < 1e-14 * max(1.0, abs(r_end)):
            h = r_end - r
            last = True
        else:
            last = False
        if h <= 8 * math.ulp(max(abs(r), 1e-300)) or h < 1e-300:
            raise IntegrationError(
                f"step size underflow at r={r:.17g}", ODEState(r, w, v)
            )
        wn, vn, kwn, kvn, ew, ev = _dp_step(accel, r, w, v, kw, kv, h)
        sw = atol + rtol * max(abs(w), abs(wn))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = sqrt(0.5 * ((ew / sw) ** 2 + (ev / sv) ** 2))
        if err != err:  # NaN
            err = 1e10
        if err <= 1.0:
            r = r_end if last else r + h
            w, v, kw, kv = wn, vn, kwn, kvn
            if abs(w) > blowup or abs(v) > blowup:
                raise IntegrationError(
                    f"solution exceeded {blowup:g} at r={r:.6g}", ODEState(r, w, v)
                )
            rs.append(r)
            ws.append(w)
            vs.append(v)
            err = max(err, 1e-10)
            fac = safety * err ** (-alpha) * err_prev**beta
            fac = min(fac_max, max(fac_min, fac))
            if rejected:
                fac = min(fac, 1.0)
            h = min(h * fac, max_step)
            err_prev = err
            rejected = False
        else:
            h = h * max(fac_min, safety * err ** (-1 / 5))
            rejected = True
    return rs, ws, vs


def hermite_eval(r, w, wp, x):
    """Piecewise cubic Hermite interpolation of (w, w') on the knots ``r``."""
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(r, x, side="right") - 1, 0, len(r) - 2)
    h = r[i + 1] - r[i]
    t = (x - r[i]) / h
    t2, t3 = t * t, t * t * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    val = h00 * w[i] + h10 * h * wp[i] + h01 * w[i + 1] + h11 * h * wp[i + 1]
    d00 = (6 * t2 - 6 * t) / h
    d10 = 3 * t2 - 4 * t + 1
    d01 = (-6 * t2 + 6 * t) / h
    d11 = 3 * t2 - 2 * t
    der = d00 * w[i] + d10 * wp[i] + d01 * w[i + 1] + d11 * wp[i + 1]
    return val, der


def _hermite_scalar(r0, r1, w0, w1, v0, v1, x, deriv):
    h = r1 - r0
    t = (x - r0) / h
    if deriv:
        return (6 * t * t - 6 * t) / h * (w0 - w1) + (3 * t * t - 4 * t + 1) * v0 + (
            3 * t * t - 2 * t
        ) * v1
    return (
        (2 * t**3 - 3 * t**2 + 1) * w0
        + (t**3 - 2 * t**2 + t) * h * v0
        + (-2 * t**3 + 3 * t**2) * w1
        + (t**3 - t**2) * h * v1
    )


def _refine_interval(accel, r0, r1, w0, w1, v0, v1, deriv, tol):
    """Locate a sign change of w (or of w' if ``deriv``) between two samples.

    A root of the cubic Hermite interpolant serves as the first guess; the
    root is then polished by bisection-safeguarded secant iteration (brentq)
    on single DP5 steps re-integrated from the left sample.
    """
    if accel is None:
        return brentq(
            lambda x: _hermite_scalar(r0, r1, w0, w1, v0, v1, x, deriv), r0, r1, xtol=tol
        )
    idx = 1 if deriv else 0

    def g(x):
        return single_step(accel, r0, w0, v0, x - r0)[idx]

    fa = v0 if deriv else w0
    fb = v1 if deriv else w1
    if fa == 0.0:
        return r0
    if fb == 0.0:
        return r1
    guess = brentq(
        lambda x: _hermite_scalar(r0, r1, w0, w1, v0, v1, x, deriv),
        r0,
        r1,
        xtol=max(tol, 1e-3 * (r1 - r0)),
    )
    # tighten the bracket around the Hermite guess before polishing
    width = max(1e-6 * (r1 - r0), 4 * tol)
    lo, hi = max(r0, guess - width), min(r1, guess + width)
    glo = fa if lo == r0 else g(lo)
    ghi = fb if hi == r1 else g(hi)
    if glo * ghi > 0:
        lo, hi = r0, r1
    return brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


def _events(accel, rs, ws, vs, zero_tol):
    zeroes, extrema = [], []
    n = len(rs)
    for i in range(n - 1):
        w0, w1 = ws[i], ws[i + 1]
        if (w0 < 0 < w1) or (w1 < 0 < w0) or (w1 == 0.0 and w0 != 0.0 and i + 1 < n - 1):
            zeroes.append(_refine_interval(accel, rs[i], rs[i + 1], w0, w1, vs[i], vs[i + 1], False, zero_tol))
        v0, v1 = vs[i], vs[i + 1]
        if (v0 < 0 < v1) or (v1 < 0 < v0):
            re = _refine_interval(accel, rs[i], rs[i + 1], w0, w1, v0, v1, True, zero_tol)
            we = single_step(accel, rs[i], w0, v0, re - rs[i])[0] if accel else _hermite_scalar(
                rs[i], rs[i + 1], w0, w1, v0, v1, re, False
            )
            extrema.append((re, we))
    return zeroes, extrema


def start_scale(spec: ProblemSpec, d: float) -> float:
    """Intrinsic length scale of w_d near the singular endpoint."""
    return 1.0 / (math.sqrt(spec.lam) * max(1.0, abs(d)) ** ((spec.p - 1) / 2))


def effective_eps0(spec: ProblemSpec, config: IntegratorConfig, d: float) -> float:
    # large |d| shrinks the oscillation scale like |d|^{-(p-1)/2}
    return min(config.eps0, 1e-3 * start_scale(spec, d))


def _series_start(spec_h0, nl_spec, d, eps0):
    curv = -f_eval(nl_spec.nonlinearity, d) / (1.0 + spec_h0)
    return ODEState(eps0, d + 0.5 * curv * eps0 * eps0, curv * eps0)


def series_start_left(spec: ProblemSpec, d: float, eps0: float) -> ODEState:
    """Start state at r=eps0 for w(0)=d, w'(0)=0; curvature -f(d)/(1+m1)."""
    return _series_start(spec.m1, spec, d, eps0)


def series_start_right(spec: ProblemSpec, c: float, eps0: float) -> ODEState:
    """Start state at distance eps0 from pi for the reflected problem (h~(0)=m2)."""
    return _series_start(spec.m2, spec, c, eps0)


def _integrate(spec, config, d, r_end, side):
    accel = make_accel(spec)
    eps0 = effective_eps0(spec, config, d)
    st = series_start_left(spec, d, eps0)
    e0 = 0.5 * st.wp**2 + G_eval(spec.nonlinearity, st.w)
    guard = max(BLOWUP, 1e3 * (abs(d) + math.sqrt(2 * abs(e0))))
    h0 = min(config.max_step, 0.1 * eps0)
    if r_end <= eps0:
        raise ValueError(f"integration end {r_end} lies inside the series-start offset {eps0}")
    rs, ws, vs = dopri(
        accel, st.r, st.w, st.wp, r_end, config.rtol, config.atol, config.max_step, h0, guard
    )
    zeroes, extrema = _events(accel, rs, ws, vs, config.zero_tol)
    r = np.asarray(rs)
    return Trajectory(
        side=side,
        shoot_param=float(d),
        r=r,
        w=np.asarray(ws),
        wp=np.asarray(vs),
        zeroes=tuple(zeroes),
        extrema=tuple(extrema),
        end_state=ODEState(rs[-1], ws[-1], vs[-1]),
        accel=accel,
    )


def integrate_forward(
    spec: ProblemSpec, config: IntegratorConfig, d: float, r_end: Optional[float] = None
) -> Trajectory:
    """Solve w(0)=d, w'(0)=0 on [eps0, r_end] (default r_end = a0)."""
    if not math.isfinite(d):
        raise ValueError("shooting parameter must be finite")
    return _integrate(spec, config, float(d), spec.a0 if r_end is None else r_end, "forward")


def integrate_backward(
    spec: ProblemSpec, config: IntegratorConfig, c: float, r_start: Optional[float] = None
) -> Trajectory:
    """Solve w(pi)=c, w'(pi)=0 on [r_start, pi - eps0] (default r_start = a0).

    Integrates omega(s) = w(pi - s) forward with the reflected coefficient and
    maps the samples back; ``wp`` then holds w'(r) = -omega'(pi - r).
    """
    if not math.isfinite(c):
        raise ValueError("shooting parameter must be finite")
    refl = spec.reflected()
    s_end = refl.a0 if r_start is None else math.pi - r_start
    tr = _integrate(refl, config, float(c), s_end, "backward")
    r = math.pi - tr.r[::-1]
    zeroes = tuple(sorted(math.pi - z for z in tr.zeroes))
    extrema = tuple(sorted((math.pi - a, b) for a, b in tr.extrema))
    end = tr.end_state
    return Trajectory(
        side="backward",
        shoot_param=float(c),
        r=r,
        w=tr.w[::-1].copy(),
        wp=-tr.wp[::-1],
        zeroes=zeroes,
        extrema=extrema,
        end_state=ODEState(spec.a0 if r_start is None else r_start, end.w, -end.wp),
        accel=make_accel(spec),
    )


def energy_profile(spec: ProblemSpec, traj: Trajectory) -> np.ndarray:
    """E(r) = w'^2/2 + G(w) at each sample; returns an (N, 2) array of (r, E)."""
    lam, p = spec.lam, spec.p
    aw = np.abs(traj.w)
    E = 0.5 * traj.wp**2 + lam * (aw ** (p + 1) / (p + 1) - 0.5 * traj.w**2)
    return np.column_stack([traj.r, E])


def refine_zero(traj: Trajectory, bracket, zero_tol: float = 1e-12) -> float:
    """Refine a zero of w inside ``bracket`` = (a, b) to ``zero_tol``."""
    a, b = sorted(float(x) for x in bracket)
    if not (traj.r[0] <= a and b <= traj.r[-1]):
        raise BracketError(f"bracket [{a}, {b}] outside trajectory range")
    wa = float(traj.dense(a)[0])
    wb = float(traj.dense(b)[0])
    if wa == 0.0:
        return a
    if wb == 0.0:
        return b
    if wa * wb > 0:
        raise BracketError(f"no sign change of w on [{a}, {b}]")
    # first sample interval inside the bracket carrying the sign change
    knots = np.concatenate([[a], traj.r[(traj.r > a) & (traj.r < b)], [b]])
    vals, ders = traj.dense(knots)
    for i in range(len(knots) - 1):
        if vals[i] == 0.0:
            return float(knots[i])
        if vals[i] * vals[i + 1] < 0:
            return _refine_interval(
                traj.accel,
                float(knots[i]),
                float(knots[i + 1]),
                float(vals[i]),
                float(vals[i + 1]),
                float(ders[i]),
                float(ders[i + 1]),
                False,
                zero_tol,
            )
    return float(knots[-1])


def _second_derivative_stencil(r, w, wp):
    """w'' at interior knots from the quintic matching (w, w') at three knots."""
    hl = r[1:-1] - r[:-2]
    hr = r[2:] - r[1:-1]
    s = 0.5 * (hl + hr)
    a0, a1 = w[1:-1], wp[1:-1] * s
    n = len(hl)
    M = np.empty((n, 4, 4))
    rhs = np.empty((n, 4))
    for row, (x, wv, dv) in enumerate(((-hl / s, w[:-2], wp[:-2] * s), (hr / s, w[2:], wp[2:] * s))):
        M[:, 2 * row, :] = np.stack([x**2, x**3, x**4, x**5], axis=1)
        rhs[:, 2 * row] = wv - a0 - a1 * x
        M[:, 2 * row + 1, :] = np.stack([2 * x, 3 * x**2, 4 * x**3, 5 * x**4], axis=1)
        rhs[:, 2 * row + 1] = dv - a1
    coef = np.linalg.solve(M, rhs[..., None])[..., 0]
    return 2 * coef[:, 0] / s**2


def ode_defect(spec: ProblemSpec, traj: Trajectory) -> float:
    """Largest residual of the ODE evaluated with finite-difference w''.

    For each interior sample the second derivative is taken from the
    quintic interpolating (w, w') at the sample and its two neighbours, so
    the residual measures how consistent neighbouring samples are with the
    equation. Samples at the singular endpoints 0 and pi are skipped.
    """
    r, w, wp = traj.r, traj.w, traj.wp
    if len(r) < 5:
        raise ValueError("ode_defect needs at least 5 samples")
    wpp = _second_derivative_stencil(r, w, wp)
    rc, wc, vc = r[1:-1], w[1:-1], wp[1:-1]
    ok = (rc > 0) & (rc < math.pi)
    c1 = 0.5 * (spec.m1 + spec.m2)
    c0 = 0.5 * (spec.m2 - spec.m1)
    res = wpp + (c1 * np.cos(rc) - c0) / np.sin(rc) * vc + spec.lam * (
        np.sign(wc) * np.abs(wc) ** spec.p - wc
    )
    res = np.abs(res[ok])
    return float(res.max()) if res.size else 0.0


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write samples as ``r,w,wp`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["r", "w", "wp"])
        for a, b, c in zip(traj.r, traj.w, traj.wp):
            out.writerow([f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`; returns arrays (r, w, wp)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]
