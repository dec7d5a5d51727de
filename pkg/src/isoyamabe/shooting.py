"""Phase-plane maps at the matching point and their lifted angles.

I(d) = (w_d(a0), w_d'(a0)) for the forward shot and J(c) for the backward
shot. The continuous argument theta(d) of I(d) is not tracked by
continuation; instead it is reconstructed from the quadrant of I(d) and the
number n(d) of zeroes of w_d in [0, a0), using

    n(d) = -floor((theta(d) - pi/2) / pi) - 1,

which pins theta to the half-open window [pi/2 - (n+1) pi, pi/2 - n pi).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, ConsistencyError, LiftInconsistencyError, RangeError
from .integrator import IntegratorConfig, Trajectory, integrate_backward, integrate_forward
from .problem import ProblemSpec


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    radius: float
    theta: float
    zeros: int = 0
    param: float = float("nan")
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class CurveScan:
    side: str  # "R" (forward, d) or "S" (backward, c)
    params: np.ndarray
    points: tuple
    zero_counts: tuple

    @property
    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.points])

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.points])


def zero_count_from_theta(theta: float) -> int:
    """n = -floor((theta - pi/2)/pi) - 1.

    A quotient within rounding of an integer is taken as that integer, so the
    closed lower edge of each lift window maps back to its own count.
    """
    q = (theta - math.pi / 2) / math.pi
    k = round(q)
    if abs(q - k) <= 1e-12 * max(1.0, abs(q)):
        return -k - 1
    return -math.floor(q) - 1


def theta_lift(point, zero_count: int, negative: bool = False) -> float:
    """Lift the angle of ``point`` into [pi/2 - (n+1) pi, pi/2 - n pi).

    ``negative`` selects the branch used for negative shooting parameters,
    theta(-d) = theta(d) - pi: the lift is taken for -point and shifted.
    """
    x, y = float(point[0]), float(point[1])
    if x == 0.0 and y == 0.0:
        raise LiftInconsistencyError("cannot lift the angle of the origin")
    if negative:
        return theta_lift((-x, -y), zero_count) - math.pi
    alpha = math.atan2(y, x)
    if alpha == -math.pi:
        alpha = math.pi
    lo = math.pi / 2 - (zero_count + 1) * math.pi
    hi = lo + math.pi
    j = math.ceil((lo - alpha) / (2 * math.pi))
    theta = alpha + 2 * math.pi * j
    if not (lo <= theta < hi) or zero_count_from_theta(theta) != zero_count:
        # atan2 rounding right at the closed lower edge
        if abs(theta - lo) <= 4 * math.ulp(max(1.0, abs(lo))):
            return lo
        raise LiftInconsistencyError(
            f"angle {alpha:.6g} of ({x:.6g}, {y:.6g}) is incompatible with "
            f"{zero_count} zeroes before the matching point"
        )
    return theta


def _snap(x, y, tol):
    # a zero within tol of a0 belongs to [a0, pi)
    return (0.0, y) if abs(x) <= tol * abs(y) else (x, y)


def _count_before(zeroes, a0, tol):
    return sum(1 for z in zeroes if z < a0 - tol)


def I_map(spec: ProblemSpec, config: IntegratorConfig, d: float, keep: bool = False) -> PhasePoint:
    """End state of the forward shot with its lifted angle theta(d)."""
    if d == 0:
        raise ValueError("I_map requires d != 0")
    tr = integrate_forward(spec, config, d)
    x, y = tr.end_state.w, tr.end_state.wp
    n = _count_before(tr.zeroes, spec.a0, config.zero_tol)
    sx, sy = _snap(x, y, config.zero_tol)
    theta = theta_lift((sx, sy), n, negative=d < 0)
    return PhasePoint(x, y, math.hypot(x, y), theta, n, float(d), tr if keep else None)


def J_map(spec: ProblemSpec, config: IntegratorConfig, c: float, keep: bool = False) -> PhasePoint:
    """End state of the backward shot; vartheta(c) = -(lift on the reflected problem)."""
    if c == 0:
        raise ValueError("J_map requires c != 0")
    tr = integrate_backward(spec, config, c)
    x, y = tr.end_state.w, tr.end_state.wp
    # zeroes of omega in [0, pi - a0) are zeroes of w~ in (a0, pi]
    n = sum(1 for z in tr.zeroes if z > spec.a0 + config.zero_tol)
    sx, sy = _snap(x, -y, config.zero_tol)
    theta_refl = theta_lift((sx, sy), n, negative=c < 0)
    return PhasePoint(x, y, math.hypot(x, y), -theta_refl, n, float(c), tr if keep else None)


def zero_count_right(spec: ProblemSpec, config: IntegratorConfig, c: float) -> int:
    """Zeroes of w~_c in (a0, pi), cross-checked against the angle formula."""
    pt = J_map(spec, config, c)
    direct = pt.zeros
    theta = -pt.theta if c > 0 else math.pi - pt.theta
    via_formula = zero_count_from_theta(theta)
    if direct != via_formula:
        raise ConsistencyError(
            f"zero count {direct} disagrees with angle formula {via_formula} at c={c}"
        )
    return direct


def _eval(spec, config, side, param):
    return I_map(spec, config, param) if side == "R" else J_map(spec, config, param)


def scan_curve(
    spec: ProblemSpec,
    config: IntegratorConfig,
    side: str,
    param_grid: Sequence[float],
    max_samples: int = 4000,
    executor=None,
) -> CurveScan:
    """Sample R(d) = (theta, |I|) or S(c) = (vartheta, |J|) on ``param_grid``.

    The grid is bisected wherever consecutive angles differ by pi/2 or more,
    so that the polyline follows the continuous curve. ``executor`` (any
    object with an ordered ``map``) may be used to fan out evaluations.
    """
    if side not in ("R", "S"):
        raise ValueError("side must be 'R' or 'S'")
    grid = [float(g) for g in param_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("parameter grid must be non-empty and increasing")
    mapper = executor.map if executor is not None else map
    pts = list(mapper(_eval_packed, [(spec, config, side, g) for g in grid]))
    while True:
        bad = [
            i
            for i in range(len(pts) - 1)
            if abs(pts[i + 1].theta - pts[i].theta) >= math.pi / 2
        ]
        if not bad:
            break
        if len(pts) + len(bad) > max_samples:
            raise BudgetError(
                f"scan of side {side} needs more than {max_samples} samples "
                f"to resolve the angle up to parameter {grid[-1]:.6g}"
            )
        mids = [0.5 * (grid[i] + grid[i + 1]) for i in bad]
        new = list(mapper(_eval_packed, [(spec, config, side, g) for g in mids]))
        for k, i in enumerate(reversed(bad)):
            j = len(bad) - 1 - k
            grid.insert(i + 1, mids[j])
            pts.insert(i + 1, new[j])
    return CurveScan(side, np.array(grid), tuple(pts), tuple(p.zeros for p in pts))


def _eval_packed(args):
    return _eval(*args)


def geometric_grid(start: float, stop: float, num: int) -> np.ndarray:
    return np.geomspace(start, stop, num)


def exit_times(
    spec: ProblemSpec,
    config: IntegratorConfig,
    scan: CurveScan,
    count: int,
    tol: float = 1e-12,
):
    """Exit times d_i = max{d >= 1 : theta(d) = -i pi}, i = 0..count.

    For side S the targets are +j pi. The last grid bracket crossing each
    target is refined by bisection on the parameter. Returns the parameters
    and the radii |I(d_i)| (or |J(c_j)|).
    """
    sign = -1.0 if scan.side == "R" else 1.0
    th = scan.thetas
    params = scan.params
    times, radii = [], []
    for i in range(count + 1):
        target = sign * i * math.pi
        g = sign * (th - target)  # > 0 once the curve has passed the target
        # last index where the curve is still on the near side of the target
        idx = None
        for j in range(len(g) - 1, -1, -1):
            if g[j] <= 0:
                idx = j
                break
        if idx is None or idx == len(g) - 1:
            raise RangeError(
                f"angle {target:.6g} not exited within parameter range "
                f"[{params[0]:.6g}, {params[-1]:.6g}]; widen the scan"
            )
        if g[idx] == 0:
            times.append(float(params[idx]))
            radii.append(scan.points[idx].radius)
            continue
        lo, hi = float(params[idx]), float(params[idx + 1])
        pt_hi = scan.points[idx + 1]
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            pt = _eval(spec, config, scan.side, mid)
            if sign * (pt.theta - target) <= 0:
                lo = mid
            else:
                hi, pt_hi = mid, pt
        times.append(hi)
        radii.append(pt_hi.radius)
    return np.array(times), np.array(radii)


def is_monotone(seq) -> bool:
    a = np.asarray(seq, dtype=float)
    dif = np.diff(a)
    return bool(np.all(dif > 0) or np.all(dif < 0)) if dif.size else True


def write_scan_csv(scan: CurveScan, path) -> None:
    """Write ``param,x,y,radius,theta,zeros`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["param", "x", "y", "radius", "theta", "zeros"])
        for prm, pt in zip(scan.params, scan.points):
            out.writerow(
                [f"{prm:.17g}", f"{pt.x:.17g}", f"{pt.y:.17g}", f"{pt.radius:.17g}", f"{pt.theta:.17g}", pt.zeros]
            )
