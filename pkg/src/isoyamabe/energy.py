"""Energies and Yamabe values of solutions for two principal curvatures.

For ell = 2 the sphere S^n splits as R^kdim x R^m with m + kdim = n + 1 and

    E(u) = 1/2 Vol(S^{kdim-1}) Vol(S^{m-1})
           * int_0^pi |w(r)|^{p+1} sin^{kdim-1}(r/2) cos^{m-1}(r/2) dr.

The sin(r/2) exponent must equal h(0) = m1 for the weight to be the volume
density of the reduced equation, so kdim = m1 + 1 and m = m2 + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma

from .errors import UnsupportedGeometryError
from .problem import ProblemSpec


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    c_n: float
    ratio: float
    yamabe: float

    def as_dict(self) -> dict:
        return {"energy": self.energy, "c_n": self.c_n, "ratio": self.ratio, "yamabe": self.yamabe}


def sphere_volume(j: int) -> float:
    """Volume of the unit sphere S^j in R^{j+1}."""
    if j < 0:
        raise ValueError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((j + 1) / 2) / gamma((j + 1) / 2)


def c_n_value(n: int) -> float:
    """Energy of the constant solution u = 1, i.e. Vol(S^n)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return sphere_volume(n)


def yamabe_value(n: int, energy: float) -> float:
    if energy <= 0:
        raise ValueError("energy must be positive")
    return n * (n - 2) / 4.0 * energy ** (2.0 / n)


def split_dimensions(spec: ProblemSpec):
    """(m, kdim) of the O(m) x O(kdim) action realising an ell=2 spec."""
    if spec.ell != 2:
        raise UnsupportedGeometryError(
            f"energy quadrature is only available for ell=2 (got ell={spec.ell})"
        )
    return spec.m2 + 1, spec.m1 + 1


def _gauss_legendre(fun, a, b, panels, order=8):
    x, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = fun(pts).reshape(panels, order)
    return float(np.sum(half * (vals @ wts)))


def weighted_integral(fun, m1: int, m2: int, rtol=1e-9, panels=16, max_panels=2**17):
    """int_0^pi fun(r) sin^m1(r/2) cos^m2(r/2) dr by panel doubling.

    Returns (value, panels_used). Stops once two successive doublings agree
    to ``rtol`` relative.
    """

    def integrand(r):
        return fun(r) * np.sin(0.5 * r) ** m1 * np.cos(0.5 * r) ** m2

    prev = _gauss_legendre(integrand, 0.0, math.pi, panels)
    while panels < max_panels:
        panels *= 2
        cur = _gauss_legendre(integrand, 0.0, math.pi, panels)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, panels
        prev = cur
    return prev, panels


def _profile_function(profile):
    if callable(profile) and not hasattr(profile, "r"):
        return profile
    r, w, wp = profile.r, profile.w, profile.wp
    if r[0] > 0 or r[-1] < math.pi:
        raise ValueError("profile must cover [0, pi]")
    from .integrator import hermite_eval

    return lambda x: hermite_eval(r, w, wp, x)[0]


def solution_energy(
    spec: ProblemSpec,
    m: Optional[int],
    kdim: Optional[int],
    profile,
    rtol: float = 1e-9,
) -> float:
    """Energy int |u|^{p+1} of the solution on S^n built from ``profile``.

    ``profile`` is a merged trajectory on [0, pi] (interpolated by cubic
    Hermite) or a vectorised callable w(r). ``m`` and ``kdim`` default to
    the split implied by ``spec``; passing them checks consistency.
    """
    m_spec, k_spec = split_dimensions(spec)
    m = m_spec if m is None else m
    kdim = k_spec if kdim is None else kdim
    if m + kdim != spec.n + 1 or m < 2 or kdim < 2:
        raise ValueError(f"need m + kdim = n + 1 with m, kdim >= 2; got m={m}, kdim={kdim}")
    if (m, kdim) != (m_spec, k_spec):
        raise ValueError(
            f"(m, kdim)=({m}, {kdim}) inconsistent with m1={spec.m1}, m2={spec.m2}; "
            f"expected kdim = m1 + 1 and m = m2 + 1"
        )
    w = _profile_function(profile)
    q = spec.p + 1
    val, _ = weighted_integral(lambda r: np.abs(w(r)) ** q, kdim - 1, m - 1, rtol=rtol)
    return 0.5 * sphere_volume(kdim - 1) * sphere_volume(m - 1) * val


def energy_report(spec: ProblemSpec, profile) -> EnergyReport:
    e = solution_energy(spec, None, None, profile)
    cn = c_n_value(spec.n)
    return EnergyReport(e, cn, e / cn, yamabe_value(spec.n, e))
