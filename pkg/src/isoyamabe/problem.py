"""Isoparametric data and the coefficient functions of the reduced ODE.

The reduced equation on [0, pi] reads

    w'' + h(r)/sin(r) w' + f(w) = 0,   f(w) = lam (|w|^(p-1) w - w),

with h(r) = (m1+m2)/2 cos r - (m2-m1)/2, lam = n(n-2)/(4 ell^2) and
p = (n+2)/(n-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidSpecError

ALLOWED_ELL = (1, 2, 3, 4, 6)

# Multiplicity pairs realised by known isoparametric families. Under
# ``strict`` only ell=3 is enforced; the ell=6 entry is informational and
# ell=4 is checked against the Munzner relation alone.
STRICT_ELL = (3,)
KNOWN_FAMILIES = {
    3: {(1, 1), (2, 2), (4, 4), (8, 8)},
    6: {(1, 1), (2, 2)},
}


@dataclass(frozen=True)
class Nonlinearity:
    lam: float
    p: float

    def __call__(self, w):
        return f_eval(self, w)


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    ell: int
    m1: int
    m2: int
    lam: float = field(init=False)
    p: float = field(init=False)
    a0: float = field(init=False)

    def __post_init__(self):
        n = self.n
        object.__setattr__(self, "lam", n * (n - 2) / (4.0 * self.ell**2))
        object.__setattr__(self, "p", (n + 2) / (n - 2))
        object.__setattr__(
            self, "a0", math.acos((self.m2 - self.m1) / (self.m1 + self.m2))
        )

    @property
    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.lam, self.p)

    @property
    def nodal(self) -> bool:
        """True when sign-changing solutions are expected (m1, m2 < n-1)."""
        return self.m1 < self.n - 1 and self.m2 < self.n - 1

    def reflected(self) -> "ProblemSpec":
        """Spec whose h is h~(r) = -h(pi - r), i.e. m1 and m2 interchanged."""
        return ProblemSpec(self.n, self.ell, self.m2, self.m1)

    def as_dict(self) -> dict:
        return {"n": self.n, "ell": self.ell, "m1": self.m1, "m2": self.m2}


def make_problem(n: int, ell: int, m1: int, m2: int, strict: bool = False) -> ProblemSpec:
    """Validate isoparametric data and build a :class:`ProblemSpec`.

    Raises InvalidSpecError naming the first violated constraint. With
    ``strict`` the ell=3 families are also checked against the classical
    list of realised multiplicities.
    """
    for name, val in (("n", n), ("ell", ell), ("m1", m1), ("m2", m2)):
        if int(val) != val:
            raise InvalidSpecError(f"{name} must be an integer, got {val!r}")
    n, ell, m1, m2 = int(n), int(ell), int(m1), int(m2)
    if n < 3:
        raise InvalidSpecError(f"dimension n must be >= 3, got n={n}")
    if ell not in ALLOWED_ELL:
        raise InvalidSpecError(
            f"number of principal curvatures ell must be one of {ALLOWED_ELL}, got {ell}"
        )
    if m1 < 1 or m2 < 1:
        raise InvalidSpecError(f"multiplicities must be >= 1, got m1={m1}, m2={m2}")
    if ell % 2 == 1 and m1 != m2:
        raise InvalidSpecError(
            f"odd ell requires equal multiplicities (m1 == m2), got m1={m1}, m2={m2}"
        )
    if ell * (m1 + m2) != 2 * (n - 1):
        raise InvalidSpecError(
            f"Munzner relation ell*(m1+m2) = 2(n-1) violated: "
            f"{ell}*({m1}+{m2}) = {ell * (m1 + m2)} != {2 * (n - 1)}"
        )
    if strict and ell in STRICT_ELL and (m1, m2) not in KNOWN_FAMILIES[ell]:
        raise InvalidSpecError(
            f"strict geometry: (m1, m2)=({m1}, {m2}) is not a known family for ell={ell}"
        )
    return ProblemSpec(n, ell, m1, m2)


def h_eval(spec: ProblemSpec, r):
    return 0.5 * (spec.m1 + spec.m2) * math.cos(r) - 0.5 * (spec.m2 - spec.m1)


def h_tilde_eval(spec: ProblemSpec, r):
    return 0.5 * (spec.m1 + spec.m2) * math.cos(r) + 0.5 * (spec.m2 - spec.m1)


def f_eval(nl: Nonlinearity, w):
    # sign(w)|w|^p keeps the power real for non-integer p
    return nl.lam * (math.copysign(abs(w) ** nl.p, w) - w)


def G_eval(nl: Nonlinearity, t):
    """Potential with G' = f and G(0) = 0."""
    at = abs(t)
    return nl.lam * (at ** (nl.p + 1) / (nl.p + 1) - 0.5 * t * t)
