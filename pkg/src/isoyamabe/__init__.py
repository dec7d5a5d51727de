"""Nodal solutions of the isoparametric reduction of the Yamabe equation on spheres."""

from __future__ import annotations

__version__ = "0.1.0"

from .energy import EnergyReport, c_n_value, solution_energy, sphere_volume, yamabe_value
from .errors import (
    BudgetError,
    IntegrationError,
    InvalidSpecError,
    IsoYamabeError,
    NotFoundError,
    UnsupportedGeometryError,
)
from .integrator import IntegratorConfig, Trajectory, integrate_backward, integrate_forward, ode_defect
from .limit import LimitConfig, convergence_gap, rescale_z, solve_limit, subcritical_check, zero_growth_check
from .matcher import NodalSolution, find_nodal
from .problem import Nonlinearity, ProblemSpec, make_problem
from .shooting import I_map, J_map, exit_times, scan_curve, theta_lift

__all__ = [
    "BudgetError",
    "EnergyReport",
    "IntegrationError",
    "IntegratorConfig",
    "InvalidSpecError",
    "IsoYamabeError",
    "I_map",
    "J_map",
    "LimitConfig",
    "NodalSolution",
    "Nonlinearity",
    "NotFoundError",
    "ProblemSpec",
    "Trajectory",
    "UnsupportedGeometryError",
    "c_n_value",
    "convergence_gap",
    "exit_times",
    "find_nodal",
    "integrate_backward",
    "integrate_forward",
    "make_problem",
    "ode_defect",
    "rescale_z",
    "scan_curve",
    "solution_energy",
    "solve_limit",
    "sphere_volume",
    "subcritical_check",
    "theta_lift",
    "yamabe_value",
    "zero_growth_check",
]
