"""Spectral solver and estimate harness for the nonlinear Schrödinger equation
on the strip R x [0, 1] with inhomogeneous Dirichlet wall data."""
from .spectral import (BoundaryData, ContractViolation, Grid, PhysicalField, SpectralField,
                       Trajectory, WindowSpec, to_physical, to_spectral)
from .operators import Propagator, apply_W0, apply_Wb, boundary_trace, duhamel
from .solver import Scenario, SolveReport, WindowTooLarge, detect_blowup, march, picard_window
from .fd_oracle import FdGrid, cn_solve, compare
from .diagnostics import balance_report, energy_balance, mass_balance, trace_inequality_margin
from .estimates import EstimateConfig, dependence_probe, sharpness_probe

__version__ = "0.1.0"

__all__ = [
    "BoundaryData", "ContractViolation", "EstimateConfig", "FdGrid", "Grid", "PhysicalField",
    "Propagator", "Scenario", "SolveReport", "SpectralField", "Trajectory", "WindowSpec",
    "WindowTooLarge", "apply_W0", "apply_Wb", "balance_report", "boundary_trace", "cn_solve",
    "compare", "dependence_probe", "detect_blowup", "duhamel", "energy_balance", "march",
    "mass_balance", "picard_window", "sharpness_probe", "to_physical", "to_spectral",
    "trace_inequality_margin",
]
