"""blisterlab: energy scaling of blistering thin films on compliant substrates."""

from .core import (AdmissibilityError, BondedSet1D, BondedSet2D, EnergyBreakdown, Field2D,
                   GeometryError, Params, Profile1D, QuadratureError, measure, quad_piecewise)
from .energy import QuadSpec, energy_1d, energy_2d, h_half_norm_sq
from .construct1d import (bounds_1d, flat_profile, optimal_length, optimal_periodic_array,
                          periodic_array, single_blister)
from .construct2d import assemble_lattice, bounds_2d, lattice_energy
from .minimize import MinimizeOptions, MinimizeResult, best_over_blister_count, minimize_profile
from .scaling import (REFERENCE_CONSTANTS, FitResult, InsufficientDataError, PhasePoint,
                      SweepSpec, calibrate_constants, classify_phase, fit_exponent, sweep)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "BondedSet1D", "BondedSet2D", "EnergyBreakdown", "Field2D",
    "FitResult", "GeometryError", "InsufficientDataError", "MinimizeOptions", "MinimizeResult",
    "Params", "PhasePoint", "Profile1D", "QuadratureError", "QuadSpec", "REFERENCE_CONSTANTS",
    "SweepSpec", "assemble_lattice", "best_over_blister_count", "bounds_1d", "bounds_2d",
    "calibrate_constants", "classify_phase", "energy_1d", "energy_2d", "fit_exponent",
    "flat_profile", "h_half_norm_sq", "lattice_energy", "measure", "minimize_profile",
    "optimal_length", "optimal_periodic_array", "periodic_array", "quad_piecewise",
    "single_blister", "sweep", "__version__",
]
