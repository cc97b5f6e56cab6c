"""1D compressible Navier-Stokes in Lagrangian mass coordinates.

Constant viscosity, temperature-degenerate heat conduction, an outer
pressure held at the wall, and a truncated far field pinned to the
constant state.  The package pairs the solver with diagnostics for the
structures that govern the long-time behaviour: the energy-dissipation
balance, entropy-based point bounds, a multiplicative representation of
the volume along particle paths, and norm decay.
"""

from .core import (ConfigError, DomainError, Grid, ICSpec, Params, State,
                   Violation, build_grid, equilibrium_state,
                   make_initial_data, validate_state)
from .diagnostics import (BoundsRecord, EnergyRecord, JensenBand,
                          decay_report, dissipation_functional,
                          energy_functional, entropy_roots, make_repr_probe,
                          reconstruct_v, sample_bounds, sample_energy,
                          unit_interval_averages, update_repr_probe)
from .harness import (RunConfig, RunReport, acceptance_suite, default_config,
                      load_config, mms_convergence, run_simulation, sweep,
                      write_config, write_series, write_snapshot)
from .model import (MmsProfile, boundary_stress, cell_strain_and_stress,
                    conductivity, face_heat_flux, mms_source, pressure, rhs)
from .stepper import (PositivityViolation, StepControl, StepFailure, TriDiag,
                      advance, solve_tridiagonal, stable_dt, step_imex)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "Grid", "ICSpec", "Params", "State",
    "Violation", "build_grid", "equilibrium_state", "make_initial_data",
    "validate_state",
    "BoundsRecord", "EnergyRecord", "JensenBand", "decay_report",
    "dissipation_functional", "energy_functional", "entropy_roots",
    "make_repr_probe", "reconstruct_v", "sample_bounds", "sample_energy",
    "unit_interval_averages", "update_repr_probe",
    "RunConfig", "RunReport", "acceptance_suite", "default_config",
    "load_config", "mms_convergence", "run_simulation", "sweep",
    "write_config", "write_series", "write_snapshot",
    "MmsProfile", "boundary_stress", "cell_strain_and_stress",
    "conductivity", "face_heat_flux", "mms_source", "pressure", "rhs",
    "PositivityViolation", "StepControl", "StepFailure", "TriDiag",
    "advance", "solve_tridiagonal", "stable_dt", "step_imex",
    "__version__",
]
