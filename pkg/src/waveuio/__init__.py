"""Unknown-input observer toolkit for coupled semilinear wave systems.

Synthesizes observers whose error dynamics are decoupled from an unknown
input, certifies asymptotic stability and H-infinity attenuation through
eigenvalue tests on block matrices, and co-simulates plant and observer
with a method-of-lines solver to verify error decay and attenuation
empirically.
"""

__version__ = "0.1.0"

from .model import (Certificate, ControlSpec, DisturbanceSpec, InitialData,
                    NonlinearitySpec, ObserverSpec, SystemSpec,
                    ValidationReport, eval_disturbance, eval_nonlinearity,
                    load_system, save_system, validate_system)
from .synthesis import (ResidualReport, SynthesisInfeasible,
                        SynthesisSolution, derive_observer_initial,
                        left_nullspace, load_observer, save_observer,
                        solve_scalar_m, verify_equations)
from .certificates import (CertificateReport, CertificateSearchResult,
                           check_hinf, check_stability, delta_bound,
                           hinf_block, load_certificate, save_certificate,
                           search_certificate, stability_block,
                           sym_eig_bounds)
from .wavesim import (DivergenceError, GridConfig, SimResult, SimState,
                      hinf_ratio, lyapunov_energy, observer_rhs, plant_rhs,
                      rk4_step, sandwich_constants, simulate,
                      trapezoid_integral, write_series_csv,
                      write_snapshots_csv)
from .scenarios import (BUILTIN_SCENARIOS, Scenario, benchmark_certificate,
                        benchmark_control, benchmark_disturbance,
                        benchmark_observer, benchmark_system,
                        builtin_scenario, load_scenario)

__all__ = [name for name in dir() if not name.startswith("_")]
