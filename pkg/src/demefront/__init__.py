"""Front propagation lab for lattice branching walks with on-site competition.

The package simulates a discrete-time particle system on dx * Z --
duplication at a space-time dependent rate, per-site truncation at a
capacity K, Gaussian-cell migration -- together with the analytic objects
its front obeys in various limits: the displacement law's Chernoff rate
function and speed roots, the limiting trajectory x' = sqrt(2 r), and a
Fisher-KPP reference solver.  Monotone couplings, rebooted minorants and
stopping-time observers come along as testable constructions.
"""

from .environment import (
    Environment,
    constant_environment,
    lipschitz_constant,
    periodic_plateaus,
    smooth_environment,
    validate,
)
from .steplaw import (
    RateFunction,
    StepLaw,
    build_step_law,
    check_rate_bounds,
    gaussian_log_mgf,
    gaussian_rate,
    gaussian_speed,
    speed_root_sensitivity,
)
from .offspring import (
    OffspringFamily,
    bernoulli_duplication,
    check_assumptions,
    custom_family,
    sample_site_offspring,
    sample_untruncated,
    site_offspring_pmf,
)
from .engine import (
    EngineConfig,
    FrontTrace,
    PopulationState,
    branching_population_overflow,
    estimate_speed,
    initial_filled_left,
    initial_single,
    observe_stopping,
    run,
    run_coupled_pair,
    run_population,
    run_rebooted,
    step_generation,
)
from .ode import (
    OdeSolution,
    check_stability,
    euler_error_bound,
    periodic_limit_speed_empirical,
    perturbation_bound,
    solve_euler,
)
from .pde import PdeState, front_position, make_front_state, run_pde, step_pde
from .speeds import SpeedReport, c_ode, c_star0, quadratic_mean_speed, speed_report

__version__ = "0.1.0"
