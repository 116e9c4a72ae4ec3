"""Simulator and verification harness for a coupled heat / colour-fraction /
phase-field system with Arrhenius kinetics.

The library half evaluates the model's closed forms (rates, potential,
conductivity, comparison bounds, coupling threshold), integrates the coupled
system on zero-flux rectangular grids, and tracks a relative energy around
homogeneous equilibria.  The verification half turns each certified bound
(temperature floor and ceiling, [0,1] confinement, rate bounds, conservation,
exponential energy decay) into a runnable check with explicit margins.
"""

from .equilibrium import (
    DegenerateEquilibriumError,
    EquilibriumState,
    PhaseRoot,
    PhaseRootError,
    build_equilibrium,
    equilibrium_fraction,
    phase_roots,
)
from .grid import (
    Field,
    Grid,
    State,
    div_k_grad,
    gradient_sq_integral,
    integrate,
    laplacian_neumann,
    mean,
    poincare_constant,
    read_field,
    write_field,
)
from .model import (
    CONDUCTIVITY_LAWS,
    ModelParams,
    PositivityError,
    SourceSpec,
    conductivity,
    coupling_threshold,
    decolour_rate,
    double_well,
    double_well_curvature,
    double_well_deriv,
    positivity_horizon,
    reaction_rate,
    recolour_rate,
    temperature_ceiling,
    temperature_floor,
)
from .solver import (
    SCHEME_EXPLICIT,
    SCHEME_IMEX,
    CflError,
    LinearSolveError,
    PositivityLossError,
    StepControls,
    Trajectory,
    cfl_limits,
    conserved_quantity,
    run,
    step,
    write_diagnostics_csv,
)
from .stability import (
    CoercivityReport,
    DecayFit,
    EnergyFitError,
    EnergyReport,
    PerturbationState,
    check_coercivity,
    decay_ingredients,
    fit_decay_rate,
    reaction_lipschitz_bound,
    relative_energy,
    residual_potential,
    residual_potential_bounds,
)
from .verification import (
    CheckReport,
    OdeSeries,
    compare_pde_vs_ode,
    convergence_study,
    format_report,
    ode_oracle,
    trajectory_checks,
    validate_hypotheses,
    write_reports,
)

__version__ = "0.1.0"
