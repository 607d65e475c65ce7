"""Approximate wave equations by minimizing exponentially weighted space-time functionals."""

from .diagnostics import (
    ApproxEnergyTrace,
    AprioriReport,
    CheckResult,
    Comparison,
    EnergyTrace,
    apriori_checks,
    approx_energy_trace,
    avg_op,
    avg_op2,
    avg_tail_bound,
    check_energy_inequality,
    check_F_monotone,
    compare,
    convergence_slope,
    energy_trace,
    initial_energy,
    uniformity,
)
from .energy import (
    CosinePotential,
    DerivPower,
    DissipationSpec,
    EnergySpec,
    KirchhoffQuartic,
    Preset,
    SobolevQuadratic,
    eval_dissipation,
    eval_energy,
    grad_dissipation,
    grad_energy,
    preset,
    registry,
)
from .errors import (
    ConditioningError,
    ConfigError,
    GridMismatchError,
    InstabilityError,
    InvalidTermError,
    NonFiniteError,
    NotConvergedError,
    UnknownPresetError,
    UnsupportedOperationError,
    WideError,
    WindowError,
)
from .functional import (
    ConstraintSet,
    ELResidual,
    ProblemSpec,
    SpaceTimeField,
    TimeGrid,
    WeightedFunctional,
    competitor,
    el_residual,
    eval_functional,
    eval_rescaled,
    grad_functional,
    precondition,
    rescaled_value,
)
from .grid import (
    SpatialField,
    SpatialGrid,
    SpectralField,
    diff,
    fractional_laplacian,
    l2_inner,
    neg_sobolev_norm,
    sobolev_seminorm_sq,
)
from .optimize import SolveOptions, SolveStats, SweepEntry, SweepPlan, minimize, sweep
from .reference import Trajectory, exact_mode, leapfrog, modal_trajectory, mode_solution

__version__ = "0.1.0"
