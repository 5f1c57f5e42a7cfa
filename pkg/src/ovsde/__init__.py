"""Stochastic optimal-velocity car-following dynamics.

Deterministic stability and collision impossibility, a regularized stochastic
extension with first-passage bookkeeping, a certified collision barrier, and
a Monte Carlo harness estimating energy-escape and collision frequencies
against explicit small-noise bounds.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    VELOCITY_SUP,
    DerivedConstants,
    ModelParams,
    State,
    cutoff,
    drift,
    drift_regularized,
    hamiltonian,
    optimal_velocity,
    optimal_velocity_inverse,
    potential,
)
from .ode import (  # noqa: F401
    Region,
    Trajectory,
    TrajectoryStatus,
    classify_region,
    integrate_deterministic,
    parametrization_rhs,
    reference_curve,
    solve_strip_curve,
)
from .barrier import (  # noqa: F401
    BarrierTable,
    build_barrier,
    danger,
    danger_squared,
    drift_sign_functional,
    mollifier,
    solve_barrier_dagger,
)
from .sde import (  # noqa: F401
    PathStatus,
    SdePathConfig,
    StoppingRecord,
    check_consistency,
    effective_collision_run,
    simulate_path,
)
from .mc import SweepResult, SweepSpec, run_sweep, summarize  # noqa: F401
