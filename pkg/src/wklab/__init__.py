"""Numerical weak KAM laboratory on flat tori.

Classic and windowed Lax-Oleinik operators built from discrete minimal
action kernels, Peierls barriers, Aubry sets and backward weak KAM
verification, with a benchmark harness for convergence rates.
"""

from .action import (
    ActionKernel,
    BarrierTable,
    KernelFamily,
    action_potential,
    compose,
    identity_kernel,
    kernel_family,
    min_action,
    minplus,
    one_step_kernel,
    peierls_barrier,
)
from .grid import (
    ConfigurationError,
    GridMismatchError,
    PeriodicGrid,
    ValueField,
    make_grid,
    random_field,
    sup_distance,
    torus_distance,
)
from .models import (
    GOLDEN,
    Integrable,
    Mechanical,
    PeriodicDrift,
    QuadraticShift,
    build_model,
    golden_direction,
)
from .operators import (
    EvolutionState,
    estimate_critical_value,
    evolve,
    fixed_point,
    lo_step,
    make_state,
    window_min_autonomous,
    window_min_autonomous_rows,
    window_min_periodic,
    window_min_periodic_rows,
)
from .weakkam import (
    SpaceTimeField,
    aubry_set,
    check_domination,
    extract_calibrated_curve,
    space_time_field,
    verify_field,
    weak_kam_from_trace,
)

__version__ = "0.1.0"
