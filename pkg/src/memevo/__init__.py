"""memevo: a second-order evolution equation with fading memory, solved in
three provably equivalent formulations.

* direct: a Volterra integro-differential equation driven by a sampled
  state function,
* history: the solution plus the running history difference, evolved by a
  right-translation semigroup,
* state: the solution plus a minimal state field, evolved by a
  left-translation semigroup.

The package verifies the structural identities connecting the three, the
energy law and Lyapunov decay estimates of the state formulation, and a
gallery of worked counterexamples.
"""

from ._accel import backend
from .kernel import (
    Kernel,
    KernelError,
    KernelSpec,
    build_kernel,
    check_decay_conditions,
    load_tabulated_csv,
)
from .spectral import (
    Grid,
    ModalOperator,
    WeightedField,
    build_operator,
    extended_norm,
    midpoint_grid,
    node_grid,
    norm,
    weighted_norm,
)
from .trajectory import Trajectory, write_energy_csv, write_trajectory_csv
from .volterra import InitialState, cfl_limit, solve_direct
from .history import (
    ExtendedHistoryVector,
    evolve_history,
    history_grid,
    history_source_samples,
    init_history,
)
from .state import (
    ExtendedStateVector,
    energy_rate,
    evolve_state,
    minimality_check,
    nu_at_origin,
    state_grid,
)
from .maps import (
    PastHistory,
    ProperState,
    StateFunction,
    classify_limit_behavior,
    gamma_map,
    lambda_map,
    pi_map,
    proper_initial_state,
    zeta_from_xi,
)
from .stability import (
    DecayReport,
    InequalityReport,
    StabilityConfig,
    decay_study,
    fit_decay_rate,
    functionals,
    proof_constants,
    verify_inequalities,
)

__version__ = "1.0.0"
