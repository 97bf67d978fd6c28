"""Transition-graph energies for constant-step-size SGD on non-convex
landscapes, with Monte Carlo validation of the exponential hitting-time
scaling exp(E / eta)."""

__version__ = "0.1.0"

from .energy import (
    EnergyReport,
    Pruning,
    TransitionForest,
    bottleneck_bound,
    energy,
    energy_from_point,
    energy_report,
    has_spurious_minima,
    neighbor_graph,
    pruned_energy,
    relative_energy,
)
from .graph import (
    TransitionGraph,
    build_graph,
    build_graph_numeric,
    chain_closure,
    interpretable_bounds,
)
from .landscape import (
    CriticalPoint,
    CriticalPointSet,
    Kind,
    Objective,
    SaddleConnection,
    basin_of,
    builtin_names,
    find_critical_points,
    from_polynomial,
    get_objective,
    saddle_connections,
)
from .ldp import (
    DiscretePath,
    action,
    certify_truncated_gaussian,
    conjugate,
    hamiltonian,
    lagrangian,
    minimize_action,
    potential_transform,
)
from .noise import (
    FiniteSupport,
    IsotropicGaussian,
    StateDependentGaussian,
    TruncatedGaussian,
)
from .polynomials import Polynomial
from .simulate import (
    HittingTimeSample,
    SgdConfig,
    check_attracting_strength,
    monte_carlo,
    run_to_hit,
    sgd_step,
    subsampled_trace,
)
from .stats import (
    RegressionFit,
    Verdict,
    compare_report,
    fit_loglinear,
    summarize,
)
