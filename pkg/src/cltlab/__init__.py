"""Central limit behaviour of observables on finite-alphabet Markov shifts.

The package has three layers:

* operator side -- cylinder functions, Koopman/transfer operators,
  conditional expectations, and two martingale constructions (backward via
  the Poisson equation, forward via innovation increments) that each yield
  the long-run variance;
* checkers -- hypothesis checks that classify a (chain, observable) pair
  as satisfying or violating the conditions behind the limit theorems;
* simulation -- Monte Carlo Birkhoff sums tested against the predicted
  normal law.

The batch front ends live in :mod:`cltlab.experiment` and :mod:`cltlab.cli`
and are not imported here, so ``import cltlab`` stays light.
"""

from .backward import (
    DEFAULT_LAMBDA_GRID,
    Decomposition,
    PoissonSolution,
    SeriesVariance,
    check_backward_clt_conditions,
    check_past_approximation,
    decompose,
    detect_coboundary,
    projected_transfer,
    sigma2_lambda,
    sigma2_lambda_diagnostics,
    sigma2_series,
    solve_poisson,
)
from .conditions import (
    FAIL,
    INDETERMINATE,
    PASS,
    ConditionEntry,
    ConditionReport,
    decay_verdict,
)
from .config import ExperimentConfig, load_config, parse_config
from .cylinder import (
    MAX_TABLE_ENTRIES,
    CylinderFunction,
    adjoint,
    autocovariances,
    combine,
    conditional,
    constant,
    cross_covariances,
    evaluate,
    expectation,
    format_observable,
    indicator,
    inner_product,
    koopman,
    koopman_inverse,
    koopman_power,
    l2_norm,
    lift,
    parse_observable,
    project_innovation,
    rademacher,
    scale,
    shift_window,
    sup_norm,
    transfer,
    word_weights,
)
from .errors import (
    CapExceeded,
    CltLabError,
    ConfigError,
    DegenerateSigma,
    Diverging,
    InvalidIndex,
    NonSummable,
    NotStochastic,
    Reducible,
    SidednessMismatch,
    WindowMismatch,
)
from .forward import (
    ForwardApproximant,
    approximation_defect,
    check_forward_clt_conditions,
    increment,
    martingale_approximant,
    variance_profile,
)
from .montecarlo import (
    CONSISTENT,
    DEGENERATE,
    INCONSISTENT,
    CltReport,
    cf_diagnostic,
    ks_statistic,
    moment_summary,
    orbit_average,
    remainder_probability,
    simulate_birkhoff,
    verdict,
)
from .presets import PRESETS, Preset, describe_presets, get_preset
from .shift import (
    ONE_SIDED,
    TWO_SIDED,
    OrbitSample,
    TransitionModel,
    build_shift,
    classify,
    orbit_stream,
    sample_orbit,
    stationary_distribution,
    with_sidedness,
)

__version__ = "0.1.0"
