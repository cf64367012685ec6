"""Numerical laboratory for renormalization of critical circle maps.

Constructs analytic one-parameter circle-map families with a single critical
point of arbitrary exponent alpha > 1, computes rotation numbers through
closest returns, runs the commuting-pair renormalization operator, and
measures the universality, convergence, and rigidity phenomena attached to
it: parameter-window scaling rates, exponential contraction of pair
distances, and decay of adjacent-atom ratio discrepancies.
"""

from .errors import (
    BudgetError,
    CCRenormError,
    CombinatoricsError,
    ContractError,
    DegenerateError,
    DomainError,
    NotRenormalizableError,
    PrecisionError,
    RangeError,
    SolverError,
)
from .maps import (
    CircleMapLift,
    CriticalCircleFamily,
    RigidRotationFamily,
    RigidRotationLift,
    build_family,
    eval_derivative,
    eval_iterate,
    eval_lift,
)
from .partitions import (
    DynamicalPartition,
    PartitionAtom,
    RigidityReport,
    conjugacy_ratio_test,
    dynamical_partition,
)
from .renorm import (
    CommutingPair,
    Height,
    PairDistance,
    height,
    pair_distance,
    pair_from_map,
    renorm_tower,
    renormalize,
)
from .rotation import (
    INF,
    ContinuedFraction,
    ParameterWindow,
    RotationNumber,
    SuperstableParameter,
    cf_window,
    closest_returns,
    convergents,
    irrational_parameter,
    rotation_number,
    superstable_parameter,
)
from .experiments import (
    ConvergenceReport,
    UniversalityReport,
    closest_return_scaling,
    default_depth,
    estimate_convergence,
    estimate_delta,
    hyperbolicity_probe,
)

__version__ = "0.1.0"
