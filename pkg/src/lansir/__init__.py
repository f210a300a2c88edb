"""Coupled attrition / malware-epidemic conflict simulator.

Two symmetric forces fight kinetically while self-replicating malware
spreads through their elements; the package integrates the regularized
eight-compartment system with timed events, reduces runs to scalar
observables, and analyzes knowledge-constrained random scenario ensembles
(risk, scenario classes, class-change comparisons) reproducibly.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    DEFAULT_T_KIN,
    ForceConfig,
    ForceParams,
    ForceState,
    Scenario,
    TimingParams,
    barrier,
    build_schedule,
    damped_power,
    rhs,
)
from .integrator import (  # noqa: F401
    NumericalFailureError,
    RunOutcome,
    SimConfig,
    run,
    run_reference,
    validate_cross,
)
from .observables import ObservableSet, observe  # noqa: F401
from .design import (  # noqa: F401
    EPS_WIN,
    ParameterDomain,
    apply_transformation,
    classify_kinetic,
    sample_scenario,
    substream,
)
from .stats import (  # noqa: F401
    BiasMonitor,
    ComparisonStats,
    Histogram,
    RunningMoments,
    SummaryStats,
    compare,
    histogram,
    monitor_bias,
    summarize,
)
from .campaign import (  # noqa: F401
    CampaignConfig,
    CampaignResult,
    run_campaign,
    run_sweep,
)
