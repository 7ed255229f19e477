"""Shared-buffer switch simulator and fluid-model analyzer.

A packet-level discrete-event simulator of one shared-memory switch under
pluggable admission policies (Complete Sharing, Dynamic Thresholds, FB and
its DT-based approximation FBA), plus exact closed-form steady-state and
transient analysis of the same policies with an independent ODE integrator
for cross-validation.
"""

from .core import (
    BufferSnapshot,
    CapacityError,
    PriorityGroup,
    QueueId,
    TrafficClass,
    UnitsConvention,
    derive_aggregates,
    priority_groups,
)
from .engine import EventTrace, SwitchState, run
from .fluid import (
    INFEASIBLE,
    UNCONSTRAINED,
    AnalysisResult,
    CaseKind,
    NewQueue,
    OldQueue,
    OmegaVector,
    TransientScenario,
    alpha_H_for_burst,
    alpha_L_for_burst,
    alpha_L_for_zero_transient,
    alpha_bounds_general,
    analyze_transient,
    burst_absorption_curve,
    burst_tolerance,
    classify_case,
    first_threshold_crossing,
    integrate_first_crossing,
    integrate_transient,
    multi_priority_alpha_H,
    occupancy_bound,
    steady_state,
    t1_case1,
    t1_case2,
    two_priority_incast,
)
from .metrics import RunMetrics, compare, compute
from .policies import (
    AdmissionDecision,
    AlphaTable,
    Policy,
    PolicyKind,
    admit,
    dt_threshold,
    fb_single_queue_threshold,
    fb_threshold,
    fba_recompute_alphas,
)
from .workloads import (
    Burst,
    ConstantRate,
    PoissonFlows,
    ScenarioConfig,
    build_sources,
    dump_scenario,
    load_scenario,
    preset,
    preset_names,
    steady_omegas,
    sweep,
    transient_scenario,
)

__version__ = "0.1.0"
