"""cavsim: binary-feedback congestion avoidance, simulated and measured.

A packet-level discrete-event simulator plus the two policy halves of
the scheme it studies: routers that detect operation past the knee via
queue lengths averaged over regeneration cycles and selectively set one
header bit for flows above their fair share, and sources that fold the
returned bits into one decision every two window turns, increasing the
window additively and decreasing it multiplicatively. A metrics layer
quantifies efficiency (power at the knee) and fairness (fairness index,
max-min fair allocations) for arbitrary resource/user graphs.
"""
from .metrics import (
    OptimalAllocation,
    ResourceGraph,
    SweepPoint,
    efficiency,
    fairness_index,
    global_fairness,
    knee_from_sweep,
    max_min_fair_allocation,
    power,
)
from .report import (
    MetricsReport,
    build_report,
    metrics_from_trace,
    read_trace,
    report_text,
    write_trace,
)
from .router_policy import FlowId, RouterPolicy, iterative_fair_share
from .scenario import (
    PolicyParams,
    RunControls,
    Scenario,
    ScenarioError,
    ServerSpec,
    UserSpec,
    bundled_names,
    load_bundled,
    parse_scenario,
    render_scenario,
)
from .simkernel import (
    PRNG_ID,
    Packet,
    RunResult,
    TraceRecord,
    fixed_window_run,
    run,
    sweep,
)
from .user_policy import Decision, WindowController, nearest_int, signal_filter

__version__ = "0.1.0"

__all__ = [
    "OptimalAllocation", "ResourceGraph", "SweepPoint", "efficiency",
    "fairness_index", "global_fairness", "knee_from_sweep",
    "max_min_fair_allocation", "power",
    "MetricsReport", "build_report", "metrics_from_trace", "read_trace",
    "report_text", "write_trace",
    "FlowId", "RouterPolicy", "iterative_fair_share",
    "PolicyParams", "RunControls", "Scenario", "ScenarioError", "ServerSpec",
    "UserSpec", "bundled_names", "load_bundled", "parse_scenario",
    "render_scenario",
    "PRNG_ID", "Packet", "RunResult", "TraceRecord", "fixed_window_run",
    "run", "sweep",
    "Decision", "WindowController", "nearest_int", "signal_filter",
    "__version__",
]
