"""Proportionally fair allocations of indivisible goods under random additive utilities."""

from .allocators import (
    AllocatorConfig,
    AllocatorError,
    AllocatorOutcome,
    Status,
    required_groups,
    theorem1_allocate,
    theorem2_allocate,
)
from .core import (
    TOL,
    Allocation,
    Instance,
    InstanceFormatError,
    bundle_utility,
    is_envy_free,
    is_proportional,
    proportional_share,
    total_utility,
)
from .distributions import (
    DistributionSpec,
    Margin,
    MarginUnavailable,
    SplitSpec,
    chernoff_bound,
    margin_for,
    margin_from_delta,
    sample_instance,
)
from .exact import (
    CheckResult,
    SearchLimitError,
    SearchLimits,
    Verdict,
    exists_proportional,
    exists_proportional_matching_case,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    Regime,
    remark1_instance,
    remark2_instance,
    run_experiment,
    wilson_interval,
)
from .matching import (
    BipartiteGraph,
    Matching,
    brute_force_matching_size,
    maximum_matching,
    threshold_graph,
)

__version__ = "0.1.0"
