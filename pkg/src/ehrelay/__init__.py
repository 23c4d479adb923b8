"""Outage analysis and relay power-allocation strategies for multi-pair
wireless-powered relay networks.

A relay harvests energy from the first-hop transmissions of M source nodes
(power-splitting receiver) and spends the harvested budget forwarding to
the M destinations.  The package provides the channel/harvest model, five
allocation strategies (individual, equal, water-filling, max-min, auction),
closed-form and asymptotic outage expressions, a reproducible Monte Carlo
engine, and a sweep CLI.
"""

from .model import (
    ChannelDraw,
    DerivedParams,
    HarvestState,
    SystemConfig,
    derive_params,
    harvest,
    power_from_snr_db,
    power_split_theta,
    sample_block,
    sample_channels,
)
from .strategies import (
    PowerAllocation,
    STRATEGY_NAMES,
    allocate,
    allocate_equal,
    allocate_individual,
    allocate_maxmin,
    allocate_waterfill,
)
from .analytic import (
    OrderStatDiagnostics,
    OutageSummary,
    WorstCaseBounds,
    asymptotic_outage,
    conditioned_sum_pdf,
    order_stat_diagnostics,
    outage_equal,
    outage_individual,
    outage_wf_best,
    prob_decoding_count,
    wf_worst_bounds,
)
from .engine import (
    OutageReport,
    TrialResult,
    evaluate_draw,
    run_experiment,
    run_trial,
    worst_case_equivalence_check,
)

__version__ = "0.1.0"
