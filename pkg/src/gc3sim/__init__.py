"""Simulator and analysis toolkit for erasure-coded data collection in a
two-layer noisy network.

N agents each hold one bit and talk to a remote sink over binary erasure
channels; a sparse directed inter-agent graph lets them compute local
parities first, so the sink decodes the systematic graph code [I, A]
instead of hearing every bit many times.  The package simulates both this
scheme ("gc3") and the repetition baseline ("naive"), measures block error
and energy, and evaluates the matching closed-form bounds.
"""

from .bitlinalg import (
    ERASED,
    BitMatrix,
    DecodeResult,
    DecodeStatus,
    ErasedVector,
    InconsistentSystemError,
    rank,
    solve_erased,
)
from .bounds import (
    EFFECTIVE_ERASURE_FACTOR,
    BoundReport,
    LowerBoundInputs,
    UpperBoundInputs,
    energy_lower_bound,
    ensemble_error_upper_closed,
    ensemble_error_upper_sum,
    gap_ratio_trend,
    naive_error_upper,
    parity_zero_prob,
    sparseness_lower_bound,
    systematic_confusion_prob,
)
from .channel import ChannelParams, broadcast_round_set, transmit, transmit_repeated
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    cmd_bounds,
    cmd_oracle_check,
    cmd_simulate,
    cmd_sweep,
    replay_case,
)
from .protocol import (
    EnergyLedger,
    ErasurePattern,
    EstimateResult,
    SchemeParams,
    TrialOutcome,
    compute_t,
    estimate_error_probability,
    naive_repeats,
    run_step1,
    run_step2,
    run_trial_gc3,
    run_trial_naive,
    sample_erasure_pattern,
    trial_from_pattern,
    wilson_interval,
)
from .topology import (
    EnsembleParams,
    GraphTopology,
    chernoff_edge_tail,
    dump_topology,
    edge_count,
    load_topology,
    sample_er,
)

__version__ = "0.1.0"
