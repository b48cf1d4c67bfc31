"""Multi-task multi-armed bandit simulation and benchmarking.

M players face a shared set of K arms whose Bernoulli means may differ
across players by at most a known epsilon per arm. The library provides
instance generation with a controlled number of high-gap (subpar) arms,
the round-based interaction protocol with oblivious activation schedules,
transfer and no-transfer decision policies, regret analytics, and
Monte-Carlo validation of the concentration bounds the transfer policies
rely on.
"""

from .env import (
    ArmCategory,
    GapTable,
    InfeasibleParametersError,
    MpmabInstance,
    ValidationReport,
    categorize_pairs,
    categorize_pull,
    compute_gaps,
    generate_instance,
    load_instance,
    sample_reward,
    save_instance,
    subpar_set,
    validate_instance,
)
from .metrics import (
    AggregateSummary,
    RunMeta,
    RunSummary,
    aggregate_runs,
    category_breakdown,
    default_checkpoints,
    final_count_regret,
    read_summary_csv,
    regret_trajectory,
    summarize_run,
    write_summary_csv,
)
from .policies import (
    ALGORITHMS,
    CONSTANT_PRESETS,
    PolicyConfig,
    make_policy,
    minimize_F,
    switch_threshold,
    ucb1_index,
)
from .protocol import (
    ProtocolError,
    RunTrace,
    Schedule,
    kth_puller,
    load_schedule,
    make_schedule,
    pi_k,
    run_episode,
    save_schedule,
    tau_k,
)
from .streams import EpisodeStreams
from .validator import (
    ConcCheckReport,
    check_agg_concentration,
    check_ind_concentration,
    check_invariants_trace,
    run_agg_grid,
)

__version__ = "0.1.0"
