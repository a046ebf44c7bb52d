"""Bandits with knapsacks: instances, the fractional relaxation, learning
policies, discretization meshes and a seeded Monte-Carlo harness."""

from .confidence import ConfidenceState, RadiusParams, interval, is_strong_estimate, rad
from .core import (
    ArmSupport,
    Environment,
    EpisodeTrace,
    Instance,
    InstanceInfo,
    InvalidArmError,
    LatentStructure,
    Outcome,
    add_time_resource,
    append_null_arm,
    make_rng,
    normalize_budgets,
    run_episode,
    sample_outcome,
)
from .hedge import Hedge, hedge_init, hedge_step
from .lp import (
    ArmDistribution,
    LpSolution,
    UnboundedLPError,
    best_fixed_arm_value,
    lp_perfect,
    lp_value,
    lpopt,
    solve_primal,
)
from .policies import (
    Balance,
    FixedDistribution,
    PdBwK,
    UcbFixedArm,
    UniformRandom,
    make_policy,
    pdbwk_deterministic,
)

__version__ = "0.1.0"
