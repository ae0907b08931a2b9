"""Explicit-duration hidden Markov model with slice-pruned, dynamically
truncated forward-filtering backward-sampling inference."""

from .beam import (
    EmptyActiveSetError,
    NoValidPredecessorError,
    SamplerState,
    SparseMessage,
    ZeroSliceBoundError,
    beam_backward_sample,
    beam_forward,
    init_state,
    run,
    sample_slices,
    sweep,
)
from .config import ChainSample, RunResult, SamplerConfig
from .diagnostics import (
    PosteriorSummary,
    SweepDiagnostics,
    summarize_posterior,
    transitions_considered,
)
from .exact import (
    DenseMessage,
    MessageUnderflowError,
    exact_ffbs_sample,
    exact_forward,
    exact_smoothed_marginals,
    run_exact_gibbs,
)
from .generate import StructuralViolationError, Trajectory, generate, trajectory_log_joint
from .gibbs import (
    SegmentStats,
    extract_segments,
    sample_duration_rates,
    sample_obs_params,
    sample_params,
    sample_transition_matrix,
)
from .model import (
    EdhmmError,
    LatentPoint,
    ModelParams,
    Priors,
    duration_log_pmf,
    duration_pmf_table,
    duration_slice_window,
    obs_log_lik,
    transition_log_prob,
)

__version__ = "0.1.0"
