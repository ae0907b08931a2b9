"""Conjugate resampling of transition, duration, and observation parameters
given a latent trajectory.

Sufficient statistics are read off the path once (`extract_segments`) and
each parameter block is then drawn from its closed-form conditional:
Dirichlet rows for the transition matrix, Gamma for the duration rates, and
a univariate normal-inverse-Wishart update for the observation pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generate import StructuralViolationError, Trajectory
from .model import ModelParams, Priors

__all__ = [
    "Segment",
    "SegmentStats",
    "extract_segments",
    "sample_duration_rates",
    "sample_obs_params",
    "sample_params",
    "sample_transition_matrix",
]


@dataclass
class Segment:
    """One maximal constant-state run: its state, the countdown value at its
    first step (which may exceed the steps remaining in the window for the
    final segment), and the observations falling inside the window."""

    state: int
    duration: int
    y: np.ndarray


@dataclass
class SegmentStats:
    """Sufficient statistics of one latent trajectory.

    ``transition_counts`` covers segment-boundary transitions inside the
    window; the dummy-step transition into step 1 is kept separately in
    ``init_transition`` so the transition update can include it without
    conflating it with the within-window counts.
    """

    K: int
    segments: list[Segment] = field(default_factory=list)
    transition_counts: np.ndarray = None
    init_transition: tuple[int, int] | None = None
    n_obs: np.ndarray = None
    sum_y: np.ndarray = None
    sum_y2: np.ndarray = None
    n_segments: np.ndarray = None
    sum_dur_minus1: np.ndarray = None

    def __post_init__(self) -> None:
        K = self.K
        if self.transition_counts is None:
            self.transition_counts = np.zeros((K, K), dtype=np.int64)
        if self.n_obs is None:
            self.n_obs = np.zeros(K, dtype=np.int64)
        if self.sum_y is None:
            self.sum_y = np.zeros(K)
        if self.sum_y2 is None:
            self.sum_y2 = np.zeros(K)
        if self.n_segments is None:
            self.n_segments = np.zeros(K, dtype=np.int64)
        if self.sum_dur_minus1 is None:
            self.sum_dur_minus1 = np.zeros(K, dtype=np.int64)

    @classmethod
    def empty(cls, K: int) -> "SegmentStats":
        """No-data statistics; every update then draws from its prior."""
        return cls(K=K)


def extract_segments(traj: Trajectory, K: int) -> SegmentStats:
    """Decompose a trajectory into segments and tally sufficient statistics.

    The window must open on a segment boundary (d0 == 1).  Each segment's
    duration is the countdown value at its first step, so the final
    segment's duration is fully observed even when it outruns the window.
    """
    traj.validate(K)
    if traj.d0 != 1:
        raise StructuralViolationError("window must open on a segment boundary (d0 == 1)")
    X = np.asarray(traj.X)
    D = np.asarray(traj.D)
    Y = np.asarray(traj.Y)
    T = len(X)

    starts = np.flatnonzero(np.concatenate(([True], D[:-1] == 1)))
    ends = np.append(starts[1:], T)
    segments = [
        Segment(state=int(X[s]), duration=int(D[s]), y=Y[s:e].copy())
        for s, e in zip(starts, ends)
    ]

    counts = np.zeros((K, K), dtype=np.int64)
    seg_states = X[starts]
    np.add.at(counts, (seg_states[:-1], seg_states[1:]), 1)

    n_obs = np.bincount(X, minlength=K).astype(np.int64)
    sum_y = np.bincount(X, weights=Y, minlength=K)
    sum_y2 = np.bincount(X, weights=Y * Y, minlength=K)
    n_segments = np.bincount(seg_states, minlength=K).astype(np.int64)
    sum_dur_minus1 = np.bincount(seg_states, weights=D[starts] - 1, minlength=K).astype(np.int64)

    return SegmentStats(
        K=K,
        segments=segments,
        transition_counts=counts,
        init_transition=(int(traj.x0), int(X[0])),
        n_obs=n_obs,
        sum_y=sum_y,
        sum_y2=sum_y2,
        n_segments=n_segments,
        sum_dur_minus1=sum_dur_minus1,
    )


def sample_transition_matrix(stats: SegmentStats, priors: Priors, rng) -> np.ndarray:
    """Draw a transition matrix from its Dirichlet conditional.

    Row i gets parameter ``dirichlet_mass + n_ij`` on each off-diagonal
    cell; the diagonal stays exactly zero.  The dummy-step transition is
    counted when present.
    """
    rng = np.random.default_rng(rng)
    K = stats.K
    counts = stats.transition_counts.astype(float).copy()
    if stats.init_transition is not None:
        counts[stats.init_transition] += 1.0
    A = np.zeros((K, K))
    for i in range(K):
        off = np.arange(K) != i
        A[i, off] = rng.dirichlet(priors.dirichlet_mass + counts[i, off])
    return A


def sample_duration_rates(stats: SegmentStats, priors: Priors, rng) -> np.ndarray:
    """Draw duration rates from their Gamma conditionals.

    Shifted-Poisson segments are conjugate on sum(d_i - 1): the posterior is
    Gamma(shape0 + sum(d_i - 1), rate0 + m) with rate0 = 1/scale0.  States
    with no segments draw from the prior.
    """
    rng = np.random.default_rng(rng)
    shape = priors.gamma_shape + stats.sum_dur_minus1
    rate = 1.0 / priors.gamma_scale + stats.n_segments
    return rng.gamma(shape, 1.0 / rate)


def sample_obs_params(stats: SegmentStats, priors: Priors, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw (mu, sigma2) per state from the univariate N-IW conditional.

    sigma2_k comes from the scaled inverse-chi-square marginal with
    nu_n = nu0 + n and scale lambda_n = lambda0 + S + kappa0*n*(ybar-mu0)^2/kappa_n,
    then mu_k | sigma2_k ~ Normal(mu_n, sigma2_k / kappa_n).
    """
    rng = np.random.default_rng(rng)
    n = stats.n_obs.astype(float)
    ybar = np.where(n > 0, stats.sum_y / np.maximum(n, 1.0), 0.0)
    # within-state sum of squared deviations; clipped against cancellation
    S = np.maximum(stats.sum_y2 - n * ybar * ybar, 0.0)

    kappa_n = priors.niw_kappa0 + n
    mu_n = (priors.niw_kappa0 * priors.niw_mu0 + stats.sum_y) / kappa_n
    nu_n = priors.niw_nu0 + n
    lambda_n = priors.niw_lambda0 + S + priors.niw_kappa0 * n * (ybar - priors.niw_mu0) ** 2 / kappa_n

    sigma2 = lambda_n / rng.chisquare(nu_n)
    mu = rng.normal(mu_n, np.sqrt(sigma2 / kappa_n))
    return mu, sigma2


def sample_params(stats: SegmentStats, priors: Priors, rng) -> ModelParams:
    """One full conjugate parameter draw: A, then rates, then (mu, sigma2)."""
    rng = np.random.default_rng(rng)
    A = sample_transition_matrix(stats, priors, rng)
    rates = sample_duration_rates(stats, priors, rng)
    mu, sigma2 = sample_obs_params(stats, priors, rng)
    return ModelParams(K=stats.K, A=A, rates=rates, mu=mu, sigma2=sigma2)
