"""Slice-pruned forward-filtering backward-sampling for the
explicit-duration HMM.

Each sweep augments the chain with one uniform slice variable per step,
drawn under the current path and parameters: ``u_t ~ Uniform(0, p(z_t |
z_{t-1}))``.  The forward pass then only propagates transitions whose
probability exceeds ``u_t``, which turns the countably infinite duration
sum into a small dynamic window around each duration mode, and the
backward pass resamples the whole path from those pruned messages.  No
fixed truncation interval is ever chosen; the admitted windows adapt to
the data every sweep while the stationary distribution stays the exact
posterior (up to the hard safety cap ``d_cap``, sequence length by
default).

Messages are stored as dense (K, d_cap) weight grids whose zero pattern is
the active set; the grids are small enough that vectorized slice updates
beat explicit sparse bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import ChainSample, RunResult, SamplerConfig
from .diagnostics import SweepDiagnostics, transitions_considered
from .generate import Trajectory, trajectory_log_joint
from .gibbs import extract_segments, sample_params
from .model import (
    EdhmmError,
    LatentPoint,
    ModelParams,
    Priors,
    duration_pmf_table,
    obs_log_lik,
)

__all__ = [
    "EmptyActiveSetError",
    "NoValidPredecessorError",
    "SamplerState",
    "SparseMessage",
    "ZeroSliceBoundError",
    "beam_backward_sample",
    "beam_forward",
    "init_state",
    "run",
    "sample_slices",
    "sweep",
]

# normalized weights below this cannot survive backward sampling in doubles
_WEIGHT_FLOOR = 1e-300


class ZeroSliceBoundError(EdhmmError):
    """A conditioning path contains a zero-probability transition."""


class EmptyActiveSetError(EdhmmError):
    """No successor passed the slice indicator (or all weights underflowed)."""


class NoValidPredecessorError(EdhmmError):
    """Backward sampling found no predecessor consistent with the slices."""


@dataclass
class SparseMessage:
    """Pruned forward message at one step.

    ``weights`` is a dense (K, d_cap) grid, column j holding duration j+1;
    zeros mark inactive tuples.  ``n_passing`` counts the
    indicator-passing (z_prev, z_t) pairs that built the message and
    ``n_evaluated`` the candidate pairs probed to find them (outward-scan
    cost model: a window of width w costs w + 2 probes, an empty one 1).
    """

    t: int
    weights: np.ndarray
    n_passing: int
    n_evaluated: int

    @property
    def entries(self) -> dict[LatentPoint, float]:
        xs, ds = np.nonzero(self.weights)
        return {
            LatentPoint(int(x), int(d) + 1): float(self.weights[x, d])
            for x, d in zip(xs, ds)
        }

    @property
    def active_count(self) -> int:
        return int(np.count_nonzero(self.weights))


def sample_slices(traj: Trajectory, params: ModelParams, rng) -> np.ndarray:
    """Draw one slice variable per step: u_t ~ Uniform(0, p(z_t | z_{t-1})).

    Mid-segment the bound is exactly 1; at boundaries it is the transition
    probability times the duration pmf.  Bounds are read from the same pmf
    table the forward pass uses, so the conditioning path always passes its
    own indicators bitwise.
    """
    rng = np.random.default_rng(rng)
    traj.validate(params.K)
    X = np.asarray(traj.X)
    D = np.asarray(traj.D)
    T = len(X)
    prev_x = np.concatenate(([traj.x0], X[:-1]))
    prev_d = np.concatenate(([traj.d0], D[:-1]))
    boundary = prev_d == 1

    bounds = np.ones(T)
    if np.any(boundary):
        pmf = duration_pmf_table(params.rates, int(D[boundary].max()))
        bounds[boundary] = params.A[prev_x[boundary], X[boundary]] * pmf[X[boundary], D[boundary] - 1]
    if np.any(bounds <= 0.0):
        t_bad = int(np.flatnonzero(bounds <= 0.0)[0]) + 1
        raise ZeroSliceBoundError(f"zero transition probability along the path at step {t_bad}")

    u = rng.random(T) * bounds
    while np.any(u == 0.0):  # strict support (0, bound); essentially never loops
        zero = u == 0.0
        u[zero] = rng.random(int(zero.sum())) * bounds[zero]
    return u


def beam_forward(y, u, params: ModelParams, d_cap: int | None = None) -> list[SparseMessage]:
    """Forward pass restricted to transitions passing the slice indicators.

    Admitted successors inherit the predecessor weight unchanged: the slice
    density is the reciprocal of the transition probability on its support,
    so the transition probability cancels and only the indicator and the
    observation likelihood shape the message.  Active tuples with countdown
    above 1 always continue (their transition probability is 1); active
    boundary tuples spawn, per successor state, the contiguous duration
    window whose pmf values exceed ``u_t / a``.  ``d_cap`` is a safety
    bound only, defaulting to the sequence length.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    T = len(y)
    if T == 0:
        raise ValueError("need at least one observation")
    if len(u) != T:
        raise ValueError("need one slice variable per observation")
    if d_cap is None:
        d_cap = T
    if d_cap < 1:
        raise ValueError("d_cap must be at least 1")
    K = params.K
    pmf = duration_pmf_table(params.rates, d_cap)
    stack = np.zeros((T + 1, K, d_cap))
    stack[0, :, 0] = 1.0 / K
    messages: list[SparseMessage] = []
    for t in range(1, T + 1):
        ut = float(u[t - 1])
        prev = stack[t - 1]
        cur = stack[t]
        n_cont = int(np.count_nonzero(prev[:, 1:]))
        passing = 0
        evaluated = n_cont
        if ut < 1.0:  # continuation probability is exactly 1
            cur[:, :-1] = prev[:, 1:]
            passing += n_cont
        for x in np.flatnonzero(prev[:, 0] > 0.0):
            w = prev[x, 0]
            for xp in range(K):
                if xp == x:
                    continue
                a = params.A[x, xp]
                if a <= 0.0:
                    continue
                idx = np.flatnonzero(a * pmf[xp] > ut)
                if idx.size == 0:
                    evaluated += 1
                    continue
                lo, hi = int(idx[0]), int(idx[-1]) + 1
                cur[xp, lo:hi] += w
                width = hi - lo
                passing += width
                evaluated += min(d_cap, width + 2)
        if passing == 0:
            raise EmptyActiveSetError(f"no successor passed the slice indicator at step {t}")
        logb = obs_log_lik(y[t - 1], params.mu, params.sigma2)
        cur *= np.exp(logb - logb.max())[:, None]
        tot = float(cur.sum())
        if not tot > 0.0:
            raise EmptyActiveSetError(f"active weights underflowed at step {t}")
        cur /= tot
        cur[cur < _WEIGHT_FLOOR] = 0.0
        messages.append(SparseMessage(t=t, weights=cur, n_passing=passing, n_evaluated=evaluated))
    return messages


def _pick(weights: np.ndarray, rng: np.random.Generator, t: int) -> int:
    tot = float(weights.sum())
    if not tot > 0.0:
        raise NoValidPredecessorError(f"no slice-consistent predecessor at step {t}")
    r = rng.random() * tot
    idx = int(np.searchsorted(np.cumsum(weights), r, side="right"))
    return min(idx, len(weights) - 1)


def beam_backward_sample(messages: list[SparseMessage], u, params: ModelParams,
                         y, rng) -> Trajectory:
    """Resample a full path from pruned messages.

    The final tuple is drawn from the last message; earlier tuples are drawn
    proportionally to the previous message restricted to predecessors whose
    transition into the current tuple passes the slice indicator (the
    transition probability itself cancels against the slice density).
    """
    rng = np.random.default_rng(rng)
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    T = len(messages)
    K = params.K
    d_cap = messages[0].weights.shape[1]
    pmf = duration_pmf_table(params.rates, d_cap)

    X = np.empty(T, dtype=np.int64)
    D = np.empty(T, dtype=np.int64)
    flat = _pick(messages[-1].weights.ravel(), rng, T)
    X[T - 1], D[T - 1] = divmod(flat, d_cap)
    D[T - 1] += 1

    base = np.zeros((K, d_cap))
    base[:, 0] = 1.0 / K
    for t in range(T - 1, -1, -1):
        alpha_prev = messages[t - 1].weights if t >= 1 else base
        x, d = int(X[t]), int(D[t])
        ut = float(u[t])
        passes = params.A[:, x] * pmf[x, d - 1] > ut       # boundary indicator per source state
        w = np.where(passes, alpha_prev[:, 0], 0.0)
        cont = 0.0
        if d < d_cap and ut < 1.0:                         # predecessor (x, d + 1)
            cont = alpha_prev[x, d]
        idx = _pick(np.append(w, cont), rng, t + 1)
        px, pd = (x, d + 1) if idx == K else (int(idx), 1)
        if t >= 1:
            X[t - 1], D[t - 1] = px, pd
        else:
            x0 = px
    return Trajectory(X=X, D=D, Y=y.copy(), x0=int(x0), d0=1)


@dataclass
class SamplerState:
    """Everything one chain carries between sweeps.

    The slice variables ``u`` are always the ones drawn under the current
    ``params`` and ``Z``, so the next forward pass prunes with bounds that
    match the parameters it runs under.
    """

    params: ModelParams
    Z: Trajectory
    u: np.ndarray
    rng: np.random.Generator
    sweep_index: int
    y: np.ndarray
    priors: Priors
    d_cap: int
    diag: SweepDiagnostics | None = None


def _greedy_trajectory(y: np.ndarray, K: int) -> Trajectory:
    """Nearest-quantile segmentation used to seed a chain."""
    anchors = np.quantile(y, (np.arange(K) + 0.5) / K)
    X = np.argmin(np.abs(y[:, None] - anchors[None, :]), axis=1).astype(np.int64)
    # countdown: distance to the end of each constant run
    T = len(X)
    D = np.empty(T, dtype=np.int64)
    end = T
    for t in range(T - 1, -1, -1):
        if t + 1 < T and X[t + 1] != X[t]:
            end = t + 1
        D[t] = end - t
    x0 = int((X[0] + 1) % K)
    return Trajectory(X=X, D=D, Y=np.asarray(y, dtype=float).copy(), x0=x0, d0=1)


def init_state(y, priors: Priors, config: SamplerConfig, rng) -> SamplerState:
    """Build a slice-consistent starting state.

    Parameters are drawn from their conjugate conditionals given the greedy
    segmentation (raw prior draws of the duration rates routinely underflow
    every pmf value the slices need).  In "small-u" mode the slice variables
    are instead set to a constant small value and d_cap to the sequence
    length, making the first forward pass near-exhaustive.
    """
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValueError("need at least one observation")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    config.validate()
    rng = np.random.default_rng(rng)
    T = len(y)
    d_cap = T if config.init == "small-u" else (config.d_cap if config.d_cap is not None else T)
    Z = _greedy_trajectory(y, config.K)
    if int(np.max(Z.D)) > d_cap:
        raise ValueError("initial segmentation exceeds d_cap; raise d_cap")
    stats = extract_segments(Z, config.K)
    params = sample_params(stats, priors, rng)
    if config.init == "small-u":
        u = np.full(T, config.small_u)
    else:
        u = sample_slices(Z, params, rng)
    return SamplerState(params=params, Z=Z, u=u, rng=rng, sweep_index=0,
                        y=y, priors=priors, d_cap=d_cap)


def sweep(state: SamplerState) -> SamplerState:
    """One full MCMC sweep; leaves the joint posterior invariant.

    Phases: pruned forward pass, backward path resampling, conjugate
    parameter draw given the new path (slice variables integrate out of
    that conditional), then fresh slices under the new parameters so the
    next forward pass sees matched bounds.
    """
    messages = beam_forward(state.y, state.u, state.params, state.d_cap)
    Z = beam_backward_sample(messages, state.u, state.params, state.y, state.rng)
    stats = extract_segments(Z, state.params.K)
    params = sample_params(stats, state.priors, state.rng)
    u = sample_slices(Z, params, state.rng)
    diag = SweepDiagnostics(
        sweep=state.sweep_index + 1,
        mean_transitions_per_t=transitions_considered(messages),
        max_active_set=max(m.active_count for m in messages),
        log_joint=trajectory_log_joint(Z, params),
        mean_evaluated_per_t=float(np.mean([m.n_evaluated for m in messages])),
    )
    return replace(state, params=params, Z=Z, u=u,
                   sweep_index=state.sweep_index + 1, diag=diag)


def run(y, priors: Priors, config: SamplerConfig, progress=None) -> RunResult:
    """Run one chain: burn-in plus thinned retained draws.

    Deterministic given ``config.seed``.  Diagnostics cover every sweep,
    burn-in included.
    """
    y = np.asarray(y, dtype=float)
    config.validate()
    rng = np.random.default_rng(config.seed)
    state = init_state(y, priors, config, rng)

    result = RunResult()
    total = config.n_burnin + config.n_samples * config.thin
    for i in range(total):
        state = sweep(state)
        result.diagnostics.append(state.diag)
        kept = state.sweep_index - config.n_burnin
        if kept >= 1 and (kept - 1) % config.thin == 0:
            n_kept = len(result.samples) + 1
            keep_latent = config.store_latent_every > 0 and n_kept % config.store_latent_every == 0
            result.samples.append(ChainSample(
                sweep=state.sweep_index,
                params=state.params,
                log_joint=state.diag.log_joint,
                diag=state.diag,
                latent=state.Z if keep_latent else None,
            ))
        if progress is not None:
            progress(i + 1, total)
    return result
