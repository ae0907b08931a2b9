"""Dense truncated forward-backward over the flattened (state, countdown)
space.

This is the quadratic-cost classical machinery: messages live on the full
K x d_max grid, durations beyond d_max are simply dropped (no
renormalization), and results are exact whenever no posterior-relevant
duration exceeds the cap.  It serves as the correctness oracle for the
sliced sampler and as a small-instance inference engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ChainSample, RunResult, SamplerConfig
from .diagnostics import SweepDiagnostics
from .generate import Trajectory, trajectory_log_joint
from .gibbs import extract_segments, sample_params
from .model import EdhmmError, ModelParams, Priors, duration_pmf_table, obs_log_lik

__all__ = [
    "DenseMessage",
    "MessageUnderflowError",
    "exact_ffbs_sample",
    "exact_forward",
    "exact_smoothed_marginals",
    "run_exact_gibbs",
]


class MessageUnderflowError(EdhmmError):
    """Every forward weight vanished; d_max is too small for the data."""


@dataclass
class DenseMessage:
    """Normalized filtering weights at one step; column j holds duration j+1."""

    t: int
    weights: np.ndarray


def _base_message(K: int, d_max: int) -> np.ndarray:
    # dummy step before the window: uniform state, countdown exactly 1
    m = np.zeros((K, d_max))
    m[:, 0] = 1.0 / K
    return m


def _obs_weights(y_t: float, params: ModelParams) -> tuple[np.ndarray, float]:
    logb = obs_log_lik(y_t, params.mu, params.sigma2)
    shift = float(np.max(logb))
    return np.exp(logb - shift), shift


def exact_forward(y, params: ModelParams, d_max: int) -> tuple[list[DenseMessage], float]:
    """Truncated forward pass; returns per-step messages and log p(Y).

    The log-likelihood is exact for the model restricted to durations at
    most d_max; it is non-decreasing in d_max and stabilizes once the cap
    covers every plausible duration.
    """
    y = np.asarray(y, dtype=float)
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    T = len(y)
    if T == 0:
        raise ValueError("need at least one observation")
    K = params.K
    pmf = duration_pmf_table(params.rates, d_max)
    alpha = _base_message(K, d_max)
    messages: list[DenseMessage] = []
    loglik = 0.0
    for t in range(1, T + 1):
        nxt = np.zeros((K, d_max))
        nxt[:, :-1] = alpha[:, 1:]                        # countdown decrement
        nxt += (params.A.T @ alpha[:, 0])[:, None] * pmf  # boundary inflow
        b, shift = _obs_weights(y[t - 1], params)
        nxt *= b[:, None]
        tot = float(nxt.sum())
        if not (tot > 0.0 and math.isfinite(tot)):
            raise MessageUnderflowError(f"forward message vanished at step {t}; increase d_max")
        nxt /= tot
        loglik += math.log(tot) + shift
        messages.append(DenseMessage(t=t, weights=nxt))
        alpha = nxt
    return messages, float(loglik)


def exact_smoothed_marginals(y, params: ModelParams, d_max: int) -> np.ndarray:
    """Posterior marginals p(x_t, d_t | Y) under the truncation.

    Returns an array of shape (T, K, d_max); each time slice sums to one.
    """
    y = np.asarray(y, dtype=float)
    messages, _ = exact_forward(y, params, d_max)
    T = len(y)
    K = params.K
    pmf = duration_pmf_table(params.rates, d_max)
    out = np.empty((T, K, d_max))
    out[T - 1] = messages[-1].weights
    beta = np.ones((K, d_max))
    for t in range(T - 1, 0, -1):
        # fold step t+1 into the backward message for step t
        b, _ = _obs_weights(y[t], params)
        weighted = b[:, None] * beta
        nb = np.empty_like(beta)
        nb[:, 0] = params.A @ (pmf * weighted).sum(axis=1)
        nb[:, 1:] = weighted[:, :-1]
        tot = float(nb.sum())
        if not (tot > 0.0 and math.isfinite(tot)):
            raise MessageUnderflowError(f"backward message vanished at step {t}")
        beta = nb / tot
        g = messages[t - 1].weights * beta
        out[t - 1] = g / g.sum()
    return out


def _pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    tot = float(weights.sum())
    if not tot > 0.0:
        raise MessageUnderflowError("no predecessor carries positive weight")
    r = rng.random() * tot
    idx = int(np.searchsorted(np.cumsum(weights), r, side="right"))
    return min(idx, len(weights) - 1)


def _backward_sample(messages: list[DenseMessage], params: ModelParams,
                     pmf: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> Trajectory:
    T = len(messages)
    K = params.K
    d_max = pmf.shape[1]
    X = np.empty(T, dtype=np.int64)
    D = np.empty(T, dtype=np.int64)
    flat = _pick(messages[-1].weights.ravel(), rng)
    X[T - 1], D[T - 1] = divmod(flat, d_max)
    D[T - 1] += 1
    for t in range(T - 1, 0, -1):
        alpha_prev = messages[t - 1].weights
        x, d = int(X[t]), int(D[t])
        w = alpha_prev[:, 0] * params.A[:, x] * pmf[x, d - 1]  # boundary predecessors
        cont = alpha_prev[x, d] if d < d_max else 0.0          # predecessor (x, d + 1)
        idx = _pick(np.append(w, cont), rng)
        if idx == K:
            X[t - 1], D[t - 1] = x, d + 1
        else:
            X[t - 1], D[t - 1] = idx, 1
    x0 = _pick(params.A[:, X[0]] * pmf[X[0], D[0] - 1], rng)
    return Trajectory(X=X, D=D, Y=y.copy(), x0=int(x0), d0=1)


def exact_ffbs_sample(y, params: ModelParams, d_max: int, seed) -> Trajectory:
    """One exact draw from p(X, D | Y) under the truncation.

    Forward filtering followed by backward sampling over the dense grid;
    deterministic given the seed.
    """
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    messages, _ = exact_forward(y, params, d_max)
    pmf = duration_pmf_table(params.rates, d_max)
    return _backward_sample(messages, params, pmf, y, rng)


def _legal_pair_counts(messages: list[DenseMessage], K: int, d_max: int) -> list[int]:
    """Per-step legal (predecessor, successor) pairs from active sources."""
    counts = []
    prev = _base_message(K, d_max)
    for msg in messages:
        boundary_sources = int(np.count_nonzero(prev[:, 0]))
        counts.append(int(np.count_nonzero(prev[:, 1:])) + boundary_sources * (K - 1) * d_max)
        prev = msg.weights
    return counts


def run_exact_gibbs(y, priors: Priors, config: SamplerConfig, progress=None) -> RunResult:
    """Chain alternating exact truncated FFBS draws with conjugate parameter
    updates.  Quadratic in K*d_cap per sweep; meant for small instances."""
    from .beam import init_state  # shared initialization; no cycle at import time

    y = np.asarray(y, dtype=float)
    config.validate()
    d_max = config.d_cap if config.d_cap is not None else len(y)
    if config.K * d_max * len(y) > 5e7:
        raise ValueError("K * d_cap * T too large for the dense engine; lower d_cap")
    rng = np.random.default_rng(config.seed)
    params = init_state(y, priors, config, rng).params

    result = RunResult()
    total = config.n_burnin + config.n_samples * config.thin
    for i in range(total):
        messages, _ = exact_forward(y, params, d_max)
        pmf = duration_pmf_table(params.rates, d_max)
        Z = _backward_sample(messages, params, pmf, y, rng)
        pair_counts = _legal_pair_counts(messages, config.K, d_max)
        stats = extract_segments(Z, config.K)
        params = sample_params(stats, priors, rng)
        diag = SweepDiagnostics(
            sweep=i + 1,
            mean_transitions_per_t=float(np.mean(pair_counts)),
            max_active_set=max(int(np.count_nonzero(m.weights)) for m in messages),
            log_joint=trajectory_log_joint(Z, params),
            mean_evaluated_per_t=float(np.mean(pair_counts)),
        )
        result.diagnostics.append(diag)
        kept = i + 1 - config.n_burnin
        if kept >= 1 and (kept - 1) % config.thin == 0:
            n_kept = len(result.samples) + 1
            keep_latent = config.store_latent_every > 0 and n_kept % config.store_latent_every == 0
            result.samples.append(ChainSample(
                sweep=i + 1,
                params=params,
                log_joint=diag.log_joint,
                diag=diag,
                latent=Z if keep_latent else None,
            ))
        if progress is not None:
            progress(i + 1, total)
    return result
