"""Chain summaries: per-sweep efficiency counters, posterior statistics,
histogram data, and canonical state relabeling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParamSummary",
    "PosteriorSummary",
    "SweepDiagnostics",
    "relabel_permutation",
    "summarize_posterior",
    "transitions_considered",
]

RELABEL_MODES = ("mu", "mu_lambda")


@dataclass
class SweepDiagnostics:
    """Per-sweep counters from one forward pass plus the complete-data log
    joint at the post-sweep state."""

    sweep: int
    mean_transitions_per_t: float
    max_active_set: int
    log_joint: float
    mean_evaluated_per_t: float


def transitions_considered(forward_trace) -> float:
    """Mean number of indicator-passing transition pairs per time step.

    Accepts a forward message sequence (objects carrying ``n_passing``) or a
    plain sequence of per-step counts.
    """
    counts = [
        float(m.n_passing) if hasattr(m, "n_passing") else float(m)
        for m in forward_trace
    ]
    if not counts:
        raise ValueError("empty forward trace")
    return float(np.mean(counts))


def relabel_permutation(mu: np.ndarray, rates: np.ndarray, mode: str, gap: float = 1.0) -> np.ndarray:
    """State permutation making one draw's labels canonical.

    "mu" orders states by observation mean.  "mu_lambda" orders by mean but
    breaks near-ties (means closer than ``gap``) by duration rate, which is
    what separates states that share an observation distribution.
    """
    if mode == "mu":
        return np.argsort(mu, kind="stable")
    if mode != "mu_lambda":
        raise ValueError(f"unknown relabel mode {mode!r}")
    order = np.argsort(mu, kind="stable")
    perm = []
    group = [order[0]]
    for k in order[1:]:
        if mu[k] - mu[group[-1]] < gap:
            group.append(k)
        else:
            group.sort(key=lambda j: (rates[j], j))
            perm.extend(group)
            group = [k]
    group.sort(key=lambda j: (rates[j], j))
    perm.extend(group)
    return np.asarray(perm)


@dataclass
class ParamSummary:
    """Scalar posterior summary plus histogram data."""

    mean: float
    std: float
    q025: float
    q975: float
    bin_edges: np.ndarray
    counts: np.ndarray


@dataclass
class PosteriorSummary:
    n_samples: int
    stats: dict[str, ParamSummary]


def _sample_arrays(sample):
    """Pull (A, rates, mu, sigma2, log_joint) out of a chain element, which
    may be a ChainSample or a plain dict as read back from a chain file."""
    if hasattr(sample, "params"):
        p = sample.params
        return (
            np.asarray(p.A, dtype=float),
            np.asarray(p.rates, dtype=float),
            np.asarray(p.mu, dtype=float),
            np.asarray(p.sigma2, dtype=float),
            float(sample.log_joint),
        )
    return (
        np.asarray(sample["A"], dtype=float),
        np.asarray(sample["lambda"], dtype=float),
        np.asarray(sample["mu"], dtype=float),
        np.asarray(sample["sigma2"], dtype=float),
        float(sample["log_joint"]),
    )


def _summary(x: np.ndarray, bins: int) -> ParamSummary:
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return ParamSummary(
        mean=float(np.mean(x)),
        std=float(np.std(x)),
        q025=float(np.quantile(x, 0.025)),
        q975=float(np.quantile(x, 0.975)),
        bin_edges=edges,
        counts=counts,
    )


def summarize_posterior(chain, relabel: str | None = None, bins: int = 40) -> PosteriorSummary:
    """Per-parameter posterior summaries over a chain.

    Summaries run on the raw chain unless ``relabel`` names a canonical
    relabeling mode, in which case each draw's states are permuted first.
    Order of samples does not matter.
    """
    chain = list(chain)
    if not chain:
        raise ValueError("empty chain")
    rows = [_sample_arrays(s) for s in chain]
    K = rows[0][1].shape[0]
    A = np.stack([r[0] for r in rows])
    rates = np.stack([r[1] for r in rows])
    mu = np.stack([r[2] for r in rows])
    sigma2 = np.stack([r[3] for r in rows])
    log_joint = np.array([r[4] for r in rows])

    if relabel is not None:
        for i in range(len(rows)):
            perm = relabel_permutation(mu[i], rates[i], relabel)
            A[i] = A[i][perm][:, perm]
            rates[i] = rates[i][perm]
            mu[i] = mu[i][perm]
            sigma2[i] = sigma2[i][perm]

    stats: dict[str, ParamSummary] = {}
    for k in range(K):
        stats[f"mu[{k}]"] = _summary(mu[:, k], bins)
    for k in range(K):
        stats[f"lambda[{k}]"] = _summary(rates[:, k], bins)
    for k in range(K):
        stats[f"sigma2[{k}]"] = _summary(sigma2[:, k], bins)
    for i in range(K):
        for j in range(K):
            if i != j:
                stats[f"A[{i},{j}]"] = _summary(A[:, i, j], bins)
    stats["log_joint"] = _summary(log_joint, bins)
    return PosteriorSummary(n_samples=len(chain), stats=stats)
