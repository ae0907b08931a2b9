"""Core types and component densities of an explicit-duration HMM.

The latent state at each step is a pair ``(x, d)``: a discrete state index
and the number of steps remaining in the current segment.  Switching states
is legal only when the countdown reaches 1, the diagonal of the transition
matrix is identically zero (dwell time is carried by the duration model,
not by self-transitions), and fresh segment lengths follow a per-state
shifted Poisson, ``d - 1 ~ Poisson(rate)``, so every duration is at least
one step.  Observations are univariate Gaussian with per-state mean and
variance.

All densities are evaluated in log space; forward messages elsewhere in the
package keep normalized linear weights per time step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

__all__ = [
    "EdhmmError",
    "LatentPoint",
    "ModelParams",
    "Priors",
    "duration_log_pmf",
    "duration_pmf_table",
    "duration_slice_window",
    "obs_log_lik",
    "transition_log_prob",
]

_LOG_2PI = math.log(2.0 * math.pi)
_ROW_SUM_TOL = 1e-12


class EdhmmError(Exception):
    """Base class for model, sampler, and file-format failures."""


class LatentPoint(NamedTuple):
    """One latent tuple: state index ``x`` and remaining duration ``d`` (>= 1)."""

    x: int
    d: int


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Full parameter set of the model.

    ``A`` is a row-stochastic K-by-K matrix with an exactly zero diagonal,
    ``rates`` are the positive per-state duration rates, and ``mu`` /
    ``sigma2`` are the per-state Gaussian observation parameters.  Arrays
    are copied and frozen at construction.
    """

    K: int
    A: np.ndarray
    rates: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self) -> None:
        K = int(self.K)
        if K < 2:
            raise ValueError("at least two states are required")
        A = np.array(self.A, dtype=float)
        rates = np.array(self.rates, dtype=float)
        mu = np.array(self.mu, dtype=float)
        sigma2 = np.array(self.sigma2, dtype=float)
        if A.shape != (K, K):
            raise ValueError(f"A must be {K}x{K}, got {A.shape}")
        for name, arr in (("rates", rates), ("mu", mu), ("sigma2", sigma2)):
            if arr.shape != (K,):
                raise ValueError(f"{name} must have length {K}, got {arr.shape}")
        if np.any(A < 0.0):
            raise ValueError("transition probabilities must be non-negative")
        if np.any(np.diag(A) != 0.0):
            raise ValueError("diagonal of A must be exactly zero")
        row_sums = A.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > _ROW_SUM_TOL):
            raise ValueError(f"rows of A must sum to 1 within {_ROW_SUM_TOL}")
        if np.any(rates <= 0.0):
            raise ValueError("duration rates must be positive")
        if np.any(sigma2 <= 0.0):
            raise ValueError("observation variances must be positive")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rates))
                and np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma2))):
            raise ValueError("parameters must be finite")
        for arr in (A, rates, mu, sigma2):
            arr.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", sigma2)


@dataclass(frozen=True)
class Priors:
    """Hyperparameters of the conjugate parameter priors.

    ``dirichlet_mass`` is the symmetric weight on each off-diagonal cell of
    a transition-matrix row; duration rates get a Gamma(shape, scale) prior;
    the observation pair gets a univariate normal-inverse-Wishart prior with
    parameters (nu0, lambda0, kappa0, mu0).
    """

    dirichlet_mass: float
    gamma_shape: float = 1.0
    gamma_scale: float = 1e5
    niw_nu0: float = 2.0
    niw_lambda0: float = 1.0
    niw_kappa0: float = 0.1
    niw_mu0: float = 0.0

    def __post_init__(self) -> None:
        positive = {
            "dirichlet_mass": self.dirichlet_mass,
            "gamma_shape": self.gamma_shape,
            "gamma_scale": self.gamma_scale,
            "niw_lambda0": self.niw_lambda0,
            "niw_kappa0": self.niw_kappa0,
        }
        for name, value in positive.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite")
        # nu0 > 1 keeps the posterior variance draw proper for any data size
        if not (self.niw_nu0 > 1.0 and math.isfinite(self.niw_nu0)):
            raise ValueError("niw_nu0 must exceed 1")
        if not math.isfinite(self.niw_mu0):
            raise ValueError("niw_mu0 must be finite")

    @classmethod
    def default(cls, K: int) -> "Priors":
        """Broad defaults: off-diagonal Dirichlet mass 1/(K-1), Gamma(1, 1e5)
        duration-rate prior, and N-IW(2, 1, 0.1, 0) observation prior."""
        if K < 2:
            raise ValueError("at least two states are required")
        return cls(dirichlet_mass=1.0 / (K - 1))


def duration_log_pmf(d, rate):
    """Log pmf of a segment length under ``d - 1 ~ Poisson(rate)``.

    Supports scalars or broadcasting arrays.  The support starts at d = 1
    and the pmf sums to one over d = 1, 2, ...
    """
    d_arr = np.asarray(d, dtype=float)
    rate_arr = np.asarray(rate, dtype=float)
    if np.any(d_arr < 1):
        raise ValueError("durations start at 1")
    if np.any(rate_arr <= 0.0):
        raise ValueError("duration rate must be positive")
    out = -rate_arr + (d_arr - 1.0) * np.log(rate_arr) - gammaln(d_arr)
    return float(out) if out.ndim == 0 else out


def duration_pmf_table(rates, d_cap: int) -> np.ndarray:
    """Linear-space duration pmf values for d = 1..d_cap, one row per state.

    Every slice bound and window test in the package reads from this table
    (or from the identical formula), so indicator comparisons are bitwise
    consistent with the bounds the slices were drawn against.
    """
    if d_cap < 1:
        raise ValueError("d_cap must be at least 1")
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    d = np.arange(1, d_cap + 1, dtype=float)
    return np.exp(duration_log_pmf(d[None, :], rates[:, None]))


def obs_log_lik(y, mu, sigma2):
    """Univariate Gaussian log density; broadcasts over any argument."""
    sigma2_arr = np.asarray(sigma2, dtype=float)
    if np.any(sigma2_arr <= 0.0):
        raise ValueError("observation variance must be positive")
    y_arr = np.asarray(y, dtype=float)
    mu_arr = np.asarray(mu, dtype=float)
    out = -0.5 * (_LOG_2PI + np.log(sigma2_arr) + (y_arr - mu_arr) ** 2 / sigma2_arr)
    return float(out) if out.ndim == 0 else out


def transition_log_prob(z_prev: LatentPoint, z: LatentPoint, params: ModelParams) -> float:
    """Log probability of the latent pair ``z`` following ``z_prev``.

    Mid-segment the move is deterministic: the state is kept and the
    countdown drops by one.  At a boundary (countdown 1) the next state is
    drawn from the transition row and a fresh duration from that state's
    pmf; staying in the same state has probability zero.
    """
    for p in (z_prev, z):
        if not 0 <= p.x < params.K:
            raise ValueError(f"state index {p.x} out of range")
        if p.d < 1:
            raise ValueError("durations start at 1")
    if z_prev.d > 1:
        if z.x == z_prev.x and z.d == z_prev.d - 1:
            return 0.0
        return -math.inf
    a = float(params.A[z_prev.x, z.x])
    if a == 0.0:
        return -math.inf
    return math.log(a) + duration_log_pmf(z.d, float(params.rates[z.x]))


def duration_slice_window(rate: float, threshold: float, d_cap: int) -> tuple[int, int]:
    """Contiguous set ``{d in [1, d_cap] : pmf(d; rate) > threshold}``.

    Returns an inclusive pair ``(lo, hi)``; an empty window comes back as
    ``(1, 0)``.  The shifted-Poisson pmf is unimodal with mode
    ``floor(rate) + 1``, so the set is an interval and the scan walks
    outward from the mode.  The comparison is strict: pmf values exactly
    equal to the threshold are excluded.
    """
    if not threshold > 0.0:
        raise ValueError("threshold must be positive")
    if d_cap < 1:
        raise ValueError("d_cap must be at least 1")
    if rate <= 0.0:
        raise ValueError("duration rate must be positive")
    log_thr = math.log(threshold)
    mode = min(int(math.floor(rate)) + 1, d_cap)
    if not duration_log_pmf(mode, rate) > log_thr:
        return (1, 0)
    lo = mode
    while lo > 1 and duration_log_pmf(lo - 1, rate) > log_thr:
        lo -= 1
    hi = mode
    while hi < d_cap and duration_log_pmf(hi + 1, rate) > log_thr:
        hi += 1
    return (lo, hi)
