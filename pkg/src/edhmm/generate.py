"""Forward simulation of state, countdown, and observation sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EdhmmError, ModelParams, duration_log_pmf, obs_log_lik

__all__ = ["StructuralViolationError", "Trajectory", "generate", "trajectory_log_joint"]


class StructuralViolationError(EdhmmError):
    """A latent path breaks the countdown/switch constraints."""


@dataclass(eq=False)
class Trajectory:
    """A latent path and its observations over a fixed window.

    ``X[t]`` and ``D[t]`` hold the state and remaining duration at step
    t+1 of the window (0-based storage for steps 1..T); ``Y[t]`` is the
    observation.  ``x0``/``d0`` describe the dummy step preceding the
    window; ``d0 == 1`` forces a fresh segment draw at the first step.
    """

    X: np.ndarray
    D: np.ndarray
    Y: np.ndarray
    x0: int
    d0: int = 1

    @property
    def T(self) -> int:
        return len(self.X)

    def validate(self, K: int | None = None) -> None:
        """Raise StructuralViolationError on any broken path constraint."""
        X, D, Y = np.asarray(self.X), np.asarray(self.D), np.asarray(self.Y)
        if not (len(X) == len(D) == len(Y)) or len(X) == 0:
            raise StructuralViolationError("X, D, Y must share a positive length")
        if self.d0 < 1 or np.any(D < 1):
            raise StructuralViolationError("durations start at 1")
        if K is not None:
            if not (0 <= self.x0 < K) or np.any(X < 0) or np.any(X >= K):
                raise StructuralViolationError("state index out of range")
        prev_x = np.concatenate(([self.x0], X[:-1]))
        prev_d = np.concatenate(([self.d0], D[:-1]))
        cont = prev_d > 1
        if np.any(X[cont] != prev_x[cont]) or np.any(D[cont] != prev_d[cont] - 1):
            raise StructuralViolationError("mid-segment steps must keep the state and decrement the countdown")
        if np.any(X[~cont] == prev_x[~cont]):
            raise StructuralViolationError("segment boundaries must switch states")


def generate(params: ModelParams, T: int, seed) -> Trajectory:
    """Sample a trajectory of length T from the generative model.

    The dummy initial state is uniform over states with ``d0 = 1``, so the
    first step always opens a fresh segment.  Deterministic given the seed.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    K = params.K
    X = np.empty(T, dtype=np.int64)
    D = np.empty(T, dtype=np.int64)
    x0 = int(rng.integers(K))
    x, d = x0, 1
    for t in range(T):
        if d == 1:
            x = int(rng.choice(K, p=params.A[x]))
            d = 1 + int(rng.poisson(params.rates[x]))
        else:
            d -= 1
        X[t] = x
        D[t] = d
    Y = params.mu[X] + np.sqrt(params.sigma2[X]) * rng.standard_normal(T)
    return Trajectory(X=X, D=D, Y=Y, x0=x0, d0=1)


def trajectory_log_joint(traj: Trajectory, params: ModelParams) -> float:
    """Complete-data log density of (path, observations) given the params.

    Includes the uniform 1/K mass on the dummy initial state.  The path must
    be structurally valid; transitions through zero cells of A yield -inf.
    """
    traj.validate(params.K)
    X, D = np.asarray(traj.X), np.asarray(traj.D)
    prev_x = np.concatenate(([traj.x0], X[:-1]))
    prev_d = np.concatenate(([traj.d0], D[:-1]))
    boundary = prev_d == 1
    with np.errstate(divide="ignore"):
        lp = float(np.sum(np.log(params.A[prev_x[boundary], X[boundary]])))
    lp += float(np.sum(duration_log_pmf(D[boundary], params.rates[X[boundary]])))
    lp += float(np.sum(obs_log_lik(traj.Y, params.mu[X], params.sigma2[X])))
    return lp - np.log(params.K)
