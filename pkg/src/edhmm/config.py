"""Run configuration and chain-output containers shared by both engines."""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import SweepDiagnostics
from .generate import Trajectory
from .model import ModelParams

__all__ = ["ChainSample", "RunResult", "SamplerConfig"]

INITS = ("greedy", "small-u")


@dataclass
class SamplerConfig:
    """Knobs for one MCMC chain.

    d_cap bounds the durations the samplers will consider; None means the
    sequence length.  init "greedy" seeds the chain from a nearest-mean
    segmentation; "small-u" starts from constant tiny slice variables and a
    near-exhaustive first forward pass (d_cap is forced to the sequence
    length in that mode).
    """

    K: int
    n_burnin: int = 500
    n_samples: int = 1000
    thin: int = 1
    seed: int = 0
    d_cap: int | None = None
    init: str = "greedy"
    store_latent_every: int = 0
    small_u: float = 1e-6

    def validate(self) -> None:
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.n_burnin < 0 or self.n_samples < 0:
            raise ValueError("burn-in and sample counts must be non-negative")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.d_cap is not None and self.d_cap < 1:
            raise ValueError("d_cap must be at least 1")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.store_latent_every < 0:
            raise ValueError("store_latent_every must be non-negative")
        if not self.small_u > 0:
            raise ValueError("small_u must be positive")


@dataclass
class ChainSample:
    """One retained posterior draw."""

    sweep: int
    params: ModelParams
    log_joint: float
    diag: SweepDiagnostics
    latent: Trajectory | None = None


@dataclass
class RunResult:
    """A finished chain: retained samples plus per-sweep diagnostics
    (burn-in included)."""

    samples: list[ChainSample] = field(default_factory=list)
    diagnostics: list[SweepDiagnostics] = field(default_factory=list)
