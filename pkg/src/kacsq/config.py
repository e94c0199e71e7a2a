"""Numeric configuration threaded through every solver."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Config:
    """Tolerances and reproducibility knobs.

    residual_tol is the absolute residual below which a verification is
    declared clean; rank_rtol is the relative singular-value cutoff used for
    every rank / nullspace decision.  All randomized searches draw from
    generators seeded off ``seed`` so repeated runs are bit-identical.
    """

    residual_tol: float = 1e-9
    rank_rtol: float = 1e-7
    seed: int = 7
    ambient_budget: int = 4096   # largest GNS dimension a tower step may use
    depth_cap: int = 3
    gauge_restarts: int = 8
    gauge_iters: int = 200

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng((self.seed, salt))

    def with_tol(self, tol: float) -> "Config":
        return replace(self, residual_tol=tol)


DEFAULT = Config()
