"""Counter-based random streams.

Every stochastic routine draws from a Philox generator keyed by
(seed, *path), where the path encodes replicate index and purpose. Streams
are independent and bit-reproducible, so serial and parallel executions
of a replicate set agree exactly.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "stream",
    "derive_seed",
    "PURPOSE_JOINT",
    "PURPOSE_ASSIGN",
    "PURPOSE_COVARIATES",
    "PURPOSE_RESIDUALS",
    "PURPOSE_TRUTH",
    "PURPOSE_SPLIT",
]

# Purpose tags used in stream paths.
PURPOSE_JOINT = 0        # latent copula draws for potential outcomes
PURPOSE_ASSIGN = 1       # treatment assignment
PURPOSE_COVARIATES = 2   # covariate draws
PURPOSE_RESIDUALS = 3    # residual copula draws
PURPOSE_TRUTH = 4        # Monte Carlo ground-truth draws
PURPOSE_SPLIT = 5        # sample-split permutations


def stream(seed: int, *path: int) -> np.random.Generator:
    """Philox generator for the (seed, *path) stream."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 63-bit child seed for APIs that take a plain integer."""
    return int(stream(seed, *path).integers(0, 2**63))
