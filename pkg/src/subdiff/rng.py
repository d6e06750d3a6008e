"""Deterministic per-path random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``.  Monte
Carlo drivers derive one generator per path from ``(master_seed, path_index)``
so that path ``i`` sees the same noise regardless of batch size, worker count,
or which controls are being evaluated (common random numbers).
"""
from __future__ import annotations

import numpy as np


def path_stream(master_seed: int, path_index: int) -> np.random.Generator:
    """Generator for one simulation path, stable across runs and workers."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, path_index)))


def master_stream(master_seed: int) -> np.random.Generator:
    """Generator for single-path or non-ensemble use."""
    return np.random.default_rng(np.random.SeedSequence(master_seed))
