"""Deterministic per-replicate seeds derived from one master seed."""

from __future__ import annotations

import numpy as np


def replicate_seeds(seed: int, n: int, stream: int = 0) -> list[int]:
    """``n`` independent 64-bit seeds for stream ``stream`` of master ``seed``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)])
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def child_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)])
