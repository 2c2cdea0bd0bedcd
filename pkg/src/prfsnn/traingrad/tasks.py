"""Synthetic sequence tasks."""

from __future__ import annotations

import numpy as np

from .trainer import SequenceDataset


def impulse_half_task(n: int, length: int = 256, seed: int = 0, amplitude: float = 1.0) -> SequenceDataset:
    """One impulse per sequence; label 1 iff it falls in the second half.

    Positions are balanced between halves and uniform within each half.
    """
    rng = np.random.default_rng(seed)
    half = length // 2
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    pos = rng.integers(0, half, n) + labels * half
    x = np.zeros((n, length))
    x[np.arange(n), pos] = amplitude
    return SequenceDataset(x, labels.astype(np.int64))
