"""Seeded synthetic tasks used by tests, the acceptance suite and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .numerics import SplitMix64


def delayed_recall(n: int, T: int = 20, n_classes: int = 4, d_x: int = 2,
                   noise: float = 1.0, seed: int = 0):
    """Classify a sequence by a cue shown only at the first step.

    The cue is one of ``n_classes`` points evenly spaced on the unit circle in
    the first two channels; every later step is uniform noise in
    ``[-noise, noise]``. Returns ``(X (n, T, d_x), labels (n,))``.
    """
    if d_x < 2:
        raise ValueError("delayed_recall needs d_x >= 2")
    rng = SplitMix64(seed)
    X = np.zeros((n, T, d_x))
    y = np.zeros(n, dtype=np.int64)
    for i in range(n):
        k = rng.randbelow(n_classes)
        y[i] = k
        ang = 2.0 * math.pi * k / n_classes
        X[i, 0, 0] = math.cos(ang)
        X[i, 0, 1] = math.sin(ang)
        for t in range(1, T):
            for j in range(d_x):
                X[i, t, j] = rng.uniform(-noise, noise)
    return X, y


def sine_series(n: int, period: float = 20.0, phase: float = 0.0) -> np.ndarray:
    """Noiseless ``(n, 1)`` sine wave, one row per timestep."""
    t = np.arange(n, dtype=np.float64)
    return np.sin(2.0 * math.pi * t / period + phase)[:, None]
