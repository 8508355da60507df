"""Seeded random streams.

Every random draw in the package goes through :func:`generator`, which pins the
bit generator to PCG64 so a given seed yields the same stream on any platform.
"""
from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def dither(amplitude: float, seed: int, n_rows: int, n_cols: int) -> np.ndarray:
    """Uniform probe signal in ``[-amplitude, amplitude]``, shape ``(n_rows, n_cols)``.

    Columns are drawn in order, so the first ``k`` columns do not depend on
    ``n_cols``. The simulators rely on this to inject exactly the sequence an
    estimator later adds back into its regressors.
    """
    if amplitude <= 0:
        raise ValueError("dither amplitude must be positive")
    draws = generator(seed).uniform(-amplitude, amplitude, size=(n_cols, n_rows))
    return np.ascontiguousarray(draws.T)
