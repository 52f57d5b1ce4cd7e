"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from itersim import CoefficientField


def constant_field(drift: float, diffusion: float) -> CoefficientField:
    """Coefficient field with constant scalar drift and diffusion."""
    return CoefficientField(
        drift=lambda t, x: np.full_like(x, drift),
        diffusion=lambda t, x: np.full_like(x, diffusion),
    )


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """Exact one-sample Kolmogorov-Smirnov distance against a callable CDF."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    f = np.asarray(cdf(s), dtype=float)
    grid = np.arange(n + 1) / n
    return float(max(np.max(grid[1:] - f), np.max(f - grid[:-1])))
