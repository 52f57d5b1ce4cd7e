"""Test-function library: Gaussian forms, smooth bumps, and pair functions.

``GaussianForm`` is the analytically-closed family the quadrature oracle can
collapse (a Gaussian integrated against a Gaussian kernel stays Gaussian).
``SmoothFunction`` bundles a scalar function with its derivatives up to
fourth order for the PDE residual check. The module also ships the built-in
functions exposed by the CLI: ``gauss``, ``bump``, and the linear/cosh pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GaussianForm",
    "SmoothFunction",
    "Bump",
    "gauss",
    "gauss_function",
    "bump",
    "linear",
    "linear_cosh",
]


@dataclass(frozen=True)
class GaussianForm:
    """Scaled Gaussian ``amplitude * exp(-(x - center)^2 / (2 variance))``.

    Instances are callable and vectorized. The defaults give ``e^{-x^2}``.
    """

    amplitude: float = 1.0
    center: float = 0.0
    variance: float = 0.5

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    def __call__(self, x):
        z = np.asarray(x, dtype=float)
        out = self.amplitude * np.exp(-((z - self.center) ** 2) / (2.0 * self.variance))
        return float(out) if np.isscalar(x) else out

    def convolve_gaussian(self, mean: float, var: float) -> float:
        """E[self(N(mean, var))], the closed Gaussian-against-Gaussian integral."""
        total = self.variance + var
        amp = self.amplitude * math.sqrt(self.variance / total)
        return amp * math.exp(-((mean - self.center) ** 2) / (2.0 * total))


gauss = GaussianForm()


def _gauss_d1(x):
    z = np.asarray(x, dtype=float)
    return -2.0 * z * np.exp(-(z**2))


def _gauss_d2(x):
    z = np.asarray(x, dtype=float)
    return (4.0 * z**2 - 2.0) * np.exp(-(z**2))


def _gauss_d3(x):
    z = np.asarray(x, dtype=float)
    return (12.0 * z - 8.0 * z**3) * np.exp(-(z**2))


def _gauss_d4(x):
    z = np.asarray(x, dtype=float)
    return (16.0 * z**4 - 48.0 * z**2 + 12.0) * np.exp(-(z**2))


@dataclass(frozen=True)
class SmoothFunction:
    """A scalar function bundled with derivatives up to fourth order.

    Only ``value`` is required; operations that need a derivative state which
    one. ``__call__`` delegates to ``value``.
    """

    value: Callable[[float], float]
    d1: Callable[[float], float] | None = None
    d2: Callable[[float], float] | None = None
    d3: Callable[[float], float] | None = None
    d4: Callable[[float], float] | None = None

    def __call__(self, x):
        return self.value(x)


gauss_function = SmoothFunction(
    value=gauss, d1=_gauss_d1, d2=_gauss_d2, d3=_gauss_d3, d4=_gauss_d4
)


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump on [center - half_width, center + half_width].

    ``exp(1 - 1/(1 - u^2))`` with ``u = (x - center)/half_width``: infinitely
    differentiable, peak value 1 at the center, identically zero outside the
    support.
    """

    center: float = 1.5
    half_width: float = 0.5

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    def __call__(self, x):
        z = np.asarray(x, dtype=float)
        u = (z - self.center) / self.half_width
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui**2))
        return float(out) if np.isscalar(x) else out


bump = Bump()


def linear(x):
    """Identity map, vectorized."""
    z = np.asarray(x, dtype=float)
    return float(z) if np.isscalar(x) else z


def linear_cosh(x, y):
    """Pair function f~(x, y) = x cosh(y); restricts to f(x) = x at y = 0."""
    out = np.asarray(x, dtype=float) * np.cosh(np.asarray(y, dtype=float))
    return float(out) if np.isscalar(x) and np.isscalar(y) else out
