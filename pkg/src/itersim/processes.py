"""Named processes: coefficient fields, exact samplers, closed densities.

Each process is a small frozen record. ``coefficients_of`` turns a diffusion
record into a :class:`~itersim.sde.CoefficientField` (with the affine tag so
the compiled kernel can step it); ``sample_terminal`` draws the time-``t``
marginal exactly where a closed form exists; ``transition_density`` and
``transition_cdf`` expose the closed-form laws used by the quadrature
oracles.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, UnsupportedOperationError
from .rng import RngStream, standard_cauchy
from .sde import AffineForm, CoefficientField

__all__ = [
    "BrownianMotion",
    "BrownianWithDrift",
    "OrnsteinUhlenbeck",
    "SquaredBessel",
    "Telegraph",
    "CauchyProcess",
    "ProcessSpec",
    "coefficients_of",
    "transition_density",
    "transition_cdf",
    "sample_terminal",
    "parse_process",
    "format_process",
]


@dataclass(frozen=True)
class BrownianMotion:
    """Driftless Brownian motion with volatility ``sigma``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class BrownianWithDrift:
    """Brownian motion with constant drift ``mu`` and volatility ``sigma``."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    """Mean-reverting process dY = -Y/2 dt + dW.

    The relaxation rate is fixed at 1/2 with unit noise so that the from-zero
    transition law stays N(0, 1 - e^{-t}) exactly.
    """


@dataclass(frozen=True)
class SquaredBessel:
    """Squared Bessel process dX = delta dt + 2 sqrt(max(X, 0)) dW."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class Telegraph:
    """Velocity-flip process: speed ``+/-speed``, flips at exponential(rate) times."""

    rate: float = 1.0
    speed: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.speed > 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class CauchyProcess:
    """Standard Cauchy process: increments over dt are dt-scaled Cauchy."""


ProcessSpec = Union[
    BrownianMotion,
    BrownianWithDrift,
    OrnsteinUhlenbeck,
    SquaredBessel,
    Telegraph,
    CauchyProcess,
]


def coefficients_of(spec: ProcessSpec) -> CoefficientField:
    """Drift/diffusion pair of a diffusion record.

    Raises :class:`UnsupportedOperationError` for ``Telegraph`` and
    ``CauchyProcess``, which are not diffusions.
    """
    if isinstance(spec, BrownianMotion):
        sigma = spec.sigma
        return CoefficientField(
            drift=lambda t, x: np.zeros_like(x),
            diffusion=lambda t, x: np.full((1, 1), sigma),
            lipschitz_hint=1.0,
            affine=AffineForm(diff_const=sigma),
        )
    if isinstance(spec, BrownianWithDrift):
        mu, sigma = spec.mu, spec.sigma
        return CoefficientField(
            drift=lambda t, x: np.full_like(x, mu),
            diffusion=lambda t, x: np.full((1, 1), sigma),
            lipschitz_hint=1.0,
            affine=AffineForm(drift_const=mu, diff_const=sigma),
        )
    if isinstance(spec, OrnsteinUhlenbeck):
        return CoefficientField(
            drift=lambda t, x: -0.5 * x,
            diffusion=lambda t, x: np.ones((1, 1)),
            lipschitz_hint=0.5,
            affine=AffineForm(drift_lin=-0.5, diff_const=1.0),
        )
    if isinstance(spec, SquaredBessel):
        delta = spec.delta
        return CoefficientField(
            drift=lambda t, x: np.full_like(x, delta),
            diffusion=lambda t, x: 2.0 * np.sqrt(np.maximum(x, 0.0)).reshape(1, 1),
            holder_hint=0.5,
            affine=AffineForm(drift_const=delta, diff_const=2.0, sqrt_diffusion=True),
        )
    raise UnsupportedOperationError(
        f"{type(spec).__name__} is not a diffusion; no coefficient field"
    )


def _gaussian_moments(spec: ProcessSpec, t: float, x: float) -> tuple[float, float]:
    """(mean, variance) of the time-t marginal for the Gaussian processes."""
    if isinstance(spec, BrownianMotion):
        return x, spec.sigma**2 * t
    if isinstance(spec, BrownianWithDrift):
        return x + spec.mu * t, spec.sigma**2 * t
    if isinstance(spec, OrnsteinUhlenbeck):
        if x != 0.0:
            raise UnsupportedOperationError(
                "mean-reverting transition density is only available from x=0"
            )
        return 0.0, -math.expm1(-t)
    raise UnsupportedOperationError(
        f"no closed-form transition law for {type(spec).__name__}"
    )


def transition_density(spec: ProcessSpec, t: float, x: float, y):
    """Closed-form transition density p(t, x, y), vectorized over ``y``.

    Supported: Brownian motion (with or without drift), the mean-reverting
    process from ``x = 0``, and the Cauchy process.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    y_arr = np.asarray(y, dtype=float)
    if isinstance(spec, CauchyProcess):
        dens = t / (np.pi * (t**2 + (y_arr - x) ** 2))
    else:
        mean, var = _gaussian_moments(spec, t, x)
        dens = np.exp(-((y_arr - mean) ** 2) / (2.0 * var)) / math.sqrt(
            2.0 * math.pi * var
        )
    return float(dens) if np.isscalar(y) else dens


def transition_cdf(spec: ProcessSpec, t: float, x: float, y):
    """Closed-form transition CDF P(X_t <= y | X_0 = x), vectorized over ``y``.

    Same support set as :func:`transition_density`.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    y_arr = np.asarray(y, dtype=float)
    if isinstance(spec, CauchyProcess):
        cdf = 0.5 + np.arctan((y_arr - x) / t) / np.pi
    else:
        mean, var = _gaussian_moments(spec, t, x)
        cdf = ndtr((y_arr - mean) / math.sqrt(var))
    return float(cdf) if np.isscalar(y) else cdf


def _sample_telegraph(spec: Telegraph, t: float, x: float, stream: RngStream) -> float:
    vel = spec.speed if stream.uniforms(1)[0] < 0.5 else -spec.speed
    pos = x
    remaining = t
    while True:
        # analytic integration between switch times: no discretization
        tau = -math.log(1.0 - stream.uniforms(1)[0]) / spec.rate
        if tau >= remaining:
            return pos + vel * remaining
        pos += vel * tau
        remaining -= tau
        vel = -vel


def sample_terminal(spec: ProcessSpec, t: float, x: float, stream: RngStream) -> float:
    """Exact draw of the process at time ``t`` started from ``x``.

    ``t = 0`` returns ``x`` without consuming randomness. SquaredBessel has
    no exact sampler; use the Euler scheme.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return float(x)
    if isinstance(spec, SquaredBessel):
        raise UnsupportedOperationError(
            "SquaredBessel has no exact terminal sampler; simulate with euler_path"
        )
    if isinstance(spec, CauchyProcess):
        return x + t * standard_cauchy(stream)
    if isinstance(spec, Telegraph):
        return _sample_telegraph(spec, t, x, stream)
    if isinstance(spec, OrnsteinUhlenbeck):
        g = stream.gaussians(1)[0]
        return x * math.exp(-0.5 * t) + math.sqrt(-math.expm1(-t)) * g
    mean, var = _gaussian_moments(spec, t, x)
    return mean + math.sqrt(var) * stream.gaussians(1)[0]


_PROCESS_RE = re.compile(r"^\s*([a-z]+)\s*(?:\(\s*(.*?)\s*\))?\s*$")

_FIELD_NAMES = {
    "bm": {"sigma"},
    "bmdrift": {"mu", "sigma"},
    "ou": set(),
    "sqbessel": {"delta"},
    "telegraph": {"lambda", "v"},
    "cauchy": set(),
}


def parse_process(text: str) -> ProcessSpec:
    """Parse the canonical textual form, e.g. ``bm(sigma=1)`` or ``ou``.

    Raises :class:`ConfigError` naming the offending token on bad input.
    """
    m = _PROCESS_RE.match(text)
    if m is None:
        raise ConfigError(f"unparseable process form: {text!r}")
    name, body = m.group(1), m.group(2)
    if name not in _FIELD_NAMES:
        raise ConfigError(f"unknown process name: {name!r}")
    kwargs: dict[str, float] = {}
    if body:
        for part in body.split(","):
            if "=" not in part:
                raise ConfigError(f"expected key=value in process form, got {part!r}")
            key, _, val = part.partition("=")
            key = key.strip()
            if key not in _FIELD_NAMES[name]:
                raise ConfigError(f"unknown parameter {key!r} for process {name!r}")
            try:
                kwargs[key] = float(val)
            except ValueError:
                raise ConfigError(
                    f"parameter {key!r} of process {name!r} is not a number: {val!r}"
                ) from None
    try:
        if name == "bm":
            return BrownianMotion(**kwargs)
        if name == "bmdrift":
            return BrownianWithDrift(**kwargs)
        if name == "ou":
            return OrnsteinUhlenbeck()
        if name == "sqbessel":
            return SquaredBessel(**kwargs)
        if name == "telegraph":
            return Telegraph(
                rate=kwargs.get("lambda", 1.0), speed=kwargs.get("v", 1.0)
            )
        return CauchyProcess()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid parameters for process {name!r}: {exc}") from None


def format_process(spec: ProcessSpec) -> str:
    """Inverse of :func:`parse_process` (canonical textual form)."""
    if isinstance(spec, BrownianMotion):
        return f"bm(sigma={spec.sigma!r})"
    if isinstance(spec, BrownianWithDrift):
        return f"bmdrift(mu={spec.mu!r},sigma={spec.sigma!r})"
    if isinstance(spec, OrnsteinUhlenbeck):
        return "ou"
    if isinstance(spec, SquaredBessel):
        return f"sqbessel(delta={spec.delta!r})"
    if isinstance(spec, Telegraph):
        return f"telegraph(lambda={spec.rate!r},v={spec.speed!r})"
    return "cauchy"
