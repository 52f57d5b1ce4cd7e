"""Deterministic, parallel-safe random number streams.

Every stochastic routine in the library draws from an :class:`RngStream`
keyed by a ``(master_seed, stream_index)`` pair. Streams are counter-based
(Philox), so deriving the stream for path ``k`` of a Monte Carlo job is O(1)
and the result of any experiment depends only on the master seed, never on
scheduling order or worker count.

Stream index layout used by the estimators: path ``k`` of a job owns the two
indices ``2k`` (time process) and ``2k + 1`` (position process), shifted into
a disjoint plane by an optional block tag, see :func:`path_streams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngStream",
    "derive_stream",
    "path_streams",
    "standard_gaussian",
    "standard_cauchy",
]

_MASK64 = (1 << 64) - 1

# Stream indices carry (block << _BLOCK_SHIFT) | (2k + component), so one job
# can address 2^32 paths and 2^31 disjoint retry/auxiliary blocks.
_BLOCK_SHIFT = 33


@dataclass
class RngStream:
    """A single-owner random stream identified by (master_seed, stream_index).

    Two streams with equal identifiers produce identical sequences; streams
    with distinct indices are statistically independent. The underlying
    generator is Philox, keyed directly by the identifier pair.
    """

    master_seed: int
    stream_index: int
    _gen: np.random.Generator = field(repr=False)

    def gaussians(self, n: int) -> np.ndarray:
        """Draw ``n`` standard normal variates as one array."""
        return self._gen.standard_normal(n)

    def uniforms(self, n: int) -> np.ndarray:
        """Draw ``n`` uniforms on [0, 1)."""
        return self._gen.random(n)


def derive_stream(master_seed: int, stream_index: int) -> RngStream:
    """Create the stream for ``(master_seed, stream_index)``.

    The output sequence depends only on the two integers (taken modulo
    2^64), so the same call always rebuilds the same stream.
    """
    key = np.array([master_seed & _MASK64, stream_index & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return RngStream(master_seed=master_seed, stream_index=stream_index, _gen=gen)


def path_streams(
    master_seed: int, path_index: int, block: int = 0
) -> tuple[RngStream, RngStream]:
    """Derive the (time, position) stream pair owned by one Monte Carlo path.

    ``block`` selects a disjoint index plane; estimators use it to give
    retries and auxiliary quadrature-node jobs their own streams without
    colliding with the main paths.
    """
    base = (block << _BLOCK_SHIFT) | (2 * path_index)
    return derive_stream(master_seed, base), derive_stream(master_seed, base + 1)


def standard_gaussian(stream: RngStream) -> float:
    """One N(0, 1) variate; advances the stream."""
    return float(stream._gen.standard_normal())


def standard_cauchy(stream: RngStream) -> float:
    """One standard Cauchy variate (density 1/(pi (1 + y^2))).

    Inverse-CDF construction tan(pi (U - 1/2)) on uniform U, rejecting the
    exact endpoint U = 0 (numpy uniforms live in [0, 1), so 1 cannot occur).
    """
    while True:
        u = float(stream._gen.random())
        if u != 0.0:
            return math.tan(math.pi * (u - 0.5))
