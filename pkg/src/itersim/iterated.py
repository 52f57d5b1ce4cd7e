"""Composition schemes: iterated paths, two-sided pairs, and time changes.

The central object approximates Z_t = X(|Y_t|) at level n: an inner Euler
path for Y on [0, T], its grid supremum M_n, an outer Euler path for X on
[0, M_n] with exactly n steps, and the n + 1 composed knots

    knots[k] = Xbar((M_n / n) * floor((n / M_n) * |Ybar(k T / n)|)).

Between knots the scheme is the linear interpolant of the knot sequence
(never of the underlying paths). The module also houses the real-line
indexed pair process with an optional multiplicative killing weight, and the
scalar time change X(alpha(Y_t)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .errors import NumericsError
from .processes import ProcessSpec, coefficients_of
from .rng import RngStream
from .sde import CoefficientField, EulerPath, euler_path

__all__ = [
    "IteratedPath",
    "simulate_iterated",
    "compose_knots",
    "floor_indices",
    "knot_times",
    "eval_iterated",
    "two_sided_sample",
    "time_changed_value",
    "write_iterated_csv",
]


@dataclass(frozen=True)
class IteratedPath:
    """A level-n composed path: knots of X(|Y|) on the uniform grid of [0, T].

    ``knots[k]`` approximates Z(k T / n); ``m_n`` is the grid supremum of
    |Ybar|; ``seeds`` carries the (master_seed, stream_index) pairs of the
    inner and outer drivers.
    """

    T: float
    n: int
    knots: np.ndarray
    m_n: float
    inner_path: EulerPath
    outer_path: EulerPath
    seeds: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        self.knots.setflags(write=False)


def _as_field(spec) -> CoefficientField:
    return spec if isinstance(spec, CoefficientField) else coefficients_of(spec)


def floor_indices(abs_y: np.ndarray, m_n: float, n: int) -> np.ndarray:
    """Outer-grid indices floor(n |y| / M_n), guarded at both ends.

    In exact arithmetic the index is n precisely when |y| = M_n; the guards
    keep that property under floating-point roundoff.
    """
    idx = np.floor((n * abs_y) / m_n).astype(np.int64)
    np.minimum(idx, n - 1, out=idx)
    idx[abs_y == m_n] = n
    return idx


def compose_knots(inner: EulerPath, outer: EulerPath, n: int, m_n: float) -> np.ndarray:
    """Read the composed knots off the two stored paths."""
    abs_y = np.abs(inner.values[:, 0])
    return outer.values[floor_indices(abs_y, m_n, n), 0].copy()


def simulate_iterated(
    position,
    time_proc,
    x0: float,
    y0: float,
    T: float,
    n: int,
    streams: tuple[RngStream, RngStream],
) -> IteratedPath:
    """Simulate one level-n composed path of X(|Y|) on [0, T].

    ``position`` and ``time_proc`` are process records or coefficient fields.
    The first stream drives Y, the second X. When the inner path is
    identically zero on its grid (M_n = 0) the composed path is the constant
    ``x0`` and the outer path degenerates to the single knot at time 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pos_cf = _as_field(position)
    time_cf = _as_field(time_proc)
    y_stream, x_stream = streams

    inner = euler_path(time_cf, y0, T, n, y_stream)
    abs_y = np.abs(inner.values[:, 0])
    m_n = float(np.max(abs_y))

    if m_n == 0.0:
        outer = EulerPath(
            t0=0.0,
            T=0.0,
            n=0,
            grid=np.zeros(1),
            values=np.full((1, 1), float(x0)),
            driving_seed=(x_stream.master_seed, x_stream.stream_index),
        )
        knots = np.full(n + 1, float(x0))
    else:
        outer = euler_path(pos_cf, x0, m_n, n, x_stream)
        knots = compose_knots(inner, outer, n, m_n)

    return IteratedPath(
        T=T,
        n=n,
        knots=knots,
        m_n=m_n,
        inner_path=inner,
        outer_path=outer,
        seeds=(inner.driving_seed, outer.driving_seed),
    )


def knot_times(path: IteratedPath) -> np.ndarray:
    """The uniform knot grid k T / n (shared with the inner path)."""
    return path.inner_path.grid


def eval_iterated(path: IteratedPath, t) -> float | np.ndarray:
    """Linear interpolation between composed knots (the scheme's output)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > path.T):
        raise ValueError(f"t outside the path range [0, {path.T}]")
    out = np.interp(t_arr, knot_times(path), path.knots)
    return float(out) if np.isscalar(t) else out


def _killing_integral(c: Callable, path: EulerPath) -> float:
    """Left-Riemann approximation of the integral of c along the path."""
    vals = path.values[:-1, 0]
    dt = (path.T - path.t0) / path.n
    try:
        contrib = np.asarray(c(vals), dtype=float)
        if contrib.shape != vals.shape:
            raise TypeError("not vectorized")
    except Exception:
        contrib = np.array([float(c(v)) for v in vals])
    return float(dt * np.sum(contrib))


def two_sided_sample(
    xplus: CoefficientField,
    xminus: CoefficientField,
    x1: float,
    x2: float,
    s: float,
    n: int,
    stream: RngStream,
    c_plus: Callable | None = None,
    c_minus: Callable | None = None,
) -> tuple[tuple[float, float], float]:
    """One draw of the pair process at signed time ``s``, with killing weight.

    Positive ``s`` evolves the first coordinate by X+ on [0, s] (the second
    stays ``x2``); negative ``s`` evolves the second coordinate by X- on
    [0, -s]. The weight multiplies in exp(-I) where I is the left-Riemann
    integral of the active branch's killing rate along its path; it is
    exactly 1 when no rate is supplied. ``s = 0`` returns ((x1, x2), 1)
    without consuming randomness.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if s == 0.0:
        return ((float(x1), float(x2)), 1.0)
    if s > 0.0:
        path = euler_path(xplus, x1, s, n, stream)
        weight = math.exp(-_killing_integral(c_plus, path)) if c_plus else 1.0
        return ((float(path.values[-1, 0]), float(x2)), weight)
    path = euler_path(xminus, x2, -s, n, stream)
    weight = math.exp(-_killing_integral(c_minus, path)) if c_minus else 1.0
    return ((float(x1), float(path.values[-1, 0])), weight)


def time_changed_value(
    position: CoefficientField,
    time_proc: CoefficientField,
    alpha: Callable[[float], float],
    x0: float,
    y0: float,
    t: float,
    n: int,
    streams: tuple[RngStream, RngStream],
) -> float:
    """Terminal value of X(alpha(Y_t)): Euler for Y on [0, t], then X.

    ``alpha`` must be positive and increasing (documented precondition).
    A non-finite alpha output raises :class:`NumericsError`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    y_stream, x_stream = streams
    y_path = euler_path(_as_field(time_proc), y0, t, n, y_stream)
    y_t = float(y_path.values[-1, 0])
    a = float(alpha(y_t))
    if not math.isfinite(a):
        raise NumericsError(f"time change alpha({y_t}) is non-finite")
    if a <= 0.0:
        raise ValueError(f"time change alpha({y_t}) = {a} is not positive")
    x_path = euler_path(_as_field(position), x0, a, n, x_stream)
    return float(x_path.values[-1, 0])


def write_iterated_csv(path: IteratedPath, out: TextIO) -> None:
    """Serialize knots as ``t,z`` rows with ``#`` metadata header lines."""
    (ms_y, si_y), (ms_x, si_x) = path.seeds
    out.write(f"# n={path.n}\n")
    out.write(f"# T={path.T:.17g}\n")
    out.write(f"# m_n={path.m_n:.17g}\n")
    out.write(f"# seeds=({ms_y},{si_y}),({ms_x},{si_x})\n")
    out.write("t,z\n")
    times = knot_times(path)
    for k in range(path.n + 1):
        out.write(f"{times[k]:.17g},{path.knots[k]:.17g}\n")
