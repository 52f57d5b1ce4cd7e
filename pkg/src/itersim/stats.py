"""Trajectory statistics: variations, density comparison, strong error, rates.

The strong-error harness couples every level to a reference path through a
shared noise source: the time process uses one fine increment sequence
aggregated per level, and the position process reads one fine Brownian
substrate at each level's own grid. The density harness compares scheme
samples against the deterministic quadrature oracle with an exact
one-sample Kolmogorov-Smirnov distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .errors import NumericsError, UnsupportedOperationError
from .feynman_kac import (
    MonteCarloEstimate,
    QuadratureRule,
    _estimate_from_samples,
    _fill_parallel,
    _mapped_nodes,
)
from .iterated import _as_field, compose_knots, simulate_iterated
from .processes import (
    CauchyProcess,
    _gaussian_moments,
    transition_cdf,
    transition_density,
)
from .rng import path_streams
from .sde import CoefficientField, euler_path_from_increments

__all__ = [
    "Histogram",
    "ErrorCurve",
    "DensityComparison",
    "variation_estimate",
    "density_compare",
    "strong_error",
    "fit_order",
    "build_histogram",
    "write_histogram_csv",
    "write_density_csv",
    "write_error_curve_csv",
]


@dataclass(frozen=True)
class Histogram:
    """Binned sample counts: strictly increasing edges covering all samples."""

    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        object.__setattr__(self, "edges", np.asarray(self.edges, dtype=float))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))
        self.edges.setflags(write=False)
        self.counts.setflags(write=False)
        if not np.all(np.diff(self.edges) > 0):
            raise ValueError("edges must be strictly increasing")
        if int(np.sum(self.counts)) != self.total:
            raise ValueError("counts must sum to total")


@dataclass(frozen=True)
class ErrorCurve:
    """Per-level moments of the coupled sup-error, with the moment order.

    ``errors[i]`` estimates E[sup-knot-error^(2p)] at ``levels[i]``. Errors
    are nonnegative; a zero occurs only in the degenerate self-comparison.
    """

    levels: np.ndarray
    errors: np.ndarray
    p: float
    n_paths: int

    def __post_init__(self):
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=np.int64))
        object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))
        self.levels.setflags(write=False)
        self.errors.setflags(write=False)
        if self.p <= 0:
            raise ValueError("moment order p must be positive")
        if len(self.levels) != len(self.errors):
            raise ValueError("levels and errors must have equal length")
        if not np.all(np.diff(self.levels) > 0):
            raise ValueError("levels must be strictly increasing")
        if np.any(self.errors < 0):
            raise ValueError("errors must be nonnegative")


def build_histogram(samples: np.ndarray, bins="fd") -> Histogram:
    """Freedman-Diaconis histogram of a sample set."""
    counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins)
    return Histogram(edges=edges, counts=counts, total=int(counts.sum()))


def variation_estimate(
    position,
    time_proc,
    order: int,
    t: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    x0: float = 0.0,
    y0: float = 0.0,
    threads: int = 1,
) -> MonteCarloEstimate:
    """MC mean of the order-q variation of the scheme along its own knots.

    Each path contributes sum_k (knots[k] - knots[k-1])^q over the level
    ``n_steps`` grid of [0, t]; odd q keeps the sign.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not t > 0:
        raise ValueError("t must be positive")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    pos_cf = _as_field(position)
    time_cf = _as_field(time_proc)
    samples = np.empty(n_paths)

    def fill(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            path = simulate_iterated(
                pos_cf, time_cf, x0, y0, t, n_steps, path_streams(master_seed, k)
            )
            samples[k] = float(np.sum(np.diff(path.knots) ** order))

    _fill_parallel(n_paths, threads, fill)
    return _estimate_from_samples(samples, master_seed, n_paths)


@dataclass(frozen=True)
class DensityComparison:
    """Histogram of scheme samples against the quadrature oracle density.

    ``oracle_density`` is evaluated on ``z_grid``; ``ks_distance`` is the
    exact one-sample KS statistic against the oracle CDF. Both are None when
    the processes expose no closed-form transition laws.
    """

    histogram: Histogram
    z_grid: np.ndarray
    oracle_density: np.ndarray | None
    ks_distance: float | None


def _time_average_rule(
    time_proc, t: float, quad: QuadratureRule
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes u_j > 0 and coefficients c_j so that
    2 int_0^inf even(p_Y)(t,0,u) g(u) du ~ sum_j c_j g(u_j).

    Gaussian-family times substitute u = w^2, which removes the u^{-1/2}
    spike a position kernel puts at u -> 0; Cauchy time substitutes
    u = t tan^2(theta), which compactifies the heavy tail analytically.
    """
    if isinstance(time_proc, CauchyProcess):
        theta, w = _mapped_nodes(quad.nodes, 0.0, 0.5 * math.pi)
        tan_t = np.tan(theta)
        coeff = w * (4.0 / math.pi) * tan_t * (1.0 + tan_t**2) / (1.0 + tan_t**4)
        return t * tan_t**2, coeff
    mean_t, var_t = _gaussian_moments(time_proc, t, 0.0)
    w_hi = math.sqrt(abs(mean_t) + quad.window_sds * math.sqrt(var_t))
    w_nodes, w_wts = _mapped_nodes(quad.nodes, 0.0, w_hi)
    u_nodes = w_nodes**2
    even = 0.5 * (
        transition_density(time_proc, t, 0.0, u_nodes)
        + transition_density(time_proc, t, 0.0, -u_nodes)
    )
    return u_nodes, 2.0 * even * 2.0 * w_nodes * w_wts


def _oracle_density_grid(
    position, time_proc, t: float, x0: float, z: np.ndarray, quad: QuadratureRule
) -> np.ndarray:
    """p_Z(z) = 2 int_0^inf even(p_Y)(t,0,u) p_X(u,x0,z) du by quadrature."""
    u_nodes, coeff = _time_average_rule(time_proc, t, quad)
    # rows: time nodes; columns: z
    kernel = np.stack([transition_density(position, u, x0, z) for u in u_nodes])
    return coeff @ kernel


def _oracle_cdf_at(
    position, time_proc, t: float, x0: float, z: np.ndarray, quad: QuadratureRule
) -> np.ndarray:
    """F_Z(z) = 2 int_0^inf even(p_Y)(t,0,u) F_X(u,x0,z) du by quadrature."""
    u_nodes, coeff = _time_average_rule(time_proc, t, quad)
    kernel = np.stack([transition_cdf(position, u, x0, z) for u in u_nodes])
    return coeff @ kernel


def _ks_one_sample(samples: np.ndarray, cdf_at_samples: np.ndarray) -> float:
    """Exact one-sample KS distance given the model CDF at the sample points."""
    order = np.argsort(samples)
    f = cdf_at_samples[order]
    n = samples.size
    grid = np.arange(n + 1) / n
    return float(max(np.max(grid[1:] - f), np.max(f - grid[:-1])))


def density_compare(
    position,
    time_proc,
    t: float,
    samples,
    z_grid,
    quad: QuadratureRule | None = None,
    x0: float = 0.0,
) -> DensityComparison:
    """Compare scheme samples with the quadrature density of X(|Y_t|).

    When a transition law is missing the histogram is still built and the
    oracle fields come back None.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    z_grid = np.asarray(z_grid, dtype=float)
    quad = quad or QuadratureRule()
    hist = build_histogram(samples)
    try:
        dens = _oracle_density_grid(position, time_proc, t, x0, z_grid, quad)
        cdf_vals = _oracle_cdf_at(position, time_proc, t, x0, samples, quad)
    except UnsupportedOperationError:
        return DensityComparison(
            histogram=hist, z_grid=z_grid, oracle_density=None, ks_distance=None
        )
    return DensityComparison(
        histogram=hist,
        z_grid=z_grid,
        oracle_density=dens,
        ks_distance=_ks_one_sample(samples, cdf_vals),
    )


def _substrate_increments(w_grid: np.ndarray, w_vals: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Increments of the substrate Brownian motion read at the times ``taus``."""
    return np.diff(np.interp(taus, w_grid, w_vals))


def _coupled_path_knots(
    pos_cf: CoefficientField,
    time_cf: CoefficientField,
    T: float,
    all_levels: Sequence[int],
    n_ref: int,
    dw_fine: np.ndarray,
    w_grid: np.ndarray,
    w_vals: np.ndarray,
    x0: float,
    y0: float,
) -> dict[int, np.ndarray]:
    """Knots of every level (reference included) from one shared noise source.

    Raises ``_HeadroomExceeded`` when a level's M_n leaves the substrate.
    """
    headroom = w_grid[-1]
    knots: dict[int, np.ndarray] = {}
    for n in all_levels:
        step = n_ref // n
        dw_n = dw_fine.reshape(n, step).sum(axis=1)
        inner = euler_path_from_increments(time_cf, y0, T, dw_n)
        abs_y = np.abs(inner.values[:, 0])
        m_n = float(np.max(abs_y))
        if m_n == 0.0:
            knots[n] = np.full(n + 1, float(x0))
            continue
        if m_n > headroom:
            raise _HeadroomExceeded(m_n)
        taus = np.linspace(0.0, m_n, n + 1)
        db = _substrate_increments(w_grid, w_vals, taus)
        outer = euler_path_from_increments(pos_cf, x0, m_n, db)
        knots[n] = compose_knots(inner, outer, n, m_n)
    return knots


class _HeadroomExceeded(Exception):
    def __init__(self, m_n: float):
        self.m_n = m_n


def strong_error(
    position,
    time_proc,
    T: float,
    levels: Sequence[int],
    ref_multiplier: int,
    n_paths: int,
    p: int,
    master_seed: int,
    x0: float = 0.0,
    y0: float = 0.0,
    threads: int = 1,
) -> ErrorCurve:
    """Coupled strong-error curve of the composition scheme.

    Per path, one fine increment sequence drives every level's inner path
    (aggregated), and one fine Brownian substrate over [0, headroom] drives
    every level's outer path (read at each level's own grid). The reference
    is the same scheme at ``ref_multiplier * max(levels)``; the per-level
    error is the sup over the coarse knots of the distance to the reference
    knots at the same times, and the curve reports the mean of error^(2p).

    If a realized M_n exceeds the substrate headroom 4 sqrt(T) + |y0|, the
    substrate is redrawn once at doubled headroom from a retry stream (the
    time increments are reused); a second excess raises NumericsError.
    """
    levels = sorted(int(n) for n in levels)
    if len(levels) == 0:
        raise ValueError("levels must be nonempty")
    if len(set(levels)) != len(levels):
        raise ValueError("levels must be distinct")
    if ref_multiplier < 1:
        raise ValueError("ref_multiplier must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    if p < 1:
        raise ValueError("p must be >= 1")
    n_ref = ref_multiplier * max(levels)
    for n in levels:
        if n_ref % n != 0:
            raise ValueError(f"level {n} does not divide the reference level {n_ref}")
    pos_cf = _as_field(position)
    time_cf = _as_field(time_proc)
    all_levels = levels if levels[-1] == n_ref else levels + [n_ref]
    n_sub = 8 * n_ref
    base_headroom = 4.0 * math.sqrt(T) + abs(y0)
    errs = np.empty((n_paths, len(levels)))

    def run_path(k: int) -> np.ndarray:
        st, sx = path_streams(master_seed, k)
        dw_fine = st.gaussians(n_ref) * math.sqrt(T / n_ref)
        headroom = base_headroom
        noise = sx
        for attempt in range(2):
            w_vals = np.empty(n_sub + 1)
            w_vals[0] = 0.0
            np.cumsum(noise.gaussians(n_sub) * math.sqrt(headroom / n_sub), out=w_vals[1:])
            w_grid = np.linspace(0.0, headroom, n_sub + 1)
            try:
                knots = _coupled_path_knots(
                    pos_cf, time_cf, T, all_levels, n_ref, dw_fine,
                    w_grid, w_vals, x0, y0,
                )
            except _HeadroomExceeded as exc:
                if attempt == 1:
                    raise NumericsError(
                        f"substrate headroom {headroom} exceeded by M_n={exc.m_n} "
                        "after one retry"
                    ) from None
                headroom *= 2.0
                _, noise = path_streams(master_seed, k, block=1)
                continue
            break
        ref = knots[n_ref]
        out = np.empty(len(levels))
        for i, n in enumerate(levels):
            stride = n_ref // n
            out[i] = float(np.max(np.abs(knots[n] - ref[::stride])))
        return out

    def fill(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            errs[k] = run_path(k)

    _fill_parallel(n_paths, threads, fill)
    moments = np.mean(errs ** (2 * p), axis=0)
    return ErrorCurve(
        levels=np.array(levels, dtype=np.int64),
        errors=moments,
        p=p,
        n_paths=n_paths,
    )


def fit_order(curve: ErrorCurve) -> tuple[float, float]:
    """Least-squares slope of log(error^(1/2p)) against log(1/n).

    Returns (alpha, intercept); alpha estimates the pathwise order.
    """
    if len(curve.levels) < 3:
        raise ValueError("need at least 3 levels to fit an order")
    if np.any(curve.errors <= 0):
        raise ValueError("errors must be positive to fit an order")
    y = np.log(curve.errors) / (2.0 * curve.p)
    x = np.log(1.0 / curve.levels.astype(float))
    alpha, intercept = np.polyfit(x, y, 1)
    return float(alpha), float(intercept)


def write_histogram_csv(hist: Histogram, out: TextIO) -> None:
    """Serialize as ``bin_left,bin_right,count`` rows."""
    out.write("bin_left,bin_right,count\n")
    for i in range(hist.counts.size):
        out.write(
            f"{hist.edges[i]:.17g},{hist.edges[i + 1]:.17g},{int(hist.counts[i])}\n"
        )


def write_density_csv(z_grid: np.ndarray, density: np.ndarray, out: TextIO) -> None:
    """Serialize an oracle curve as ``z,p_oracle`` rows."""
    out.write("z,p_oracle\n")
    for z, d in zip(z_grid, density):
        out.write(f"{z:.17g},{d:.17g}\n")


def write_error_curve_csv(curve: ErrorCurve, out: TextIO) -> None:
    """Serialize as ``n,error_moment,p,n_paths`` rows."""
    out.write("n,error_moment,p,n_paths\n")
    for n, e in zip(curve.levels, curve.errors):
        out.write(f"{int(n)},{e:.17g},{curve.p},{curve.n_paths}\n")
