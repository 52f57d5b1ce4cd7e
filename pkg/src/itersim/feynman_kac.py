"""Monte Carlo estimators and quadrature oracles for iterated expectations.

The estimators sample E[f(X^x(|Y_t|))] and its two-sided and killed
variants; the oracles integrate the same quantities deterministically from
closed-form transition densities, via

    v(t, x) = 2 * integral_0^inf even_part(p_Y)(t, 0, u) * (P^u f)(x) du.

Every estimator derives per-path streams from the master seed, so results
are independent of the worker count, and carries a batch-stability flag so
heavy-tailed time changes (Cauchy) report divergence instead of a silent
number.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.special import betaln, roots_jacobi

from .errors import NumericsError, UnsupportedOperationError
from .functions import GaussianForm, SmoothFunction
from .iterated import two_sided_sample
from .processes import (
    BrownianMotion,
    BrownianWithDrift,
    CauchyProcess,
    OrnsteinUhlenbeck,
    ProcessSpec,
    SquaredBessel,
    Telegraph,
    _gaussian_moments,
    coefficients_of,
    sample_terminal,
    transition_density,
)
from .rng import RngStream, path_streams, standard_cauchy
from .sde import CoefficientField, euler_path

__all__ = [
    "MonteCarloEstimate",
    "QuadratureRule",
    "IbmResidualReport",
    "IntertwineReport",
    "fk_estimate",
    "fk_oracle",
    "boundary_term_ibm",
    "ibm_pde_residual",
    "ibm_pde_terms",
    "two_sided_fk_estimate",
    "beam_estimate",
    "intertwine_apply",
    "intertwine_check",
    "half_derivative_transform",
    "write_estimate_csv",
]

_N_BATCHES = 10
_BATCH_SPREAD_FACTOR = 10.0


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error and provenance.

    ``stable`` is the batch diagnostic: paths are split into 10 batches and
    the estimate is flagged unstable when any sample is non-finite or the
    batch means spread by more than 10 pooled standard errors. Heavy-tailed
    functionals (Cauchy time changes) fail this flag instead of returning a
    quietly meaningless number.
    """

    mean: float
    stderr: float
    n_paths: int
    seed: int
    stable: bool = True

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("n_paths must be >= 2")
        if math.isfinite(self.stderr) and self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule: node count and truncation window.

    ``window_sds`` is the half-width of Gaussian integration windows in
    standard deviations; heavy-tailed integrals use compactifying
    substitutions instead of a window.
    """

    nodes: int = 256
    window_sds: float = 12.0
    scheme: str = "gauss-legendre"

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("nodes must be >= 2")
        if not self.window_sds > 0:
            raise ValueError("window_sds must be positive")
        if self.scheme != "gauss-legendre":
            raise ValueError(f"unknown quadrature scheme: {self.scheme!r}")


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _mapped_nodes(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped from [-1, 1] to [lo, hi]."""
    xi, w = _leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (xi + 1.0), half * w


def _estimate_from_samples(
    samples: np.ndarray, seed: int, n_paths: int
) -> MonteCarloEstimate:
    with np.errstate(all="ignore"):
        mean = float(np.mean(samples))
        stderr = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
        finite = bool(np.all(np.isfinite(samples)))
        if not finite:
            stable = False
        elif samples.size < _N_BATCHES:
            stable = True
        else:
            batch_means = np.array(
                [np.mean(b) for b in np.array_split(samples, _N_BATCHES)]
            )
            spread = float(np.max(batch_means) - np.min(batch_means))
            stable = spread <= _BATCH_SPREAD_FACTOR * stderr
    return MonteCarloEstimate(
        mean=mean, stderr=stderr, n_paths=n_paths, seed=seed, stable=stable
    )


def _fill_parallel(n_paths: int, threads: int, fill: Callable[[int, int], None]) -> None:
    """Run ``fill(lo, hi)`` over a partition of path indices.

    Each path derives its own streams from its global index, so the
    partition (and hence the thread count) cannot change any sample.
    """
    if threads <= 1:
        fill(0, n_paths)
        return
    bounds = np.linspace(0, n_paths, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(fill, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for fut in futures:
            fut.result()


_EXACT_SAMPLERS = (
    BrownianMotion,
    BrownianWithDrift,
    OrnsteinUhlenbeck,
    Telegraph,
    CauchyProcess,
)


def _terminal_draw(
    spec, t: float, x: float, stream: RngStream, n_steps: int
) -> float:
    """Exact terminal draw when the record supports one, else Euler."""
    if isinstance(spec, _EXACT_SAMPLERS):
        return sample_terminal(spec, t, x, stream)
    if t == 0.0:
        return float(x)
    field = spec if isinstance(spec, CoefficientField) else coefficients_of(spec)
    return float(euler_path(field, x, t, n_steps, stream).values[-1, 0])


def fk_estimate(
    position,
    time_proc,
    f: Callable[[float], float],
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of E[f(X^x(|Y_t|))] with Y started at 0.

    Terminal values are drawn exactly for records with closed terminal laws
    and by Euler with ``n_steps`` otherwise. Path ``k`` owns the derived
    stream pair ``(2k, 2k+1)`` of ``master_seed``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return _fk_estimate_block(
        position, time_proc, f, t, x, n_paths, n_steps, master_seed,
        block=0, threads=threads,
    )


def _markov_apply(
    position: ProcessSpec, f: Callable, u: float, x: float, quad: QuadratureRule
) -> float:
    """(P^u f)(x) = E[f(X_u) | X_0 = x] by closed form or inner quadrature."""
    if u == 0.0:
        return float(f(x))
    if isinstance(position, CauchyProcess):
        # z = x + u tan(phi) compactifies the Cauchy kernel exactly
        phi, w = _mapped_nodes(quad.nodes, -0.5 * math.pi, 0.5 * math.pi)
        vals = np.asarray(f(x + u * np.tan(phi)), dtype=float)
        return float(np.sum(w * vals) / math.pi)
    mean, var = _gaussian_moments(position, u, x)
    if isinstance(f, GaussianForm):
        return f.convolve_gaussian(mean, var)
    sd = math.sqrt(var)
    z, w = _mapped_nodes(
        quad.nodes, mean - quad.window_sds * sd, mean + quad.window_sds * sd
    )
    dens = np.exp(-((z - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return float(np.sum(w * dens * np.asarray(f(z), dtype=float)))


def fk_oracle(
    position: ProcessSpec,
    time_proc: ProcessSpec,
    f: Callable[[float], float],
    t: float,
    x: float,
    quad: QuadratureRule | None = None,
) -> float:
    """Deterministic quadrature of 2 int_0^inf even(p_Y)(t,0,u) (P^u f)(x) du.

    Both processes must expose closed-form transition laws. The even part of
    the time density is always formed explicitly, so drifted time processes
    are handled correctly. Cauchy time uses the substitution u = t tan^2(s),
    which makes the integrand analytic on the whole mapped interval.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    quad = quad or QuadratureRule()

    if isinstance(time_proc, CauchyProcess):
        theta, w = _mapped_nodes(quad.nodes, 0.0, 0.5 * math.pi)
        tan_t = np.tan(theta)
        jac = (4.0 / math.pi) * tan_t * (1.0 + tan_t**2) / (1.0 + tan_t**4)
        u_nodes = t * tan_t**2
        vals = np.array([_markov_apply(position, f, u, x, quad) for u in u_nodes])
        return float(np.sum(w * jac * vals))

    mean_t, var_t = _gaussian_moments(time_proc, t, 0.0)
    hi = abs(mean_t) + quad.window_sds * math.sqrt(var_t)
    u_nodes, w = _mapped_nodes(quad.nodes, 0.0, hi)
    even = 0.5 * (
        transition_density(time_proc, t, 0.0, u_nodes)
        + transition_density(time_proc, t, 0.0, -u_nodes)
    )
    vals = np.array([_markov_apply(position, f, u, x, quad) for u in u_nodes])
    return float(np.sum(w * 2.0 * even * vals))


def boundary_term_ibm(lap_f: Callable[[float], float], t: float, x: float) -> float:
    """The t-boundary contribution (2 pi t)^{-1/2} Lf(x) of the iterated PDE.

    ``lap_f`` is the position generator applied to f; for a standard
    Brownian position that is Lf = f''/2.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    return float(lap_f(x)) / math.sqrt(2.0 * math.pi * t)


@dataclass(frozen=True)
class IbmResidualReport:
    """Finite-difference audit of the fourth-order PDE at one point.

    ``residual = dt_term - boundary_term - fourth_term`` where ``fourth_term``
    is one eighth of the raw stencil value ``fourth_derivative``. The
    tolerance anchor ``max_term_magnitude`` is the largest magnitude among
    the stencil outputs and the boundary term.
    """

    dt_term: float
    boundary_term: float
    fourth_derivative: float
    fourth_term: float
    residual: float
    max_term_magnitude: float


def ibm_pde_terms(
    f: SmoothFunction,
    t: float,
    x: float,
    h_t: float = 1e-3,
    h_x: float = 0.05,
    quad: QuadratureRule | None = None,
) -> IbmResidualReport:
    """Evaluate each term of dt v = (2 sqrt(2 pi t))^{-1} f'' + (1/8) d4x v.

    The surface v is the Brownian-on-Brownian oracle; time and space
    derivatives use central O(h^2) stencils (5-point for the fourth
    derivative). Requires ``f.d2``.
    """
    if not (t > h_t > 0):
        raise ValueError("need t > h_t > 0")
    if not h_x > 0:
        raise ValueError("h_x must be positive")
    if f.d2 is None:
        raise ValueError("f.d2 (second derivative) is required")
    quad = quad or QuadratureRule()
    bm = BrownianMotion()

    def v(s: float, z: float) -> float:
        return fk_oracle(bm, bm, f.value, s, z, quad)

    dt_term = (v(t + h_t, x) - v(t - h_t, x)) / (2.0 * h_t)
    stencil = (
        v(t, x - 2.0 * h_x)
        - 4.0 * v(t, x - h_x)
        + 6.0 * v(t, x)
        - 4.0 * v(t, x + h_x)
        + v(t, x + 2.0 * h_x)
    )
    fourth_derivative = stencil / h_x**4
    fourth_term = fourth_derivative / 8.0
    boundary = boundary_term_ibm(lambda z: 0.5 * float(f.d2(z)), t, x)
    residual = dt_term - boundary - fourth_term
    max_term = max(abs(dt_term), abs(boundary), abs(fourth_derivative))
    return IbmResidualReport(
        dt_term=dt_term,
        boundary_term=boundary,
        fourth_derivative=fourth_derivative,
        fourth_term=fourth_term,
        residual=residual,
        max_term_magnitude=max_term,
    )


def ibm_pde_residual(
    f: SmoothFunction,
    t: float,
    x: float,
    h_t: float = 1e-3,
    h_x: float = 0.05,
    quad: QuadratureRule | None = None,
) -> float:
    """Residual of the fourth-order PDE at (t, x); see :func:`ibm_pde_terms`."""
    return ibm_pde_terms(f, t, x, h_t=h_t, h_x=h_x, quad=quad).residual


def _pair_field(spec) -> CoefficientField:
    return spec if isinstance(spec, CoefficientField) else coefficients_of(spec)


def two_sided_fk_estimate(
    xplus,
    xminus,
    f_tilde: Callable[[float, float], float],
    time_proc,
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    c_plus: Callable | None = None,
    c_minus: Callable | None = None,
    threads: int = 1,
) -> MonteCarloEstimate:
    """Estimate E[weight * f~(pair at Y_t)] for the pair started at (x, 0).

    ``Y_t`` is drawn exactly (or by Euler when no closed law exists); its
    sign selects which branch evolves. The optional killing rates damp the
    weight by exp(-I) with I the left-Riemann integral of the rate along the
    active branch.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    plus_cf = _pair_field(xplus)
    minus_cf = _pair_field(xminus)
    samples = np.empty(n_paths)

    def fill(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            st, sb = path_streams(master_seed, k)
            s = _terminal_draw(time_proc, t, 0.0, st, n_steps)
            (p1, p2), weight = two_sided_sample(
                plus_cf, minus_cf, x, 0.0, s, n_steps, sb, c_plus, c_minus
            )
            samples[k] = weight * f_tilde(p1, p2)

    _fill_parallel(n_paths, threads, fill)
    return _estimate_from_samples(samples, master_seed, n_paths)


def beam_estimate(
    gm_product: float,
    f_tilde: Callable[[float, float], float],
    xplus,
    xminus,
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    """Two-sided estimate driven by Cauchy time at scale t / sqrt(gm_product).

    ``gm_product`` is the product of the beam's stiffness and mass densities
    evaluated at ``x``. Heavy tails make many functionals divergent; check
    the ``stable`` flag before trusting the mean.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not gm_product > 0:
        raise ValueError("gm_product must be positive")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    plus_cf = _pair_field(xplus)
    minus_cf = _pair_field(xminus)
    scale = t / math.sqrt(gm_product)
    samples = np.empty(n_paths)

    # Heavy Cauchy tails legitimately overflow single probe paths; those
    # paths are recorded as non-finite so the batch diagnostic reports the
    # divergence instead of one path aborting the whole estimate.
    def fill(lo: int, hi: int) -> None:
        with np.errstate(all="ignore"):
            for k in range(lo, hi):
                st, sb = path_streams(master_seed, k)
                s = scale * standard_cauchy(st)
                try:
                    (p1, p2), weight = two_sided_sample(
                        plus_cf, minus_cf, x, 0.0, s, n_steps, sb, None, None
                    )
                    samples[k] = weight * f_tilde(p1, p2)
                except NumericsError:
                    samples[k] = math.inf

    _fill_parallel(n_paths, threads, fill)
    return _estimate_from_samples(samples, master_seed, n_paths)


@lru_cache(maxsize=32)
def _jacobi_rho_rule(
    n: int, alpha: float, beta: float
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Beta(alpha, beta) quadrature on [0, 1].

    Gauss-Jacobi nodes for weight (1-xi)^(beta-1) (1+xi)^(alpha-1) mapped by
    rho = (1+xi)/2; the weights are divided by B(alpha, beta) so they sum
    to 1.
    """
    xi, w = roots_jacobi(n, beta - 1.0, alpha - 1.0)
    rho = 0.5 * (xi + 1.0)
    scale = math.exp((1.0 - alpha - beta) * math.log(2.0) - betaln(alpha, beta))
    w_norm = w * scale
    rho.setflags(write=False)
    w_norm.setflags(write=False)
    return rho, w_norm


def intertwine_apply(
    f: Callable[[float], float],
    alpha: float,
    beta: float,
    x: float,
    quad: QuadratureRule | None = None,
) -> float:
    """Normalized Beta-weighted scaling average E[f(x R)], R ~ Beta(alpha, beta).

    The kernel is normalized to total mass 1, so constants are fixed points.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    quad = quad or QuadratureRule()
    rho, w = _jacobi_rho_rule(quad.nodes, float(alpha), float(beta))
    vals = np.asarray(f(x * rho), dtype=float)
    return float(np.sum(w * vals))


@dataclass(frozen=True)
class IntertwineReport:
    """Both sides of the transport identity at one point, with error bars.

    ``h_estimate`` is the direct MC run at combined index 2(alpha+beta);
    ``transported_mean`` is the Beta-weighted quadrature of per-node MC runs
    at index 2 alpha. ``combined_stderr`` adds both error bars in
    quadrature.
    """

    x: float
    h_estimate: MonteCarloEstimate
    transported_mean: float
    transported_stderr: float

    @property
    def discrepancy(self) -> float:
        return abs(self.h_estimate.mean - self.transported_mean)

    @property
    def combined_stderr(self) -> float:
        return math.sqrt(self.h_estimate.stderr**2 + self.transported_stderr**2)


def intertwine_check(
    f: Callable[[float], float],
    alpha: float,
    beta: float,
    t: float,
    x_grid: Sequence[float],
    n_paths: int,
    n_steps: int,
    quad: QuadratureRule | None = None,
    master_seed: int = 0,
    rho_nodes: int = 24,
    node_paths: int | None = None,
    threads: int = 1,
) -> list[IntertwineReport]:
    """Compare the direct and transported estimates of the mixed evolution.

    For each x: the direct side runs the index-2(alpha+beta) squared Bessel
    process iterated by |BM| on g = the Beta scaling average of f; the
    transported side averages per-node MC runs of the index-2 alpha process
    on f over the Beta quadrature nodes. All runs draw from disjoint stream
    blocks of ``master_seed``.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    quad = quad or QuadratureRule()
    if node_paths is None:
        node_paths = max(n_paths // 5, 2)
    rho, w = _jacobi_rho_rule(rho_nodes, float(alpha), float(beta))
    u_proc = SquaredBessel(delta=2.0 * (alpha + beta))
    x_proc = SquaredBessel(delta=2.0 * alpha)
    time_proc = BrownianMotion()

    def g(z):
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.array([intertwine_apply(f, alpha, beta, zi, quad) for zi in zs])
        return float(out[0]) if np.isscalar(z) or np.asarray(z).ndim == 0 else out

    reports = []
    for ix, xv in enumerate(x_grid):
        base_block = ix * (rho_nodes + 1)
        h_est = _fk_estimate_block(
            u_proc, time_proc, g, t, xv, n_paths, n_steps, master_seed,
            block=base_block, threads=threads,
        )
        node_means = np.empty(rho_nodes)
        node_vars = np.empty(rho_nodes)
        for j in range(rho_nodes):
            est = _fk_estimate_block(
                x_proc, time_proc, f, t, xv * rho[j], node_paths, n_steps,
                master_seed, block=base_block + 1 + j, threads=threads,
            )
            node_means[j] = est.mean
            node_vars[j] = est.stderr**2
        transported = float(np.sum(w * node_means))
        transported_se = float(math.sqrt(np.sum(w**2 * node_vars)))
        reports.append(
            IntertwineReport(
                x=float(xv),
                h_estimate=h_est,
                transported_mean=transported,
                transported_stderr=transported_se,
            )
        )
    return reports


def _fk_estimate_block(
    position,
    time_proc,
    f,
    t: float,
    x: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    block: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    """fk_estimate drawing from stream block ``block`` of the master seed."""
    samples = np.empty(n_paths)

    def fill(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            st, sx = path_streams(master_seed, k, block=block)
            y_t = _terminal_draw(time_proc, t, 0.0, st, n_steps)
            x_val = _terminal_draw(position, abs(y_t), x, sx, n_steps)
            samples[k] = f(x_val)

    _fill_parallel(n_paths, threads, fill)
    return _estimate_from_samples(samples, master_seed, n_paths)


def half_derivative_transform(
    v_slice: Callable[[float], float],
    t: float,
    quad: QuadratureRule | None = None,
) -> float:
    """Gaussian-kernel transform (2 sqrt(pi) t^{3/2})^{-1} int xi e^{-xi^2/4t} v(xi) dxi.

    Substituting xi = 2 sqrt(t) s reduces it to
    (2 / sqrt(pi t)) int_0^inf s e^{-s^2} v(2 sqrt(t) s) ds, integrated on a
    fixed window in s. Constants map to 1/sqrt(pi t); the identity slice
    maps to exactly 1 for every t.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    quad = quad or QuadratureRule()
    s, w = _mapped_nodes(quad.nodes, 0.0, quad.window_sds / math.sqrt(2.0))
    vals = np.asarray(v_slice(2.0 * math.sqrt(t) * s), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericsError("half-derivative integrand is non-finite on the window")
    integrand = s * np.exp(-(s**2)) * vals
    return float(2.0 / math.sqrt(math.pi * t) * np.sum(w * integrand))


def write_estimate_csv(
    rows: Sequence[tuple[float, float, MonteCarloEstimate]], out: TextIO
) -> None:
    """Serialize estimates as ``t,x,mean,stderr,n_paths,seed`` rows."""
    out.write("t,x,mean,stderr,n_paths,seed\n")
    for t, x, est in rows:
        out.write(
            f"{t:.17g},{x:.17g},{est.mean:.17g},{est.stderr:.17g},"
            f"{est.n_paths},{est.seed}\n"
        )
