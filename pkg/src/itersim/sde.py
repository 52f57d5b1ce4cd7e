"""Time-inhomogeneous Euler-Maruyama engine and path interpolants.

A path is simulated on the uniform grid ``t_k = t0 + k (T - t0) / n`` by

    values[k+1] = values[k] + b(t_k, values[k]) dt + sigma(t_k, values[k]) dW_k

with ``dW_k ~ N(0, dt I_p)``. Two evaluation modes are exposed: the
left-constant step interpolant (the composition scheme reads this one) and
the piecewise-linear interpolant.

RNG consumption is unconditional: ``n * dim_noise`` Gaussians are drawn even
when the diffusion vanishes, so paths built from the same stream under
different coefficients stay coupled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from . import _engine
from .errors import NumericsError
from .rng import RngStream

__all__ = [
    "AffineForm",
    "CoefficientField",
    "EulerPath",
    "euler_path",
    "euler_path_from_increments",
    "eval_step",
    "eval_linear",
    "sup_abs",
    "write_path_csv",
]


@dataclass(frozen=True)
class AffineForm:
    """Closed-form tag for scalar coefficients the compiled kernel can step.

    Drift is ``drift_const + drift_lin * x``. Diffusion is
    ``diff_const + diff_lin * x`` when ``sqrt_diffusion`` is false and
    ``diff_const * sqrt(max(x, 0))`` when true.
    """

    drift_const: float = 0.0
    drift_lin: float = 0.0
    diff_const: float = 0.0
    diff_lin: float = 0.0
    sqrt_diffusion: bool = False


@dataclass(frozen=True)
class CoefficientField:
    """Drift/diffusion pair defining an SDE.

    Parameters
    ----------
    drift : callable
        ``(t, x) -> d-vector``; must be total on its domain.
    diffusion : callable
        ``(t, x) -> d x p matrix``.
    dim_state, dim_noise : int
        State dimension ``d`` and driving-noise dimension ``p``.
    lipschitz_hint, holder_hint : float, optional
        Documented regularity constants; carried for reference, not used by
        the scheme.
    affine : AffineForm, optional
        When set (and ``d == p == 1``) the Euler engine steps the path with
        the compiled kernel instead of calling the Python functions. The
        callables remain the source of truth; the tag must describe the same
        coefficients.
    """

    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    dim_state: int = 1
    dim_noise: int = 1
    lipschitz_hint: float | None = None
    holder_hint: float | None = None
    affine: AffineForm | None = None

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_noise < 1:
            raise ValueError("dim_state and dim_noise must be >= 1")
        for name in ("lipschitz_hint", "holder_hint"):
            hint = getattr(self, name)
            if hint is not None and not hint > 0:
                raise ValueError(f"{name} must be positive when present")


@dataclass(frozen=True)
class EulerPath:
    """A simulated path on a uniform grid.

    ``grid`` holds the ``n + 1`` times, ``values`` the ``(n + 1, d)`` states,
    and ``driving_seed`` the ``(master_seed, stream_index)`` pair that drove
    the simulation. Values are immutable after construction.
    """

    t0: float
    T: float
    n: int
    grid: np.ndarray
    values: np.ndarray
    driving_seed: tuple[int, int]

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.values.setflags(write=False)


def _as_state(x, d: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(d)


def _classify_failure(coeffs: CoefficientField, t: float, x: np.ndarray) -> str:
    """Name the coefficient whose output went non-finite at state ``x``."""
    try:
        b = np.asarray(coeffs.drift(t, x), dtype=float)
        if not np.all(np.isfinite(b)):
            return "drift"
        s = np.asarray(coeffs.diffusion(t, x), dtype=float)
        if not np.all(np.isfinite(s)):
            return "diffusion"
    except Exception:
        pass
    return "state update"


def _grid(t0: float, T: float, n: int) -> np.ndarray:
    dt = (T - t0) / n
    grid = t0 + np.arange(n + 1) * dt
    grid[n] = T  # close the right endpoint exactly
    return grid


def euler_path_from_increments(
    coeffs: CoefficientField,
    x0,
    T: float,
    dw: np.ndarray,
    t0: float = 0.0,
    driving_seed: tuple[int, int] = (0, 0),
) -> EulerPath:
    """Run the Euler recursion on externally supplied noise increments.

    ``dw`` has shape ``(n, p)`` (or ``(n,)`` when ``p == 1``) and already
    carries the sqrt(dt) scaling. This is the coupling entry point: a coarse
    path built from aggregated fine increments is exactly the Euler run on
    those increments.
    """
    dw = np.asarray(dw, dtype=float)
    if dw.ndim == 1:
        dw = dw[:, None]
    n = dw.shape[0]
    if n < 1:
        raise ValueError("at least one increment is required")
    if T <= t0:
        raise ValueError("T must exceed t0")
    d, p = coeffs.dim_state, coeffs.dim_noise
    if dw.shape[1] != p:
        raise ValueError(f"increment array has {dw.shape[1]} columns, expected {p}")
    dt = (T - t0) / n

    if coeffs.affine is not None and d == 1 and p == 1:
        a = coeffs.affine
        values = np.empty(n + 1)
        kind = _engine.DIFF_SQRT if a.sqrt_diffusion else _engine.DIFF_AFFINE
        bad = _engine.euler_affine(
            float(np.asarray(x0).reshape(())),
            dt,
            np.ascontiguousarray(dw[:, 0]),
            a.drift_const,
            a.drift_lin,
            kind,
            a.diff_const,
            a.diff_lin,
            values,
        )
        if bad >= 0:
            what = _classify_failure(coeffs, t0 + bad * dt, values[bad : bad + 1])
            raise NumericsError(f"non-finite {what} output at step {bad}")
        values = values[:, None]
    else:
        values = np.empty((n + 1, d))
        x = _as_state(x0, d)
        values[0] = x
        for k in range(n):
            t_k = t0 + k * dt
            b = np.asarray(coeffs.drift(t_k, x), dtype=float).reshape(d)
            if not np.all(np.isfinite(b)):
                raise NumericsError(f"non-finite drift output at step {k}")
            s = np.asarray(coeffs.diffusion(t_k, x), dtype=float).reshape(d, p)
            if not np.all(np.isfinite(s)):
                raise NumericsError(f"non-finite diffusion output at step {k}")
            x = (x + b * dt) + s @ dw[k]
            values[k + 1] = x

    return EulerPath(
        t0=t0, T=T, n=n, grid=_grid(t0, T, n), values=values, driving_seed=driving_seed
    )


def euler_path(
    coeffs: CoefficientField,
    x0,
    T: float,
    n: int,
    stream: RngStream,
    t0: float = 0.0,
) -> EulerPath:
    """Simulate one Euler-Maruyama path of ``coeffs`` from ``x0`` on [t0, T].

    Draws ``n * dim_noise`` Gaussians from ``stream`` unconditionally.
    Raises :class:`NumericsError` naming the step index if a coefficient
    returns a non-finite value.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if T <= t0:
        raise ValueError("T must exceed t0")
    dt = (T - t0) / n
    p = coeffs.dim_noise
    dw = stream.gaussians(n * p).reshape(n, p) * math.sqrt(dt)
    return euler_path_from_increments(
        coeffs,
        x0,
        T,
        dw,
        t0=t0,
        driving_seed=(stream.master_seed, stream.stream_index),
    )


def _bracket(path: EulerPath, t: float) -> int:
    if t < path.t0 or t > path.T:
        raise ValueError(f"t={t} outside the path range [{path.t0}, {path.T}]")
    idx = int(np.searchsorted(path.grid, t, side="right")) - 1
    return min(idx, path.n)


def eval_step(path: EulerPath, t: float) -> np.ndarray:
    """Left-constant interpolant: ``values[k]`` for ``t in [t_k, t_{k+1})``.

    The right endpoint closes to ``values[n]``.
    """
    return path.values[_bracket(path, t)]


def eval_linear(path: EulerPath, t: float) -> np.ndarray:
    """Piecewise-linear interpolant between consecutive knots."""
    k = min(_bracket(path, t), path.n - 1)
    w = (t - path.grid[k]) / (path.grid[k + 1] - path.grid[k])
    return path.values[k] + w * (path.values[k + 1] - path.values[k])


def sup_abs(path: EulerPath) -> float:
    """Supremum of the Euclidean norm over the path.

    For the piecewise-linear interpolant the supremum is attained at a knot,
    so this is simply the max over knot norms.
    """
    if path.values.shape[1] == 1:
        return float(np.max(np.abs(path.values[:, 0])))
    return float(np.max(np.linalg.norm(path.values, axis=1)))


def write_path_csv(path: EulerPath, out: TextIO) -> None:
    """Serialize a path as ``t,x_1,...,x_d`` rows at full double precision."""
    d = path.values.shape[1]
    header = "t," + ",".join(f"x_{j + 1}" for j in range(d))
    out.write(header + "\n")
    for k in range(path.n + 1):
        row = ",".join(f"{v:.17g}" for v in path.values[k])
        out.write(f"{path.grid[k]:.17g},{row}\n")
