"""Pure-Python twin of the compiled Euler stepping kernel.

Both backends evaluate the recursion with the identical floating-point
expression grouping

    x_{k+1} = (x_k + b(x_k) * dt) + s(x_k) * dw_k

and the compiled kernel is built without FMA contraction, so the two produce
bit-identical output. Tests assert that equality; do not "simplify" the
arithmetic here without mirroring the change in ``_kernels.pyx``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["DIFF_AFFINE", "DIFF_SQRT", "euler_affine"]

DIFF_AFFINE = 0
DIFF_SQRT = 1


def euler_affine(
    x0: float,
    dt: float,
    dw: np.ndarray,
    drift_const: float,
    drift_lin: float,
    diff_kind: int,
    diff_const: float,
    diff_lin: float,
    out: np.ndarray,
) -> int:
    """Run the scalar Euler recursion for tagged coefficients.

    Drift is ``drift_const + drift_lin * x``; diffusion is either
    ``diff_const + diff_lin * x`` (``DIFF_AFFINE``) or
    ``diff_const * sqrt(max(x, 0))`` (``DIFF_SQRT``). ``out`` must hold
    ``len(dw) + 1`` slots and receives the path. Returns the index of the
    first step whose update became non-finite, or -1 on success.
    """
    n = dw.shape[0]
    out[0] = x0

    if drift_lin == 0.0 and diff_lin == 0.0 and diff_kind == DIFF_AFFINE:
        # Constant coefficients: the recursion is a running sum of the
        # interleaved terms [x0, b dt, s dw_0, b dt, s dw_1, ...], and
        # np.add.accumulate performs exactly that sequential left fold, so
        # this path is bit-identical to the scalar loop below.
        terms = np.empty(2 * n + 1)
        terms[0] = x0
        terms[1::2] = drift_const * dt
        terms[2::2] = diff_const * dw
        with np.errstate(over="ignore", invalid="ignore"):
            np.add.accumulate(terms, out=terms)
        out[:] = terms[::2]
        finite = np.isfinite(out)
        if finite.all():
            return -1
        return int(np.argmax(~finite)) - 1

    x = float(x0)
    for k in range(n):
        b = drift_const + drift_lin * x
        if diff_kind == DIFF_SQRT:
            s = diff_const * math.sqrt(x if x > 0.0 else 0.0)
        else:
            s = diff_const + diff_lin * x
        x = (x + b * dt) + s * dw[k]
        out[k + 1] = x
        if not math.isfinite(x):
            return k
    return -1
