# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler stepping kernel for scalar diffusions with tagged coefficients.

Mirror of ``_kernels_py.euler_affine``: the expression grouping of the update
is identical and the module is compiled with -ffp-contract=off, so output is
bit-identical to the pure twin. Keep the two in lockstep.
"""

from libc.math cimport isfinite, sqrt

DIFF_AFFINE = 0
DIFF_SQRT = 1


cpdef Py_ssize_t euler_affine(
    double x0,
    double dt,
    double[::1] dw,
    double drift_const,
    double drift_lin,
    int diff_kind,
    double diff_const,
    double diff_lin,
    double[::1] out,
):
    """Scalar Euler recursion; returns first non-finite step index or -1.

    Drift is ``drift_const + drift_lin * x``; diffusion is
    ``diff_const + diff_lin * x`` (kind 0) or ``diff_const * sqrt(max(x, 0))``
    (kind 1). ``out`` must hold ``len(dw) + 1`` slots.
    """
    cdef Py_ssize_t n = dw.shape[0]
    cdef Py_ssize_t k
    cdef double x = x0
    cdef double b, s

    out[0] = x0
    with nogil:
        for k in range(n):
            b = drift_const + drift_lin * x
            if diff_kind == 1:
                s = diff_const * sqrt(x if x > 0.0 else 0.0)
            else:
                s = diff_const + diff_lin * x
            x = (x + b * dt) + s * dw[k]
            out[k + 1] = x
            if not isfinite(x):
                return k
    return -1
