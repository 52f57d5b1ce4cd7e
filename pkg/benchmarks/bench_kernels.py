"""Compare the compiled Euler kernel against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. The table reports the median
wall time per path over repeated batches for both backends and the resulting
speedup, for constant-coefficient (fast-path) and state-dependent (loop)
recursions.
"""

from __future__ import annotations

import time

import numpy as np

from itersim import _kernels_py

try:
    from itersim import _kernels as _kernels_c
except ImportError:  # pragma: no cover - compiled extension not built
    _kernels_c = None


CASES = [
    ("constant coefficients", dict(drift_const=0.1, drift_lin=0.0, diff_const=1.0, diff_lin=0.0, diff_kind=_kernels_py.DIFF_AFFINE)),
    ("linear drift", dict(drift_const=0.0, drift_lin=-0.5, diff_const=1.0, diff_lin=0.0, diff_kind=_kernels_py.DIFF_AFFINE)),
    ("square-root diffusion", dict(drift_const=1.0, drift_lin=0.0, diff_const=2.0, diff_lin=0.0, diff_kind=_kernels_py.DIFF_SQRT)),
]

STEP_COUNTS = [100, 1000, 10000]
BATCH = 200


def bench(kernel, n: int, params: dict) -> float:
    rng = np.random.default_rng(0)
    dt = 1.0 / n
    dw = rng.standard_normal((BATCH, n)) * np.sqrt(dt)
    out = np.empty(n + 1)
    times = []
    for _ in range(5):
        start = time.perf_counter()
        for k in range(BATCH):
            kernel.euler_affine(
                0.5,
                dt,
                dw[k],
                params["drift_const"],
                params["drift_lin"],
                params["diff_kind"],
                params["diff_const"],
                params["diff_lin"],
                out,
            )
        times.append((time.perf_counter() - start) / BATCH)
    return float(np.median(times))


def main() -> None:
    if _kernels_c is None:
        print("compiled kernel unavailable; showing pure-Python timings only")
    header = f"{'case':<24}{'n':>7}{'pure (us)':>12}{'compiled (us)':>15}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, params in CASES:
        for n in STEP_COUNTS:
            t_py = bench(_kernels_py, n, params)
            if _kernels_c is None:
                print(f"{label:<24}{n:>7}{t_py * 1e6:>12.1f}{'-':>15}{'-':>9}")
                continue
            t_c = bench(_kernels_c, n, params)
            print(
                f"{label:<24}{n:>7}{t_py * 1e6:>12.1f}{t_c * 1e6:>15.1f}"
                f"{t_py / t_c:>8.1f}x"
            )


if __name__ == "__main__":
    main()
