"""Backend selection between the compiled stepping kernel and its pure twin.

The compiled extension is optional; when it is missing (or disabled through
the ``ITERSIM_PURE`` environment variable) every consumer transparently uses
the pure-Python implementation. Both produce bit-identical output, so the
choice affects speed only.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:  # pragma: no cover - exercised implicitly by the import
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

__all__ = ["DIFF_AFFINE", "DIFF_SQRT", "euler_affine", "set_backend", "backend_name"]

DIFF_AFFINE = _kernels_py.DIFF_AFFINE
DIFF_SQRT = _kernels_py.DIFF_SQRT


def _default_backend():
    if _compiled is None or os.environ.get("ITERSIM_PURE", "") == "1":
        return _kernels_py
    return _compiled


_active = _default_backend()


def set_backend(name: str) -> None:
    """Select the stepping backend: ``"compiled"``, ``"pure"`` or ``"auto"``."""
    global _active
    if name == "pure":
        _active = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this install")
        _active = _compiled
    elif name == "auto":
        _active = _default_backend()
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'compiled', 'pure' or 'auto'")


def backend_name() -> str:
    """Name of the backend currently stepping the Euler recursions."""
    return "pure" if _active is _kernels_py else "compiled"


def euler_affine(x0, dt, dw, drift_const, drift_lin, diff_kind, diff_const, diff_lin, out):
    """Dispatch to the active backend's kernel; see ``_kernels_py.euler_affine``."""
    return _active.euler_affine(
        x0, dt, dw, drift_const, drift_lin, diff_kind, diff_const, diff_lin, out
    )
