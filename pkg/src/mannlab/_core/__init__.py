"""Backend selection for the Mann-recursion kernel.

The compiled extension is preferred when importable; setting the
environment variable ``MANNLAB_PURE_PYTHON`` (to any non-empty value)
before import forces the pure-Python mirror. Both backends implement the
same ``mann_run_kernel`` contract and produce bit-identical traces.
"""

from __future__ import annotations

import os

import numpy as np

from . import _mann_py

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_DIVERGED = 2

OP_CODES = {
    "identity": 0,
    "constant": 1,
    "negation": 2,
    "diagonal": 3,
    "affine": 4,
    "clipped_quadratic": 5,
}

_compiled = None
if not os.environ.get("MANNLAB_PURE_PYTHON"):
    try:
        from . import _mann as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

_selected = _compiled if _compiled is not None else _mann_py


def backend_name() -> str:
    """Name of the backend selected at import: 'compiled' or 'python'."""
    return "compiled" if _selected is _compiled and _compiled is not None else "python"


def get_backend(name=None):
    """Resolve a backend module by name (None = the selected one)."""
    if name is None:
        return _selected
    if name == "python":
        return _mann_py
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def mann_run(x0, u, alphas, betas, gammas, op_code, op_vec, op_mat, op_a, op_b,
             p_exp, z, use_dist_stop, rtol, dtol, guard_radius, max_iter,
             backend=None):
    """Run the recursion kernel; returns (X, R, D, status).

    X is the (steps+1, dim) state history, R the per-state residuals,
    D the per-state distances to z (NaN when z is None).
    """
    mod = get_backend(backend)
    dim = x0.shape[0]
    X = np.empty((max_iter + 1, dim), dtype=np.float64)
    R = np.empty(max_iter + 1, dtype=np.float64)
    D = np.empty(max_iter + 1, dtype=np.float64)
    has_z = z is not None
    z_arr = np.ascontiguousarray(z, dtype=np.float64) if has_z else np.zeros(dim)
    steps, status = mod.mann_run_kernel(
        X, R, D,
        np.ascontiguousarray(x0, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64),
        np.ascontiguousarray(alphas, dtype=np.float64),
        np.ascontiguousarray(betas, dtype=np.float64),
        np.ascontiguousarray(gammas, dtype=np.float64),
        int(op_code),
        np.ascontiguousarray(op_vec, dtype=np.float64),
        np.ascontiguousarray(op_mat, dtype=np.float64),
        float(op_a), float(op_b), float(p_exp),
        has_z, z_arr, bool(use_dist_stop),
        float(rtol), float(dtol), float(guard_radius), int(max_iter),
    )
    n = steps + 1
    return X[:n].copy(), R[:n].copy(), D[:n].copy(), status
