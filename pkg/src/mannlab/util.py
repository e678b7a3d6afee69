"""Shared numerical plumbing: seeding, tolerance rules, float formatting.

Seed splitting rule (used everywhere randomness is needed): every random
stream is derived from one master seed through
``numpy.random.SeedSequence(master_seed, spawn_key=path)`` where ``path``
is a short tuple of integers identifying the consumer (purpose code, and
for sweeps the cell index). Identical seed + path always reproduces the
identical stream, independent of execution order.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError

# Default tolerances. Equality checks are relative, inequality slack is
# absolute, optionally scaled by (1 + magnitude of the larger side).
EQ_REL_TOL = 1e-9
INEQ_ABS_TOL = 1e-9
HOMOGENEITY_TOL = 1e-12

# Purpose codes for the seed splitting rule.
PURPOSE_CERTIFY = 1
PURPOSE_SMOOTH_VALIDATE = 2
PURPOSE_MODULUS = 3
PURPOSE_SWEEP = 10


def child_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator derived from ``seed`` via the documented splitting rule."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *path: int) -> int:
    """Integer sub-seed derived from ``seed`` via the same splitting rule."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1)[0])


def scaled_tol(scale, base: float = INEQ_ABS_TOL):
    """Slack tolerance ``base * (1 + |scale|)`` (elementwise for arrays)."""
    return base * (1.0 + np.abs(scale))


def fmt_float(v: float) -> str:
    """Decimal float formatting with 17 significant digits (round-trip exact)."""
    return format(float(v), ".17g")


def as_vector(x, dim: int, name: str = "x") -> np.ndarray:
    """Validate and convert ``x`` to a finite, C-contiguous float64 vector."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DimensionMismatchError(
            f"{name}: expected vector of dim {dim}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite entries are not allowed")
    return arr
