"""Finite-dimensional smooth normed spaces.

A :class:`Space` bundles a norm family (Euclidean or p-norm with p >= 2),
the induced normalized duality mapping J, and the smoothness constants
used by the convergence conditions: the 2-uniform-smoothness constant
K (stored as K^2, which is what every formula consumes) and the
q-smoothness constant C_q consumed only by the q-condition checker.

For the Euclidean norm J is the identity and K^2 = 1/2 is forced by the
inner-product expansion of ||x + y||^2. For the p-norm the default
K^2 = (p - 1)/2 comes from the classical two-point inequality for p >= 2;
it is configuration to be re-validated by sampling, not a derived truth,
so :func:`validate_smooth_constant` exists to do exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionMismatchError
from .util import EQ_REL_TOL, as_vector, child_rng, scaled_tol

EUCLIDEAN = "euclidean"
LP = "lp"


@dataclass(frozen=True)
class Space:
    """A real finite-dimensional normed space with a smooth norm.

    Attributes:
        kind: "euclidean" or "lp".
        dim: ambient dimension, >= 1.
        p: p-norm exponent (>= 2); None for the Euclidean kind.
        q: smoothness order in (1, 2]; 2 for both built-in kinds. Only
            the q-condition checker consumes a non-default value.
        K2: squared 2-uniform-smoothness constant for the two-point
            inequality ||x+y||^2 <= ||x||^2 + 2<y,J(x)> + 2*K2*||y||^2.
        Cq: q-smoothness constant, used only by the q-condition checker.
    """

    kind: str
    dim: int
    p: Optional[float] = None
    q: float = 2.0
    K2: float = 0.5
    Cq: float = 1.0

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, LP):
            raise ConfigError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.kind == LP:
            if self.p is None or self.p < 2.0:
                raise ConfigError("p-norm spaces require p >= 2")
        if not (1.0 < self.q <= 2.0):
            raise ConfigError("smoothness order q must lie in (1, 2]")
        if self.K2 <= 0 or self.Cq <= 0:
            raise ConfigError("K2 and Cq must be positive")

    # -- norm family ----------------------------------------------------

    def check(self, x, name: str = "x") -> np.ndarray:
        return as_vector(x, self.dim, name)

    def norm(self, x) -> float:
        x = self.check(x)
        if self.kind == EUCLIDEAN:
            return float(np.sqrt(np.dot(x, x)))
        return float(np.sum(np.abs(x) ** self.p) ** (1.0 / self.p))

    def norm_sq(self, x) -> float:
        """||x||^2 computed without a sqrt/square round trip."""
        x = self.check(x)
        if self.kind == EUCLIDEAN:
            return float(np.dot(x, x))
        return float(np.sum(np.abs(x) ** self.p) ** (2.0 / self.p))

    def norm_rows(self, X: np.ndarray) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return np.sqrt(np.einsum("ij,ij->i", X, X))
        return np.sum(np.abs(X) ** self.p, axis=1) ** (1.0 / self.p)

    def norm_sq_rows(self, X: np.ndarray) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return np.einsum("ij,ij->i", X, X)
        return np.sum(np.abs(X) ** self.p, axis=1) ** (2.0 / self.p)

    # -- duality mapping -------------------------------------------------

    def duality_map(self, x) -> np.ndarray:
        """Normalized duality mapping J(x).

        Identity for the Euclidean kind. For the p-norm,
        J(x)_i = ||x||_p^(2-p) * |x_i|^(p-1) * sign(x_i), with J(0) = 0
        (the defining identities force the value at zero).
        """
        x = self.check(x)
        if self.kind == EUCLIDEAN:
            return x.copy()
        nrm = self.norm(x)
        if nrm == 0.0:
            return np.zeros(self.dim)
        return nrm ** (2.0 - self.p) * np.abs(x) ** (self.p - 1.0) * np.sign(x)

    def duality_map_rows(self, X: np.ndarray) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return X.copy()
        nrm = self.norm_rows(X)
        safe = np.where(nrm > 0.0, nrm, 1.0)
        J = safe[:, None] ** (2.0 - self.p) * np.abs(X) ** (self.p - 1.0) * np.sign(X)
        J[nrm == 0.0] = 0.0
        return J

    def pairing(self, y, x) -> float:
        """<y, J(x)>: bilinear in y, with pairing(x, x) = ||x||^2."""
        y = self.check(y, "y")
        if self.kind == EUCLIDEAN:
            x = self.check(x)
            return float(np.dot(y, x))
        return float(np.dot(y, self.duality_map(x)))

    def pairing_rows(self, Y: np.ndarray, X: np.ndarray) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return np.einsum("ij,ij->i", Y, X)
        return np.einsum("ij,ij->i", Y, self.duality_map_rows(X))

    @property
    def dual_exponent(self) -> float:
        """Hoelder conjugate q with 1/p + 1/q = 1 (Euclidean: 2)."""
        if self.kind == EUCLIDEAN:
            return 2.0
        return self.p / (self.p - 1.0)

    def describe(self) -> str:
        if self.kind == EUCLIDEAN:
            return f"euclidean(dim={self.dim})"
        return f"lp(dim={self.dim}, p={self.p})"


def euclidean(dim: int, Cq: Optional[float] = None, q: float = 2.0) -> Space:
    """Euclidean space; K^2 = 1/2 is exact, C_q defaults to 2*K^2."""
    K2 = 0.5
    return Space(EUCLIDEAN, dim, None, q, K2, 2.0 * K2 if Cq is None else Cq)


def lp(dim: int, p: float, K2: Optional[float] = None, Cq: Optional[float] = None,
       q: float = 2.0) -> Space:
    """p-norm space with default K^2 = (p - 1)/2 and C_q = 2*K^2."""
    K2 = (p - 1.0) / 2.0 if K2 is None else K2
    return Space(LP, dim, float(p), q, K2, 2.0 * K2 if Cq is None else Cq)


_SPACE_KEYS = {"kind", "dim", "p", "K2_override", "Cq", "q"}


def space_from_config(cfg: dict) -> Space:
    """Build a space from its config description, rejecting unknown fields."""
    unknown = set(cfg) - _SPACE_KEYS
    if unknown:
        raise ConfigError(f"unknown space fields: {sorted(unknown)}")
    if "kind" not in cfg or "dim" not in cfg:
        raise ConfigError("space config requires 'kind' and 'dim'")
    kind, dim = cfg["kind"], int(cfg["dim"])
    q = float(cfg.get("q", 2.0))
    if kind == EUCLIDEAN:
        if "p" in cfg:
            raise ConfigError("'p' is only valid for kind 'lp'")
        s = euclidean(dim, Cq=cfg.get("Cq"), q=q)
        if "K2_override" in cfg:
            s = Space(EUCLIDEAN, dim, None, q, float(cfg["K2_override"]), s.Cq)
        return s
    if kind == LP:
        if "p" not in cfg:
            raise ConfigError("kind 'lp' requires 'p'")
        return lp(dim, float(cfg["p"]), K2=cfg.get("K2_override"), Cq=cfg.get("Cq"), q=q)
    raise ConfigError(f"unknown space kind {kind!r}")


# -- sampled smoothness diagnostics ---------------------------------------


def modulus_smoothness_estimate(space: Space, t: float, n_samples: int,
                                seed: int) -> float:
    """Monte-Carlo lower estimate of the modulus of smoothness at ``t``.

    Samples unit vectors x and perturbations y with ||y|| = t (the
    objective is convex and even in y, so the supremum over the ball
    ||y|| <= t is attained on its boundary) and returns the sample
    maximum of (||x+y|| + ||x-y||)/2 - 1. By construction this never
    exceeds the true supremum. Deterministic for a fixed seed, and for a
    fixed seed the estimate is nondecreasing in t because each sampled
    pair contributes a convex even function of t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if t == 0.0:
        return 0.0
    rng = child_rng(seed)
    X = rng.standard_normal((n_samples, space.dim))
    D = rng.standard_normal((n_samples, space.dim))
    X /= space.norm_rows(X)[:, None]
    Y = (t / space.norm_rows(D))[:, None] * D
    vals = 0.5 * (space.norm_rows(X + Y) + space.norm_rows(X - Y)) - 1.0
    return float(max(0.0, vals.max()))


@dataclass
class SmoothConstantReport:
    """Outcome of sampling the two-point smoothness inequality."""

    space: str
    K2: float
    n_samples: int
    seed: int
    max_violation: float
    n_violations: int
    empirical_K2: float
    tol_base: float = field(default=1e-9)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "K2": self.K2,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "n_violations": self.n_violations,
            "empirical_K2": self.empirical_K2,
            "ok": self.ok,
        }


def validate_smooth_constant(space: Space, n_samples: int, seed: int,
                             K2: Optional[float] = None,
                             tol_base: float = 1e-9) -> SmoothConstantReport:
    """Check ||x+y||^2 <= ||x||^2 + 2<y,J(x)> + 2*K2*||y||^2 on random pairs.

    A sample counts as a violation when the slack exceeds the scaled
    tolerance. The report also carries the empirical best constant, the
    sample maximum of (||x+y||^2 - ||x||^2 - 2<y,J(x)>) / (2||y||^2).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    K2 = space.K2 if K2 is None else float(K2)
    rng = child_rng(seed)
    X = rng.standard_normal((n_samples, space.dim))
    Y = rng.standard_normal((n_samples, space.dim))
    lhs = space.norm_sq_rows(X + Y)
    nx = space.norm_sq_rows(X)
    ny = space.norm_sq_rows(Y)
    pr = space.pairing_rows(Y, X)
    rhs = nx + 2.0 * pr + 2.0 * K2 * ny
    slack = lhs - rhs
    tol = scaled_tol(np.maximum(np.abs(lhs), np.abs(rhs)), tol_base)
    nz = ny > 0.0
    emp = (lhs[nz] - nx[nz] - 2.0 * pr[nz]) / (2.0 * ny[nz])
    return SmoothConstantReport(
        space=space.describe(),
        K2=K2,
        n_samples=n_samples,
        seed=seed,
        max_violation=float(max(0.0, slack.max())),
        n_violations=int(np.count_nonzero(slack > tol)),
        empirical_K2=float(emp.max()) if emp.size else 0.0,
        tol_base=tol_base,
    )


def dual_norm(space: Space, f) -> float:
    """Norm of a functional f in the dual space (q-norm, 1/p + 1/q = 1)."""
    f = space.check(f, "f")
    if space.kind == EUCLIDEAN:
        return float(np.sqrt(np.dot(f, f)))
    qexp = space.dual_exponent
    return float(np.sum(np.abs(f) ** qexp) ** (1.0 / qexp))
