"""Strict pseudocontractions: gallery, certification, averaged maps.

An operator T with modulus ``lam`` in (0, 1) satisfies, for all x, y,

    <Tx - Ty, J(x - y)>  <=  ||x - y||^2 - lam * ||x - y - (Tx - Ty)||^2.

Certification samples this inequality; it refutes or fails to refute, it
does not prove. Gallery members additionally carry closed-form
admissibility in the Euclidean case: a symmetric linear operator is
admissible at level ``lam`` iff every eigenvalue lies in
[1 - 1/lam, 1] = [-(1 - lam)/lam, 1] (the scalar inequality
mu <= 1 - lam*(1 - mu)^2 solved for mu). Outside the Euclidean case the
gallery's claims are marked empirical and left to certification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._core import OP_CODES
from .errors import GalleryError, OracleUnavailableError
from .spaces import EUCLIDEAN, Space
from .util import as_vector, child_rng, scaled_tol


@dataclass
class Operator:
    """An evaluatable self-map of the whole space with a claimed modulus.

    ``fn`` must accept arrays of shape (..., dim) (all gallery members
    do); set ``vectorized=False`` for custom callables that only handle
    single vectors. ``linear_rep`` holds (A, b) for affine maps
    x -> A x + b; ``fixed_set`` optionally stores a closed-form fixed
    point set for oracle use. ``kernel_spec`` is the structured encoding
    consumed by the compiled recursion kernel, or None.
    """

    space: Space
    fn: Callable[[np.ndarray], np.ndarray]
    lambda_claimed: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    linear_rep: Optional[tuple] = None
    fixed_set: Optional["FixedPointSet"] = None
    vectorized: bool = True
    admissibility: str = "empirical"
    kernel_spec: Optional[tuple] = None

    def __post_init__(self):
        if not (0.0 < self.lambda_claimed < 1.0):
            raise GalleryError("lambda_claimed must lie in (0, 1)")

    def __call__(self, x) -> np.ndarray:
        x = self.space.check(x)
        return np.asarray(self.fn(x), dtype=np.float64)

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.vectorized:
            return np.asarray(self.fn(X), dtype=np.float64)
        return np.apply_along_axis(lambda v: self.fn(v), -1, X)

    def residual(self, x) -> float:
        """Fixed-point residual ||x - Tx||."""
        x = self.space.check(x)
        return self.space.norm(x - self(x))

    @property
    def lipschitz_bound(self) -> float:
        """(lam + 1)/lam, the Lipschitz constant implied by the modulus."""
        lam = self.lambda_claimed
        return (lam + 1.0) / lam


@dataclass
class AveragedMap:
    """The relaxation (1 - alpha) I + alpha T.

    Nonexpansive with the same fixed points as T whenever
    alpha lies in (0, lam/K^2] intersected with (0, 1].
    """

    base: Operator
    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise GalleryError("alpha must lie in [0, 1]")

    def __call__(self, x) -> np.ndarray:
        x = self.base.space.check(x)
        return (1.0 - self.alpha) * x + self.alpha * self.base(x)

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (1.0 - self.alpha) * X + self.alpha * self.base.batch(X)


def averaged(T: Operator, alpha: float) -> AveragedMap:
    return AveragedMap(T, float(alpha))


# -- gallery ----------------------------------------------------------------


def _admissible_interval(lam: float) -> tuple:
    return (1.0 - 1.0 / lam, 1.0)


def _check_eigs(eigs, lam, what):
    lo, hi = _admissible_interval(lam)
    eigs = np.asarray(eigs, dtype=np.float64)
    if np.any(eigs < lo - 1e-12) or np.any(eigs > hi + 1e-12):
        raise GalleryError(
            f"{what}: eigenvalues {eigs.tolist()} outside admissible range "
            f"[{lo:.6g}, {hi:.6g}] for lambda={lam}"
        )


def gallery(name: str, space: Space, lam: float, params: Optional[dict] = None,
            enforce: bool = True) -> Operator:
    """Construct a named test operator with known structure.

    Names: identity, constant_zero, negation, diagonal (params: mu),
    affine (params: A, b), clipped_quadratic (params: k, r). Closed-form
    admissibility is enforced in Euclidean space (``enforce=False`` skips
    it, e.g. to let certification refute a bad claim empirically); in
    p-norm spaces the claims are only empirical and certification has
    the last word.
    """
    params = dict(params or {})
    lam = float(lam)
    if not (0.0 < lam < 1.0):
        raise GalleryError("lambda must lie in (0, 1)")
    dim = space.dim
    eye = np.eye(dim)
    zeros = np.zeros(dim)
    euclid = space.kind == EUCLIDEAN and enforce

    if name == "identity":
        return Operator(
            space, lambda X: np.array(X, dtype=np.float64, copy=True), lam, name, params,
            linear_rep=(eye, zeros),
            admissibility="closed_form" if euclid else "empirical",
            kernel_spec=(OP_CODES["identity"], zeros, None, 0.0, 0.0),
        )
    if name == "constant_zero":
        return Operator(
            space, lambda X: np.zeros_like(np.asarray(X, dtype=np.float64)), lam,
            name, params,
            linear_rep=(np.zeros((dim, dim)), zeros),
            admissibility="closed_form" if euclid else "empirical",
            kernel_spec=(OP_CODES["constant"], zeros, None, 0.0, 0.0),
        )
    if name == "negation":
        if euclid:
            _check_eigs([-1.0], lam, "negation")
        return Operator(
            space, lambda X: -np.asarray(X, dtype=np.float64), lam, name, params,
            linear_rep=(-eye, zeros),
            admissibility="closed_form" if euclid else "empirical",
            kernel_spec=(OP_CODES["negation"], zeros, None, 0.0, 0.0),
        )
    if name == "diagonal":
        if "mu" not in params:
            raise GalleryError("diagonal requires params['mu']")
        mu = as_vector(params["mu"], dim, "mu")
        if euclid:
            _check_eigs(mu, lam, "diagonal")
        adm = "closed_form" if euclid else "empirical"
        return Operator(
            space, lambda X, m=mu: m * np.asarray(X, dtype=np.float64), lam,
            name, {"mu": mu.tolist()},
            linear_rep=(np.diag(mu), zeros),
            admissibility=adm,
            kernel_spec=(OP_CODES["diagonal"], mu, None, 0.0, 0.0),
        )
    if name == "affine":
        if "A" not in params or "b" not in params:
            raise GalleryError("affine requires params['A'] and params['b']")
        A = np.asarray(params["A"], dtype=np.float64)
        b = as_vector(params["b"], dim, "b")
        if A.shape != (dim, dim):
            raise GalleryError(f"A must be {dim}x{dim}, got {A.shape}")
        symmetric = np.allclose(A, A.T, atol=1e-12)
        adm = "empirical"
        if euclid and symmetric:
            _check_eigs(np.linalg.eigvalsh(A), lam, "affine")
            adm = "closed_form"
        return Operator(
            space, lambda X, A=A, b=b: np.asarray(X, dtype=np.float64) @ A.T + b, lam,
            name, {"A": A.tolist(), "b": b.tolist()},
            linear_rep=(A, b),
            admissibility=adm,
            kernel_spec=(OP_CODES["affine"], b, A, 0.0, 0.0),
        )
    if name == "clipped_quadratic":
        k = float(params.get("k", 1.0))
        r = float(params.get("r", 0.25))
        if k <= 0 or r <= 0:
            raise GalleryError("clipped_quadratic requires k > 0 and r > 0")
        # Elementwise slope range is [1 - 2kr, 1]; admissible iff
        # 1 - 2kr >= 1 - 1/lam, i.e. lam <= 1/(2kr).
        if euclid and 2.0 * k * r > 1.0 / lam + 1e-12:
            raise GalleryError(
                f"clipped_quadratic: slope range [{1 - 2 * k * r:.6g}, 1] outside "
                f"admissible range for lambda={lam} (need 2*k*r <= {1 / lam:.6g})"
            )

        def _clipq(X, k=k, r=r):
            X = np.asarray(X, dtype=np.float64)
            a = np.abs(X)
            inner = X - k * X * a
            outer = X - k * r * (2.0 * a - r) * np.sign(X)
            return np.where(a <= r, inner, outer)

        return Operator(
            space, _clipq, lam, name, {"k": k, "r": r},
            fixed_set=FixedPointSet("affine", zeros, np.zeros((dim, 0))),
            admissibility="closed_form" if euclid else "empirical",
            kernel_spec=(OP_CODES["clipped_quadratic"], zeros, None, k, r),
        )
    raise GalleryError(f"unknown gallery operator {name!r}")


_OPERATOR_KEYS = {"name", "params", "lambda"}


def operator_from_config(space: Space, cfg: dict, enforce: bool = True) -> Operator:
    unknown = set(cfg) - _OPERATOR_KEYS
    if unknown:
        raise GalleryError(f"unknown operator fields: {sorted(unknown)}")
    if "name" not in cfg or "lambda" not in cfg:
        raise GalleryError("operator config requires 'name' and 'lambda'")
    return gallery(cfg["name"], space, float(cfg["lambda"]), cfg.get("params"),
                   enforce=enforce)


# -- certification -----------------------------------------------------------


@dataclass
class Certificate:
    """Outcome of sampling the defining inequality at level lambda_tested."""

    operator: str
    lambda_tested: float
    n_pairs: int
    seed: int
    sampling_box: float
    max_violation: float
    verdict: str                      # "certified" | "refuted"
    witness: Optional[dict] = None    # pair that violates, when refuted
    max_lipschitz_ratio: float = 0.0
    tol_base: float = 1e-9

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "lambda_tested": self.lambda_tested,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "sampling_box": self.sampling_box,
            "max_violation": self.max_violation,
            "verdict": self.verdict,
            "witness": self.witness,
            "max_lipschitz_ratio": self.max_lipschitz_ratio,
        }


def certify(T: Operator, lam: float, n_pairs: int = 1000, seed: int = 0,
            sampling_box: float = 10.0, tol_base: float = 1e-9) -> Certificate:
    """Sample pairs in [-box, box]^dim and test the defining inequality.

    The per-pair slack is ||d||^2 - lam*||d - w||^2 - <w, J(d)> with
    d = x - y and w = Tx - Ty; a pair refutes when its slack drops below
    the scaled tolerance. Deterministic for a fixed seed, with the pair
    stream in sequential order.
    """
    if not (0.0 < lam < 1.0):
        raise GalleryError("lambda must lie in (0, 1)")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    space = T.space
    rng = child_rng(seed)
    XY = rng.uniform(-sampling_box, sampling_box, size=(n_pairs, 2, space.dim))
    X, Y = XY[:, 0, :], XY[:, 1, :]
    D = X - Y
    W = T.batch(X) - T.batch(Y)
    nsq_d = space.norm_sq_rows(D)
    nsq_dw = space.norm_sq_rows(D - W)
    pair_wd = space.pairing_rows(W, D)
    slack = nsq_d - lam * nsq_dw - pair_wd
    tol = scaled_tol(np.maximum(np.abs(nsq_d - lam * nsq_dw), np.abs(pair_wd)), tol_base)
    bad = slack < -tol

    norm_d = space.norm_rows(D)
    norm_w = space.norm_rows(W)
    nz = norm_d > 1e-300
    lip = float((norm_w[nz] / norm_d[nz]).max()) if nz.any() else 0.0

    witness = None
    verdict = "certified"
    if bad.any():
        i = int(np.argmin(slack + tol))
        witness = {"x": X[i].tolist(), "y": Y[i].tolist(), "slack": float(slack[i])}
        verdict = "refuted"
    return Certificate(
        operator=T.name,
        lambda_tested=float(lam),
        n_pairs=n_pairs,
        seed=seed,
        sampling_box=sampling_box,
        max_violation=float(max(0.0, -slack.min())),
        verdict=verdict,
        witness=witness,
        max_lipschitz_ratio=lip,
        tol_base=tol_base,
    )


@dataclass
class AveragedMapReport:
    """Sampled check of the averaged-map contraction inequality."""

    operator: str
    alpha: float
    lam: float
    K2: float
    n_pairs: int
    seed: int
    max_violation: float                   # max(0, -min slack), unscaled
    n_violations: int                      # count beyond the scaled tolerance
    nonexpansive_margin: Optional[float]   # max(||Ta x - Ta y|| - ||x - y||), when applicable

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "alpha": self.alpha,
            "lambda": self.lam,
            "K2": self.K2,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "n_violations": self.n_violations,
            "nonexpansive_margin": self.nonexpansive_margin,
        }


def check_averaged_contraction(T: Operator, alpha: float, n_pairs: int = 1000,
                               seed: int = 0, sampling_box: float = 10.0,
                               tol_base: float = 1e-9) -> AveragedMapReport:
    """Sample ||Ta x - Ta y||^2 <= ||x-y||^2 - 2a(lam - K^2 a)||Tx-Ty-(x-y)||^2.

    Also reports the nonexpansiveness margin whenever
    alpha <= lam/K^2 (where the averaged map must be nonexpansive).
    """
    if not (0.0 <= alpha <= 1.0):
        raise GalleryError("alpha must lie in [0, 1]")
    space = T.space
    lam = T.lambda_claimed
    K2 = space.K2
    rng = child_rng(seed)
    XY = rng.uniform(-sampling_box, sampling_box, size=(n_pairs, 2, space.dim))
    X, Y = XY[:, 0, :], XY[:, 1, :]
    TX, TY = T.batch(X), T.batch(Y)
    TaX = (1.0 - alpha) * X + alpha * TX
    TaY = (1.0 - alpha) * Y + alpha * TY
    lhs = space.norm_sq_rows(TaX - TaY)
    nsq_d = space.norm_sq_rows(X - Y)
    nsq_w = space.norm_sq_rows((TX - TY) - (X - Y))
    rhs = nsq_d - 2.0 * alpha * (lam - K2 * alpha) * nsq_w
    slack = rhs - lhs
    tol = scaled_tol(np.maximum(np.abs(lhs), np.abs(rhs)), tol_base)
    margin = None
    if alpha <= lam / K2:
        margin = float((space.norm_rows(TaX - TaY) - space.norm_rows(X - Y)).max())
    return AveragedMapReport(
        operator=T.name,
        alpha=float(alpha),
        lam=lam,
        K2=K2,
        n_pairs=n_pairs,
        seed=seed,
        max_violation=float(max(0.0, -slack.min())),
        n_violations=int(np.count_nonzero(slack < -tol)),
        nonexpansive_margin=margin,
    )


# -- fixed point oracle -------------------------------------------------------


@dataclass
class FixedPointSet:
    """Affine description of F(T): offset + span(columns of basis).

    kind is "affine" (basis may have zero columns: a single point, or
    dim columns: the whole space) or "empty".
    """

    kind: str
    offset: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None

    @property
    def dim_of_set(self) -> int:
        return 0 if self.kind == "empty" or self.basis is None else self.basis.shape[1]

    def is_whole_space(self) -> bool:
        return self.kind == "affine" and self.basis.shape[1] == self.basis.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        """Euclidean nearest point of the set (orthonormal basis assumed)."""
        if self.kind == "empty":
            raise OracleUnavailableError("cannot project onto an empty fixed-point set")
        v = np.asarray(v, dtype=np.float64)
        w = v - self.offset
        return self.offset + self.basis @ (self.basis.T @ w)

    def contains(self, v: np.ndarray, tol: float = 1e-9) -> bool:
        if self.kind == "empty":
            return False
        return bool(np.linalg.norm(self.project(v) - v) <= tol * (1.0 + np.linalg.norm(v)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "offset": None if self.offset is None else self.offset.tolist(),
            "basis": None if self.basis is None else self.basis.tolist(),
        }


def fixed_points_oracle(T: Operator) -> FixedPointSet:
    """Closed-form fixed point set from the operator's structure.

    Affine maps solve (A - I) x = -b directly: a least-squares particular
    solution (consistency-checked) plus an orthonormal null-space basis
    from the SVD. Nonlinear gallery members return their stored set.
    """
    if T.linear_rep is not None:
        A, b = T.linear_rep
        dim = T.space.dim
        B = A - np.eye(dim)
        U, s, Vt = np.linalg.svd(B)
        tol = max(B.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > tol))
        basis = Vt[rank:].T  # orthonormal columns spanning null(B)
        x0, *_ = np.linalg.lstsq(B, -b, rcond=None)
        res = np.linalg.norm(B @ x0 + b)
        if res > 1e-9 * (1.0 + np.linalg.norm(b)):
            return FixedPointSet("empty")
        return FixedPointSet("affine", x0, basis)
    if T.fixed_set is not None:
        return T.fixed_set
    raise OracleUnavailableError(
        f"operator {T.name!r} has no linear representation or stored fixed set"
    )
