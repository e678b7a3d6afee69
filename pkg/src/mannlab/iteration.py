"""The modified Mann iteration, anchor path, and per-iterate diagnostics.

The update is

    y_n     = alpha_n * T x_n + (1 - alpha_n) * x_n
    x_{n+1} = beta_n * u + gamma_n * x_n + (1 - beta_n - gamma_n) * y_n

with gamma == 0 recovering the anchor-only (Halpern-type) scheme. Runs of
structured gallery operators dispatch to the recursion kernel (compiled
when available, bit-identical pure-Python mirror otherwise); arbitrary
callables fall back to a generic numpy loop.

Diagnostics recompute, per transition, the quantities that drive the
convergence argument: the anchor pairing <u - z, J(x_{n+1} - z)>, the
slack of

    ||x_{n+1} - z||^2 <= (1 - beta_n) ||x_n - z||^2
                         + 2 beta_n <u - z, J(x_{n+1} - z)>,

the slack of the key energy inequality

    2 alpha_n (1 - beta_n - gamma_n)(lam - K^2 alpha_n) ||x_n - T x_n||^2
        <= ||x_n - z||^2 - ||x_{n+1} - z||^2 + beta_n ||u - z||^2,

and the boundedness slack max(||x_0 - p||, ||u - p||) - ||x_n - p||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _core
from .errors import (
    AnchorConvergenceError,
    DivergenceGuardError,
    ScheduleError,
    SingularSystemError,
)
from .operators import Operator
from .schedules import ScheduleSet, resolve_start
from .spaces import Space
from .util import as_vector

DEFAULT_RESIDUAL_TOL = 1e-8
GUARD_FACTOR = 100.0


@dataclass
class StopRule:
    """Stopping rule: residual <= residual_tol, and additionally
    dist-to-z <= dist_tol when both an oracle z and dist_tol are given.

    The distance criterion is opt-in (dist_tol=None disables it) so that
    runs without a trustworthy oracle never stop on oracle circularity.
    """

    residual_tol: float = DEFAULT_RESIDUAL_TOL
    dist_tol: Optional[float] = None


@dataclass
class IterationState:
    """A single iterate with the quantities attached to it."""

    n: int
    x: np.ndarray
    y: Optional[np.ndarray] = None      # averaged point T_{alpha_n} x_n
    residual: float = 0.0


def step(T: Operator, s: ScheduleSet, u, state: IterationState) -> IterationState:
    """One exact application of the displayed update at index state.n.

    Reference implementation used by tests and the generic path; the
    kernel mirrors its arithmetic. gamma_n = 0 reproduces the
    anchor-only scheme.
    """
    space = T.space
    u = space.check(u, "u")
    x = space.check(state.x, "x")
    n = state.n
    al = s.alpha.value(n)
    be = s.beta.value(n)
    ga = s.gamma.value(n)
    if not (0.0 <= al <= 1.0 and 0.0 <= be <= 1.0 and 0.0 <= ga <= 1.0
            and be + ga <= 1.0):
        raise ScheduleError(
            f"schedule out of range at n={n}: alpha={al}, beta={be}, gamma={ga}"
        )
    t = T(x)
    y = (1.0 - al) * x + al * t
    cc = 1.0 - be - ga
    x1 = be * u + ga * x + cc * y
    return IterationState(n=n + 1, x=x1, y=y, residual=space.norm(x - t))


@dataclass
class IterationTrace:
    """Full history of a run: states, residuals, distances, schedules used."""

    space: Space
    operator: str
    x_hist: np.ndarray          # (N+1, dim)
    residuals: np.ndarray       # (N+1,)
    dists: np.ndarray           # (N+1,), NaN when no z
    status: str                 # "converged" | "max_iter"
    schedule_start: int
    alphas: np.ndarray          # (N,) values actually applied
    betas: np.ndarray
    gammas: np.ndarray
    u: np.ndarray
    x0: np.ndarray
    z: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None
    lam: float = 0.0
    K2: float = 0.0

    @property
    def n_steps(self) -> int:
        return self.x_hist.shape[0] - 1

    @property
    def final_x(self) -> np.ndarray:
        return self.x_hist[-1]

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    @property
    def final_dist(self) -> float:
        return float(self.dists[-1])

    def global_indices(self) -> np.ndarray:
        """Sequence indices n corresponding to the applied transitions."""
        return np.arange(self.schedule_start, self.schedule_start + self.n_steps)


_STATUS_NAMES = {
    _core.STATUS_CONVERGED: "converged",
    _core.STATUS_MAX_ITER: "max_iter",
    _core.STATUS_DIVERGED: "diverged",
}


def _guard_radius(space: Space, u, x0, p) -> float:
    if p is not None:
        ref = max(space.norm(x0 - p), space.norm(u - p))
        return GUARD_FACTOR * ref + space.norm(p)
    return GUARD_FACTOR * max(space.norm(x0), space.norm(u), 1.0)


def _generic_run(T, u, x0, alphas, betas, gammas, z, stop, guard, max_iter):
    """Numpy loop for operators without a structured kernel encoding."""
    space = T.space
    dim = space.dim
    X = np.empty((max_iter + 1, dim))
    R = np.empty(max_iter + 1)
    D = np.empty(max_iter + 1)
    x = x0.copy()
    steps, status = max_iter, _core.STATUS_MAX_ITER
    use_dist = z is not None and stop.dist_tol is not None
    for k in range(max_iter + 1):
        t = T(x)
        X[k] = x
        R[k] = space.norm(x - t)
        D[k] = space.norm(x - z) if z is not None else math.nan
        if R[k] <= stop.residual_tol and (not use_dist or D[k] <= stop.dist_tol):
            steps, status = k, _core.STATUS_CONVERGED
            break
        if space.norm(x) > guard:
            steps, status = k, _core.STATUS_DIVERGED
            break
        if k == max_iter:
            break
        al, be, ga = alphas[k], betas[k], gammas[k]
        cc = 1.0 - be - ga
        y = (1.0 - al) * x + al * t
        x = be * u + ga * x + cc * y
    n = steps + 1
    return X[:n].copy(), R[:n].copy(), D[:n].copy(), status


def run(T: Operator, s: ScheduleSet, u, x0, max_iter: int,
        stop: Optional[StopRule] = None, z=None, p=None,
        schedule_start="auto", backend=None) -> IterationTrace:
    """Run the iteration for up to ``max_iter`` steps.

    ``schedule_start`` ("auto" or an int) picks the first sequence index;
    "auto" selects the earliest index from which the whole window is
    jointly feasible (beta in (0,1), gamma in [0,1), beta+gamma < 1,
    alpha in [0, mu]). ``z`` is the designated limit used for the
    distance column and the optional distance stop; ``p`` is a known
    fixed point used for the divergence guard radius.

    Raises DivergenceGuardError when the iterate norm exceeds
    100 * max(||x0 - p||, ||u - p||) + ||p||; this should never happen
    for a certified operator with validated schedules.
    """
    space = T.space
    stop = stop or StopRule()
    u = space.check(u, "u")
    x0 = space.check(x0, "x0")
    if z is not None:
        z = space.check(z, "z")
    if p is not None:
        p = space.check(p, "p")
    lam, K2 = T.lambda_claimed, space.K2
    n0 = resolve_start(s, schedule_start, lam, K2, max_iter) if max_iter > 0 else 0
    alphas, betas, gammas = s.arrays(n0, max_iter)
    guard = _guard_radius(space, u, x0, p if p is not None else z)

    if T.kernel_spec is not None and backend != "generic":
        code, vec, mat, a, b = T.kernel_spec
        mat = np.zeros((1, 1)) if mat is None else mat
        p_exp = 0.0 if space.kind == "euclidean" else space.p
        X, R, D, status = _core.mann_run(
            x0, u, alphas, betas, gammas, code, vec, mat, a, b, p_exp,
            z, stop.dist_tol is not None, stop.residual_tol,
            stop.dist_tol if stop.dist_tol is not None else 0.0,
            guard, max_iter, backend=backend,
        )
    else:
        X, R, D, status = _generic_run(
            T, u, x0, alphas, betas, gammas, z, stop, guard, max_iter)

    n_done = X.shape[0] - 1
    trace = IterationTrace(
        space=space, operator=T.name,
        x_hist=X, residuals=R, dists=D,
        status=_STATUS_NAMES[status], schedule_start=n0,
        alphas=alphas[:n_done], betas=betas[:n_done], gammas=gammas[:n_done],
        u=u, x0=x0, z=z, p=p, lam=lam, K2=K2,
    )
    if status == _core.STATUS_DIVERGED:
        raise DivergenceGuardError(
            f"iterate norm exceeded guard radius {guard:.6g} at step {n_done}; "
            "this signals a bug or an invalid certification", trace=trace)
    return trace


# -- anchor path ---------------------------------------------------------------


@dataclass
class AnchorPath:
    """Solution of x_t = t*u + (1 - t)*T x_t for one t in (0, 1)."""

    t: float
    x: np.ndarray
    solver_residual: float
    method: str                 # "direct" | "damped"
    iterations: int = 0
    damping: float = 0.0


def anchor_solve(T: Operator, u, t: float, tol: float = 1e-10,
                 max_inner: int = 100000) -> AnchorPath:
    """Solve the anchor equation at parameter t.

    Affine operators solve (I - (1-t) A) x = t u + (1-t) b directly.
    Otherwise a damped fixed-point iteration
    w <- (1-s) w + s (t u + (1-t) T w) runs with s = t * min(1, lam/K^2),
    halving s up to 6 times on detected nonconvergence; failure after the
    ladder raises AnchorConvergenceError rather than returning silently.
    """
    space = T.space
    u = space.check(u, "u")
    if not (0.0 < t < 1.0):
        raise ValueError("t must lie in (0, 1)")
    if T.linear_rep is not None:
        A, b = T.linear_rep
        M = np.eye(space.dim) - (1.0 - t) * A
        rhs = t * u + (1.0 - t) * b
        try:
            x = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as e:
            raise SingularSystemError(f"anchor system singular at t={t}: {e}") from e
        res = space.norm(x - (t * u + (1.0 - t) * T(x)))
        return AnchorPath(t=t, x=x, solver_residual=res, method="direct")

    s0 = t * min(1.0, T.lambda_claimed / space.K2)
    w0 = u.copy()
    for attempt in range(7):
        s = s0 / 2.0 ** attempt
        w = w0.copy()
        res0 = space.norm(w - (t * u + (1.0 - t) * T(w)))
        best = res0
        for it in range(1, max_inner + 1):
            g = t * u + (1.0 - t) * T(w)
            w = (1.0 - s) * w + s * g
            if it % 32 == 0 or it == max_inner:
                res = space.norm(w - (t * u + (1.0 - t) * T(w)))
                if res <= tol:
                    return AnchorPath(t=t, x=w, solver_residual=res,
                                      method="damped", iterations=it, damping=s)
                if res > 10.0 * max(best, 1.0):
                    break  # diverging: halve the damping and retry
                best = min(best, res)
    raise AnchorConvergenceError(
        f"damped anchor iteration did not reach tol={tol} at t={t} "
        f"within {max_inner} iterations (6 damping halvings tried)")


@dataclass
class AnchorLimitResult:
    """Anchor path evaluated along a decreasing t-grid; z = x at t_min."""

    z: np.ndarray
    t_grid: np.ndarray
    gaps: np.ndarray            # ||x_{t_k} - x_{t_{k+1}}||
    cauchy_ok: bool
    paths: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "z": self.z.tolist(),
            "t_grid": self.t_grid.tolist(),
            "gaps": self.gaps.tolist(),
            "cauchy_ok": self.cauchy_ok,
        }


DEFAULT_T_GRID = tuple(10.0 ** -k for k in range(1, 7))
CAUCHY_GAP_TOL = 1e-4


def anchor_limit(T: Operator, u, t_grid=None, tol: float = 1e-10,
                 max_inner: int = 100000) -> AnchorLimitResult:
    """Designated limit point: the anchor path at the smallest grid t.

    Checks that successive gaps ||x_{t_k} - x_{t_{k+1}}|| are
    nonincreasing and that the final gap is below 1e-4; failure is
    reported in ``cauchy_ok``, not hidden.
    """
    space = T.space
    grid = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if grid.size > 1 and not np.all(np.diff(grid) < 0.0):
        raise ValueError("t_grid must be strictly decreasing")
    paths = [anchor_solve(T, u, float(t), tol=tol, max_inner=max_inner) for t in grid]
    xs = np.array([p.x for p in paths])
    gaps = space.norm_rows(xs[:-1] - xs[1:]) if len(paths) > 1 else np.zeros(0)
    ok = True
    if gaps.size:
        # gaps must be nonincreasing except below the solver noise floor,
        # and the final gap must be small
        floor = 1e-9 * (1.0 + float(space.norm_rows(xs).max()))
        ok = bool(np.all(gaps[1:] <= np.maximum(gaps[:-1], floor))) \
            and gaps[-1] <= CAUCHY_GAP_TOL
    return AnchorLimitResult(z=paths[-1].x, t_grid=grid, gaps=gaps,
                             cauchy_ok=ok, paths=paths)


# -- diagnostics ---------------------------------------------------------------


@dataclass
class TraceDiagnostics:
    """Per-transition proof-device quantities for a finished run."""

    anchor_pairing: Optional[np.ndarray]   # <u - z, J(x_{n+1} - z)>
    ineq35_slack: Optional[np.ndarray]
    key_ineq_slack: Optional[np.ndarray]
    bound_slack: Optional[np.ndarray]      # per state, length N+1
    case_label: str

    def min_slacks(self) -> dict:
        out = {}
        if self.ineq35_slack is not None and self.ineq35_slack.size:
            out["ineq35"] = float(self.ineq35_slack.min())
        if self.key_ineq_slack is not None and self.key_ineq_slack.size:
            out["key_inequality"] = float(self.key_ineq_slack.min())
        if self.bound_slack is not None and self.bound_slack.size:
            out["boundedness"] = float(self.bound_slack.min())
        return out


def _case_label(dists: np.ndarray) -> str:
    """Empirical dichotomy label from the squared-distance sequence.

    "case2" when some ascent happens after the first 10% of steps
    (the reindexing device would be needed), else "case1".
    """
    if dists.size < 2 or not np.all(np.isfinite(dists)):
        return "unknown"
    g = dists * dists
    ascents = np.flatnonzero(g[1:] > g[:-1])
    cut = max(1, int(0.1 * (g.size - 1)))
    return "case2" if np.any(ascents >= cut) else "case1"


def diagnostics(trace: IterationTrace, z=None, p=None) -> TraceDiagnostics:
    """Compute per-transition diagnostics from the stored history.

    Pure numpy over the state history, so results are identical across
    kernel backends. z defaults to the trace's designated limit, p to its
    fixed-point reference.
    """
    space = trace.space
    z = trace.z if z is None else space.check(z, "z")
    p = trace.p if p is None else space.check(p, "p")
    X = trace.x_hist
    N = trace.n_steps
    ap = s35 = key = None
    if z is not None:
        uz = trace.u - z
        Dz = space.norm_rows(X - z)
        dz2 = Dz * Dz
        ap = space.pairing_rows(np.broadcast_to(uz, (N, X.shape[1])), X[1:] - z)
        be = trace.betas
        s35 = (1.0 - be) * dz2[:-1] + 2.0 * be * ap - dz2[1:]
        uz2 = space.norm_sq(uz)
        res = trace.residuals[:-1]
        coef = 2.0 * trace.alphas * (1.0 - be - trace.gammas) \
            * (trace.lam - trace.K2 * trace.alphas)
        key = dz2[:-1] - dz2[1:] + be * uz2 - coef * res * res
    bound = None
    if p is not None:
        ref = max(space.norm(trace.x0 - p), space.norm(trace.u - p))
        bound = ref - space.norm_rows(X - p)
    return TraceDiagnostics(
        anchor_pairing=ap,
        ineq35_slack=s35,
        key_ineq_slack=key,
        bound_slack=bound,
        case_label=_case_label(trace.dists),
    )


def tail_max(arr: np.ndarray, frac: float = 0.1) -> float:
    """Maximum over the trailing ``frac`` of the array."""
    k = max(1, int(frac * arr.size))
    return float(arr[-k:].max())


# -- non-monotone sequence analyzer --------------------------------------------


@dataclass
class TauAnalysis:
    """Ascent-tracking reindexing tau(n) = max{k <= n : g_k < g_{k+1}}.

    ``monotone`` marks sequences with no ascent at all (the monotone
    case needs no reindexing); otherwise ``tau[j]`` holds tau(n0 + j).
    """

    gamma_seq: np.ndarray
    n0: Optional[int]
    tau: np.ndarray
    monotone: bool

    def check_estimates(self) -> tuple:
        """Verify g_{tau(n)} <= g_{tau(n)+1} and g_n <= g_{tau(n)+1} for all n >= n0."""
        if self.monotone:
            return True, True
        g = self.gamma_seq
        t = self.tau
        n = np.arange(self.n0, self.n0 + t.size)
        first = bool(np.all(g[t] <= g[t + 1]))
        second = bool(np.all(g[n] <= g[t + 1]))
        return first, second


def tau_analysis(gamma_seq) -> TauAnalysis:
    """Analyze a real sequence that may fail to decrease.

    Returns the first ascent index n0 and tau(n) for n = n0..len-1, or
    the monotone marker when no ascent exists. tau is nondecreasing by
    construction (a running maximum of ascent indices).
    """
    g = np.asarray(gamma_seq, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("gamma_seq must be a 1-D sequence of length >= 2")
    ascent = g[:-1] < g[1:]
    if not ascent.any():
        return TauAnalysis(g, None, np.zeros(0, dtype=np.int64), True)
    idx = np.arange(g.size - 1)
    marked = np.where(ascent, idx, -1)
    run_max = np.maximum.accumulate(marked)
    n0 = int(np.flatnonzero(ascent)[0])
    # tau(n) for n in [n0, len-1]; for n = len-1 the max is over k <= len-2
    tau_full = np.concatenate([run_max, [run_max[-1]]])
    return TauAnalysis(g, n0, tau_full[n0:].astype(np.int64), False)


# -- scalar error recursion -----------------------------------------------------


def simulate_error_recursion(t_seq, c_seq, a0: float, horizon: int) -> np.ndarray:
    """Simulate a_{n+1} = (1 - t_n) a_n + t_n c_n with equality.

    t and c may be Sequence objects or arrays. The recursion drives a_n
    to zero whenever t_n in [0, 1] has a divergent sum and
    limsup c_n <= 0; feeding it a c with positive limsup shows the
    hypothesis matters (a_n stabilizes near that limsup instead).
    """
    if a0 < 0:
        raise ValueError("a0 must be nonnegative")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    t = t_seq.array(0, horizon) if hasattr(t_seq, "array") else \
        np.asarray(t_seq, dtype=np.float64)[:horizon]
    c = c_seq.array(0, horizon) if hasattr(c_seq, "array") else \
        np.asarray(c_seq, dtype=np.float64)[:horizon]
    if t.size < horizon or c.size < horizon:
        raise ValueError("t_seq and c_seq must cover the horizon")
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("t_n must lie in [0, 1]")
    a = np.empty(horizon + 1)
    a[0] = a0
    for n in range(horizon):
        a[n + 1] = (1.0 - t[n]) * a[n] + t[n] * c[n]
    return a
