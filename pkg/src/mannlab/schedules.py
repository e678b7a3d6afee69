"""Closed-form parameter sequences and convergence-condition validators.

Three validator families are provided, all returning per-condition
verdicts with finite-horizon caveats:

* ``validate_relaxed`` — the relaxed condition set for the three-sequence
  scheme: alpha_n in [0, mu] with liminf alpha_n*(lam - K2*alpha_n) > 0,
  beta_n -> 0 with divergent sum, and limsup gamma_n < 1.
* ``validate_relaxed_q`` — the same with the q-smooth margin
  alpha_n*(q*lam - Cq*alpha_n^(q-1)) and mu = min(1, (q*lam/Cq)^(1/(q-1))).
  At q = 2, Cq = 2*K2 its condition (i) verdict coincides with the
  2-smooth one.
* ``validate_legacy`` — two stricter historical condition sets:
  "interior" additionally demands alpha_n in [a, mu] for some a > 0,
  vanishing alpha increments, and gamma_n bounded inside (0, 1);
  "summable" applies to the anchor-only scheme (gamma == 0) and demands
  summable alpha and beta increments. Experiments use these to exhibit
  schedules the relaxed conditions accept but the legacy ones reject
  (gamma == 0 and gamma = 1/(n+1) are the canonical examples).

Asymptotic facts (limits, limsups, series divergence) are decided
symbolically for closed-form kinds; custom tables fall back to tail
heuristics over the last half of the horizon with margin ``DELTA`` and
the verdict notes say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ScheduleError

# Tail-heuristic margin and the partial-sum threshold standing in for
# "diverges" when only finite data is available.
DELTA = 1e-3
DIVERGENCE_THRESHOLD = 10.0

CONSTANT = "constant"
POWER = "power"
HARMONIC = "harmonic"
ZERO = "zero"
TABLE = "table"


@dataclass(frozen=True)
class Sequence:
    """A parameter sequence evaluable at every n >= 0.

    Kinds: constant(c); power(a, b) = a/(n+1)^b; harmonic = 1/(n+1);
    zero; table (explicit values).
    """

    kind: str
    c: float = 0.0
    a: float = 1.0
    b: float = 1.0
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in (CONSTANT, POWER, HARMONIC, ZERO, TABLE):
            raise ConfigError(f"unknown sequence kind {self.kind!r}")
        if self.kind == TABLE and not self.values:
            raise ConfigError("table sequence requires values")

    def value(self, n: int) -> float:
        # single-sourced through array() so scalar and vectorized
        # evaluation are bit-identical (libm vs numpy pow differ by ulps)
        return float(self.array(n, 1)[0])

    def array(self, start: int, count: int) -> np.ndarray:
        """Values at n = start, ..., start + count - 1."""
        n = np.arange(start, start + count, dtype=np.float64)
        if self.kind == CONSTANT:
            return np.full(count, self.c)
        if self.kind == POWER:
            return self.a / (n + 1.0) ** self.b
        if self.kind == HARMONIC:
            return 1.0 / (n + 1.0)
        if self.kind == ZERO:
            return np.zeros(count)
        if start + count > len(self.values):
            raise ScheduleError(
                f"table sequence of length {len(self.values)} cannot cover "
                f"n in [{start}, {start + count})"
            )
        return np.asarray(self.values[start:start + count], dtype=np.float64)

    @property
    def is_closed_form(self) -> bool:
        return self.kind != TABLE

    def limit(self) -> Optional[float]:
        """Symbolic limit, or None when undecidable (tables)."""
        if self.kind == CONSTANT:
            return self.c
        if self.kind == POWER:
            if self.b > 0:
                return 0.0
            if self.b == 0:
                return self.a
            return None  # b < 0 diverges
        if self.kind == HARMONIC:
            return 0.0
        if self.kind == ZERO:
            return 0.0
        return None

    def limsup(self) -> Optional[float]:
        return self.limit()

    def liminf(self) -> Optional[float]:
        return self.limit()

    def series_diverges(self) -> Optional[bool]:
        """Exact p-series classification for closed forms; None for tables."""
        if self.kind == CONSTANT:
            return self.c > 0.0
        if self.kind == POWER:
            return self.a > 0.0 and self.b <= 1.0
        if self.kind == HARMONIC:
            return True
        if self.kind == ZERO:
            return False
        return None

    def is_identically_zero(self) -> bool:
        if self.kind == ZERO:
            return True
        if self.kind == CONSTANT:
            return self.c == 0.0
        if self.kind == POWER:
            return self.a == 0.0
        if self.kind == TABLE:
            return all(v == 0.0 for v in self.values)
        return False

    def describe(self) -> str:
        if self.kind == CONSTANT:
            return f"constant({self.c:g})"
        if self.kind == POWER:
            return f"power(a={self.a:g}, b={self.b:g})"
        if self.kind == TABLE:
            return f"table(len={len(self.values)})"
        return self.kind


def constant(c: float) -> Sequence:
    return Sequence(CONSTANT, c=float(c))


def power(a: float, b: float) -> Sequence:
    return Sequence(POWER, a=float(a), b=float(b))


def harmonic() -> Sequence:
    return Sequence(HARMONIC)


def zero() -> Sequence:
    return Sequence(ZERO)


def table(values) -> Sequence:
    return Sequence(TABLE, values=tuple(float(v) for v in values))


_SEQ_KEYS = {
    CONSTANT: {"kind", "c"},
    POWER: {"kind", "a", "b"},
    HARMONIC: {"kind"},
    ZERO: {"kind"},
    TABLE: {"kind", "values"},
}


def sequence_from_config(cfg: dict) -> Sequence:
    if "kind" not in cfg:
        raise ConfigError("sequence config requires 'kind'")
    kind = cfg["kind"]
    if kind not in _SEQ_KEYS:
        raise ConfigError(f"unknown sequence kind {kind!r}")
    unknown = set(cfg) - _SEQ_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown sequence fields for {kind}: {sorted(unknown)}")
    if kind == CONSTANT:
        return constant(cfg["c"])
    if kind == POWER:
        return power(cfg.get("a", 1.0), cfg.get("b", 1.0))
    if kind == HARMONIC:
        return harmonic()
    if kind == ZERO:
        return zero()
    return table(cfg["values"])


@dataclass(frozen=True)
class ScheduleSet:
    """The three parameter sequences of the iteration."""

    alpha: Sequence
    beta: Sequence
    gamma: Sequence

    def arrays(self, start: int, count: int):
        return (
            self.alpha.array(start, count),
            self.beta.array(start, count),
            self.gamma.array(start, count),
        )

    def describe(self) -> str:
        return (f"alpha={self.alpha.describe()}, beta={self.beta.describe()}, "
                f"gamma={self.gamma.describe()}")


_SCHEDULE_KEYS = {"alpha", "beta", "gamma", "start"}


def schedules_from_config(cfg: dict) -> ScheduleSet:
    unknown = set(cfg) - _SCHEDULE_KEYS
    if unknown:
        raise ConfigError(f"unknown schedule fields: {sorted(unknown)}")
    for key in ("alpha", "beta", "gamma"):
        if key not in cfg:
            raise ConfigError(f"schedule config requires '{key}'")
    return ScheduleSet(
        sequence_from_config(cfg["alpha"]),
        sequence_from_config(cfg["beta"]),
        sequence_from_config(cfg["gamma"]),
    )


def mu_bound(lam: float, K2: float) -> float:
    """Admissible upper bound for alpha: min(1, lam/K^2)."""
    return min(1.0, lam / K2)


def mu_bound_q(lam: float, q: float, Cq: float) -> float:
    """q-smooth admissible upper bound: min(1, (q*lam/Cq)^(1/(q-1)))."""
    return min(1.0, (q * lam / Cq) ** (1.0 / (q - 1.0)))


# -- verdicts -----------------------------------------------------------------


@dataclass
class ConditionVerdict:
    condition: str
    passed: bool
    margin: float
    note: str

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "pass": self.passed,
            "margin": self.margin,
            "note": self.note,
        }


@dataclass
class VerdictReport:
    name: str
    conditions: list
    start: int
    horizon: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, label: str) -> ConditionVerdict:
        for c in self.conditions:
            if c.condition == label:
                return c
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "start": self.start,
            "horizon": self.horizon,
            "conditions": [c.to_dict() for c in self.conditions],
        }


_SYMBOLIC = "asymptotic condition verified symbolically"
_FINITE = "asymptotic condition verified at finite horizon (tail heuristic)"


def _tail(arr: np.ndarray) -> np.ndarray:
    return arr[arr.shape[0] // 2:]


def _feasibility(alphas, betas, gammas, mu, start, notes=()) -> ConditionVerdict:
    """Pointwise membership over the window: alpha in [0, mu], beta in (0,1),
    gamma in [0,1), beta+gamma < 1.

    alpha = 0 is accepted pointwise even though the sequences are nominally
    in (0,1); the note flags this reading.
    """
    problems = []
    if np.any(alphas < 0.0) or np.any(alphas > mu + 1e-12):
        problems.append(f"alpha outside [0, {mu:.6g}]")
    if np.any(betas <= 0.0) or np.any(betas >= 1.0):
        problems.append("beta outside (0, 1)")
    if np.any(gammas < 0.0) or np.any(gammas >= 1.0):
        problems.append("gamma outside [0, 1)")
    s = betas + gammas
    if np.any(s >= 1.0):
        problems.append("beta + gamma >= 1")
    margin = float(min(
        (1.0 - s).min(),
        (mu - alphas).min(),
        alphas.min() - 0.0,
    ))
    note = "; ".join(problems) if problems else (
        "alpha = 0 accepted pointwise (liminf margin rules out degenerate tails)"
    )
    if notes:
        note = note + "; " + "; ".join(notes)
    return ConditionVerdict("feasibility", not problems, margin, note)


def _alpha_margin_condition(alpha: Sequence, alphas: np.ndarray, margin_fn,
                            symbolic_margin) -> ConditionVerdict:
    """(i): liminf of the step margin must be positive."""
    if alpha.is_closed_form:
        lim = alpha.limit()
        if lim is None:
            passed, margin, note = False, 0.0, "alpha diverges"
        else:
            margin = float(symbolic_margin(lim))
            passed = margin > 0.0
            note = _SYMBOLIC
    else:
        tail_margin = margin_fn(_tail(alphas))
        margin = float(tail_margin.min())
        passed = margin >= DELTA
        note = _FINITE
    return ConditionVerdict("(i) liminf step margin > 0", passed, margin, note)


def _beta_condition(beta: Sequence, betas: np.ndarray) -> ConditionVerdict:
    """(ii): beta -> 0 and the series diverges."""
    if beta.is_closed_form:
        lim = beta.limit()
        div = beta.series_diverges()
        passed = (lim == 0.0) and bool(div)
        margin = float(betas[-1])
        note = _SYMBOLIC + (
            "" if passed else
            f" (limit={lim}, diverges={div})"
        )
    else:
        lim_ok = betas[-1] < DELTA
        psum = float(betas.sum())
        passed = lim_ok and psum >= DIVERGENCE_THRESHOLD
        margin = psum
        note = _FINITE + f" (partial sum {psum:.3g} vs threshold {DIVERGENCE_THRESHOLD})"
    return ConditionVerdict("(ii) beta -> 0 and sum beta = inf", passed, margin, note)


def _gamma_condition(gamma: Sequence, gammas: np.ndarray) -> ConditionVerdict:
    """(iii): limsup gamma < 1."""
    if gamma.is_closed_form:
        ls = gamma.limsup()
        if ls is None:
            passed, margin, note = False, 0.0, "gamma diverges"
        else:
            margin = float(1.0 - ls)
            passed = margin > 0.0
            note = _SYMBOLIC
    else:
        margin = float(1.0 - _tail(gammas).max())
        passed = margin >= DELTA
        note = _FINITE
    return ConditionVerdict("(iii) limsup gamma < 1", passed, margin, note)


def validate_relaxed(s: ScheduleSet, lam: float, K2: float, horizon: int = 10000,
                     start: int = 0) -> VerdictReport:
    """Validate the relaxed condition set for the three-sequence scheme."""
    if horizon < 1:
        raise ScheduleError("horizon must be >= 1")
    mu = mu_bound(lam, K2)
    alphas, betas, gammas = s.arrays(start, horizon)
    conds = [
        _feasibility(alphas, betas, gammas, mu, start),
        _alpha_margin_condition(
            s.alpha, alphas,
            lambda a: a * (lam - K2 * a),
            lambda L: L * (lam - K2 * L),
        ),
        _beta_condition(s.beta, betas),
        _gamma_condition(s.gamma, gammas),
    ]
    return VerdictReport("relaxed", conds, start, horizon)


def validate_relaxed_q(s: ScheduleSet, lam: float, q: float, Cq: float,
                       horizon: int = 10000, start: int = 0) -> VerdictReport:
    """Validate the q-smooth variant of the relaxed conditions (q > 1)."""
    if q <= 1.0:
        raise ScheduleError("q must be > 1")
    if Cq <= 0.0:
        raise ScheduleError("Cq must be positive")
    if horizon < 1:
        raise ScheduleError("horizon must be >= 1")
    mu = mu_bound_q(lam, q, Cq)
    alphas, betas, gammas = s.arrays(start, horizon)
    conds = [
        _feasibility(alphas, betas, gammas, mu, start),
        _alpha_margin_condition(
            s.alpha, alphas,
            lambda a: a * (q * lam - Cq * a ** (q - 1.0)),
            lambda L: L * (q * lam - Cq * L ** (q - 1.0)),
        ),
        _beta_condition(s.beta, betas),
        _gamma_condition(s.gamma, gammas),
    ]
    return VerdictReport("relaxed_q", conds, start, horizon)


LEGACY_INTERIOR = "interior"
LEGACY_SUMMABLE = "summable"


def _diff_limit_condition(seq: Sequence, arr: np.ndarray, label: str) -> ConditionVerdict:
    """lim |x_{n+1} - x_n| = 0."""
    if seq.is_closed_form:
        # constants have zero increments; monotone power tails vanish
        passed = seq.limit() is not None
        margin = 0.0 if seq.kind in (CONSTANT, ZERO) else float(abs(arr[-1] - arr[-2]))
        note = _SYMBOLIC
    else:
        diffs = np.abs(np.diff(arr))
        margin = float(_tail(diffs).max())
        passed = margin < DELTA
        note = _FINITE
    return ConditionVerdict(label, passed, margin, note)


def _diff_summable_condition(seq: Sequence, arr: np.ndarray, label: str) -> ConditionVerdict:
    """sum |x_{n+1} - x_n| < inf."""
    if seq.is_closed_form:
        # constants: zero; monotone power decays: the increments telescope
        # to at most the first value, hence summable.
        passed = seq.limit() is not None
        margin = float(np.abs(np.diff(arr)).sum())
        note = _SYMBOLIC + " (monotone closed form: increments telescope)"
    else:
        margin = float(np.abs(np.diff(arr)).sum())
        passed = float(np.abs(np.diff(_tail(arr))).sum()) < DELTA
        note = _FINITE
    return ConditionVerdict(label, passed, margin, note)


def validate_legacy(s: ScheduleSet, which: str, horizon: int = 10000,
                    start: int = 0, lam: Optional[float] = None,
                    K2: Optional[float] = None) -> VerdictReport:
    """Validate one of the stricter legacy condition sets.

    "interior": (i) alpha in [a, mu] for some a > 0; (ii) beta -> 0 with
    divergent sum; (iii) lim |alpha increments| = 0; (iv) gamma bounded
    inside (0, 1). "summable": requires gamma == 0, (i) as above,
    (ii) summable alpha increments, (iii) beta -> 0 with divergent sum
    and summable beta increments. When lam/K2 are omitted the alpha upper
    bound is taken as 1 and the note says so.
    """
    if horizon < 2:
        raise ScheduleError("horizon must be >= 2")
    if which not in (LEGACY_INTERIOR, LEGACY_SUMMABLE):
        raise ScheduleError(f"unknown legacy condition set {which!r}")
    alphas, betas, gammas = s.arrays(start, horizon)
    if lam is not None and K2 is not None:
        mu = mu_bound(lam, K2)
        mu_note = ""
    else:
        mu = 1.0
        mu_note = " (mu defaulted to 1: lam/K2 not supplied)"

    def interior_alpha() -> ConditionVerdict:
        if s.alpha.is_closed_form:
            # all closed-form kinds are monotone, so liminf = limit
            lim = s.alpha.limit()
            sup_a = float(alphas.max())
            passed = lim is not None and lim > 0.0 and sup_a <= mu + 1e-12
            margin = float(lim if lim is not None else 0.0)
            note = _SYMBOLIC + mu_note
        else:
            margin = float(_tail(alphas).min())
            passed = margin >= DELTA and float(alphas.max()) <= mu + 1e-12
            note = _FINITE + mu_note
        return ConditionVerdict("(i) alpha in [a, mu], a > 0", passed, margin, note)

    conds = [interior_alpha()]
    if which == LEGACY_INTERIOR:
        conds.append(_beta_condition(s.beta, betas))
        diff = _diff_limit_condition(s.alpha, alphas, "(iii) lim |alpha diffs| = 0")
        conds.append(diff)
        # (iv): 0 < liminf gamma <= limsup gamma < 1
        if s.gamma.is_closed_form:
            li, ls = s.gamma.liminf(), s.gamma.limsup()
            passed = li is not None and ls is not None and li > 0.0 and ls < 1.0
            margin = float(min(li if li is not None else 0.0,
                               1.0 - (ls if ls is not None else 1.0)))
            note = _SYMBOLIC
        else:
            t = _tail(gammas)
            margin = float(min(t.min(), 1.0 - t.max()))
            passed = margin >= DELTA
            note = _FINITE
        conds.append(ConditionVerdict("(iv) 0 < liminf gamma <= limsup gamma < 1",
                                      passed, margin, note))
        return VerdictReport("legacy_interior", conds, start, horizon)

    # "summable" applies to the anchor-only scheme.
    gz = s.gamma.is_identically_zero()
    conds.append(ConditionVerdict(
        "(0) gamma identically 0", gz, 0.0,
        "condition set applies to the gamma-free scheme only"))
    conds.append(_diff_summable_condition(s.alpha, alphas, "(ii) sum |alpha diffs| < inf"))
    conds.append(_beta_condition(s.beta, betas))
    conds.append(_diff_summable_condition(s.beta, betas, "(iii b) sum |beta diffs| < inf"))
    return VerdictReport("legacy_summable", conds, start, horizon)


# -- run feasibility ----------------------------------------------------------


def find_start_index(s: ScheduleSet, lam: float, K2: float, horizon: int,
                     limit: int = 10000) -> int:
    """Smallest start index from which the whole run window is feasible.

    Feasible at n means alpha_n in [0, mu], beta_n in (0, 1),
    gamma_n in [0, 1) and beta_n + gamma_n < 1. Closed-form kinds like
    beta = (n+1)^(-1/2) violate these at small n (beta_0 = 1), so a run
    starts at the first index whose entire window passes; raises when no
    such index exists within ``limit``.
    """
    mu = mu_bound(lam, K2)
    total = limit + horizon
    alphas, betas, gammas = s.arrays(0, total)
    feasible = (
        (alphas >= 0.0) & (alphas <= mu + 1e-12)
        & (betas > 0.0) & (betas < 1.0)
        & (gammas >= 0.0) & (gammas < 1.0)
        & (betas + gammas < 1.0)
    )
    bad = np.flatnonzero(~feasible[:limit])
    candidate = 0 if bad.size == 0 else int(bad.max()) + 1
    if candidate > limit or not feasible[candidate:candidate + horizon].all():
        raise ScheduleError(
            f"no feasible start index within {limit} steps for {s.describe()}"
        )
    return candidate


def resolve_start(s: ScheduleSet, start, lam: float, K2: float, horizon: int) -> int:
    """Resolve a config 'start' field ('auto' or an int) and enforce feasibility."""
    if start == "auto" or start is None:
        return find_start_index(s, lam, K2, horizon)
    start = int(start)
    mu = mu_bound(lam, K2)
    alphas, betas, gammas = s.arrays(start, horizon)
    ok = (
        (alphas >= 0.0) & (alphas <= mu + 1e-12)
        & (betas > 0.0) & (betas < 1.0)
        & (gammas >= 0.0) & (gammas < 1.0)
        & (betas + gammas < 1.0)
    )
    if not ok.all():
        n_bad = int(np.flatnonzero(~ok)[0]) + start
        raise ScheduleError(
            f"schedule infeasible at n={n_bad} (start={start}): "
            "requires alpha in [0, mu], beta in (0,1), gamma in [0,1), beta+gamma < 1"
        )
    return start
