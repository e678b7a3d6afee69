import numpy as np
import pytest

from mannlab import (
    ScheduleSet,
    constant,
    find_start_index,
    harmonic,
    mu_bound,
    power,
    table,
    validate_legacy,
    validate_relaxed,
    validate_relaxed_q,
    zero,
)
from mannlab.errors import ConfigError, ScheduleError
from mannlab.schedules import (
    LEGACY_INTERIOR,
    LEGACY_SUMMABLE,
    resolve_start,
    schedules_from_config,
    sequence_from_config,
)
from mannlab.util import child_rng


def sset(alpha, beta, gamma):
    return ScheduleSet(alpha, beta, gamma)


GOOD_BETA = power(1.0, 0.5)


# -- sequences ------------------------------------------------------------------

def test_sequence_values():
    assert constant(0.4).value(17) == 0.4
    assert power(1.0, 0.5).value(3) == pytest.approx(0.5)
    assert harmonic().value(4) == pytest.approx(0.2)
    assert zero().value(0) == 0.0
    assert table([0.1, 0.2]).value(1) == 0.2


def test_sequence_array_matches_values():
    for seq in (constant(0.3), power(2.0, 1.5), harmonic(), zero()):
        arr = seq.array(5, 10)
        expect = [seq.value(n) for n in range(5, 15)]
        np.testing.assert_allclose(arr, expect, rtol=0, atol=0)


def test_table_exhaustion():
    seq = table([0.1, 0.2, 0.3])
    with pytest.raises(ScheduleError):
        seq.value(3)
    with pytest.raises(ScheduleError):
        seq.array(1, 5)


def test_sequence_from_config():
    assert sequence_from_config({"kind": "constant", "c": 0.5}) == constant(0.5)
    assert sequence_from_config({"kind": "power", "a": 1.0, "b": 0.5}) == power(1.0, 0.5)
    assert sequence_from_config({"kind": "harmonic"}) == harmonic()
    with pytest.raises(ConfigError):
        sequence_from_config({"kind": "power", "a": 1.0, "c": 0.5})
    with pytest.raises(ConfigError):
        sequence_from_config({"kind": "geometric"})


def test_schedules_from_config_strict():
    cfg = {"alpha": {"kind": "constant", "c": 0.5},
           "beta": {"kind": "power", "a": 1.0, "b": 0.5},
           "gamma": {"kind": "harmonic"}}
    s = schedules_from_config(cfg)
    assert s.alpha == constant(0.5)
    with pytest.raises(ConfigError):
        schedules_from_config({**cfg, "delta": {"kind": "zero"}})


# -- relaxed validator -----------------------------------------------------------

def test_relaxed_constant_alpha_passes():
    # lam = K2 = 0.5, alpha = 0.5: margin 0.5*(0.5 - 0.25) = 0.125 > 0
    s = sset(constant(0.5), GOOD_BETA, harmonic())
    rep = validate_relaxed(s, lam=0.5, K2=0.5, horizon=1000, start=2)
    assert rep.passed
    assert rep.condition("(i) liminf step margin > 0").margin == pytest.approx(0.125)


def test_relaxed_vanishing_alpha_fails():
    s = sset(harmonic(), GOOD_BETA, harmonic())
    rep = validate_relaxed(s, lam=0.5, K2=0.5, horizon=1000, start=2)
    assert not rep.condition("(i) liminf step margin > 0").passed


def test_relaxed_beta_gamma_classification():
    s = sset(constant(0.4), power(1.0, 0.5), harmonic())
    rep = validate_relaxed(s, lam=0.4, K2=0.5, horizon=1000, start=2)
    assert rep.condition("(ii) beta -> 0 and sum beta = inf").passed
    assert rep.condition("(iii) limsup gamma < 1").passed
    assert rep.passed


def test_relaxed_beta_failures():
    # constant beta: limit nonzero
    rep = validate_relaxed(sset(constant(0.4), constant(0.3), zero()),
                           0.4, 0.5, 1000, 0)
    assert not rep.condition("(ii) beta -> 0 and sum beta = inf").passed
    # summable beta: b > 1
    rep = validate_relaxed(sset(constant(0.4), power(1.0, 1.5), zero()),
                           0.4, 0.5, 1000, 2)
    assert not rep.condition("(ii) beta -> 0 and sum beta = inf").passed


def test_relaxed_gamma_failure():
    rep = validate_relaxed(sset(constant(0.4), GOOD_BETA, constant(1.0)),
                           0.4, 0.5, 1000, 2)
    assert not rep.passed


def test_relaxed_alpha_membership():
    # alpha above mu = min(1, lam/K2) = 0.8 violates feasibility
    rep = validate_relaxed(sset(constant(0.9), GOOD_BETA, zero()),
                           0.4, 0.5, 1000, 2)
    assert not rep.condition("feasibility").passed


def test_relaxed_table_tail_heuristic():
    n_tab = 3000
    s = sset(table([0.4] * n_tab),
             table([2.0 / (n + 3) for n in range(n_tab)]),
             table([0.0] * n_tab))
    rep = validate_relaxed(s, 0.4, 0.5, horizon=n_tab, start=0)
    assert rep.passed
    note = rep.condition("(i) liminf step margin > 0").note
    assert "finite horizon" in note


# -- q-smooth validator ------------------------------------------------------------

def test_relaxed_q_example():
    s = sset(constant(0.5), GOOD_BETA, harmonic())
    rep = validate_relaxed_q(s, lam=0.5, q=2.0, Cq=1.0, horizon=1000, start=2)
    cond = rep.condition("(i) liminf step margin > 0")
    assert cond.passed
    assert cond.margin == pytest.approx(0.5 * (2 * 0.5 - 1.0 * 0.5), rel=1e-12)


def test_relaxed_q_zero_alpha_fails():
    s = sset(zero(), GOOD_BETA, harmonic())
    rep = validate_relaxed_q(s, lam=0.5, q=2.0, Cq=1.0, horizon=1000, start=2)
    assert not rep.condition("(i) liminf step margin > 0").passed


def test_relaxed_q_requires_q_above_one():
    s = sset(constant(0.5), GOOD_BETA, harmonic())
    with pytest.raises(ScheduleError):
        validate_relaxed_q(s, 0.5, q=1.0, Cq=1.0)


def test_relaxed_q_agrees_with_relaxed_at_q2():
    # at q=2, Cq=2*K2 the two condition-(i) verdicts coincide
    rng = child_rng(31)
    lam, K2 = 0.5, 0.5
    for _ in range(20):
        c = float(rng.uniform(0.0, 1.0))
        s = sset(constant(c), GOOD_BETA, harmonic())
        r1 = validate_relaxed(s, lam, K2, horizon=200, start=2)
        r2 = validate_relaxed_q(s, lam, q=2.0, Cq=2.0 * K2, horizon=200, start=2)
        assert (r1.condition("(i) liminf step margin > 0").passed
                == r2.condition("(i) liminf step margin > 0").passed)
        assert (r1.condition("feasibility").passed
                == r2.condition("feasibility").passed)


# -- legacy validators ---------------------------------------------------------------

def test_legacy_interior_rejects_vanishing_gamma():
    lam, K2 = 0.4, 0.5
    for gam in (zero(), harmonic()):
        s = sset(constant(0.4), GOOD_BETA, gam)
        legacy = validate_legacy(s, LEGACY_INTERIOR, 1000, 2, lam=lam, K2=K2)
        assert not legacy.condition(
            "(iv) 0 < liminf gamma <= limsup gamma < 1").passed
        relaxed = validate_relaxed(s, lam, K2, 1000, 2)
        assert relaxed.condition("(iii) limsup gamma < 1").passed
        assert relaxed.passed


def test_legacy_interior_constant_alpha_passes():
    s = sset(constant(0.4), GOOD_BETA, constant(0.5))
    rep = validate_legacy(s, LEGACY_INTERIOR, 1000, 4, lam=0.4, K2=0.5)
    assert rep.condition("(i) alpha in [a, mu], a > 0").passed
    assert rep.condition("(iii) lim |alpha diffs| = 0").passed
    assert rep.passed


def test_legacy_interior_rejects_vanishing_alpha():
    s = sset(harmonic(), GOOD_BETA, constant(0.5))
    rep = validate_legacy(s, LEGACY_INTERIOR, 1000, 4, lam=0.4, K2=0.5)
    assert not rep.condition("(i) alpha in [a, mu], a > 0").passed


def test_legacy_summable_gamma_gate():
    s = sset(constant(0.4), GOOD_BETA, zero())
    rep = validate_legacy(s, LEGACY_SUMMABLE, 1000, 2, lam=0.4, K2=0.5)
    assert rep.passed
    s2 = sset(constant(0.4), GOOD_BETA, harmonic())
    rep2 = validate_legacy(s2, LEGACY_SUMMABLE, 1000, 2, lam=0.4, K2=0.5)
    assert not rep2.condition("(0) gamma identically 0").passed


def test_legacy_implies_relaxed():
    # any schedule passing the interior legacy set passes the relaxed one
    rng = child_rng(32)
    lam, K2 = 0.5, 0.5
    checked = 0
    for _ in range(200):
        a = float(rng.uniform(0.01, 1.2))
        g = float(rng.uniform(0.0, 1.0))
        s = sset(constant(a), power(1.0, float(rng.uniform(0.1, 1.0))), constant(g))
        try:
            start = find_start_index(s, lam, K2, 200)
        except ScheduleError:
            continue
        legacy = validate_legacy(s, LEGACY_INTERIOR, 200, start, lam=lam, K2=K2)
        if not legacy.passed:
            continue
        # the legacy margin alpha <= mu is not quite enough for the relaxed
        # margin alpha*(lam - K2*alpha) > 0 at alpha = mu exactly; the strict
        # interior [a, mu) cases must pass
        if a < mu_bound(lam, K2):
            checked += 1
            assert validate_relaxed(s, lam, K2, 200, start).passed
    assert checked > 10


# -- feasibility / start index ---------------------------------------------------------

def test_find_start_index_benchmark_schedule():
    s = sset(constant(0.4), power(1.0, 0.5), harmonic())
    assert find_start_index(s, 0.4, 0.5, 1000) == 2


def test_find_start_index_constant_gamma():
    s = sset(constant(0.4), power(1.0, 0.5), constant(0.5))
    # need (n+1)^-0.5 < 0.5  =>  n >= 4
    assert find_start_index(s, 0.4, 0.5, 1000) == 4


def test_find_start_index_already_feasible():
    s = sset(constant(0.4), constant(0.5), zero())
    assert find_start_index(s, 0.4, 0.5, 1000) == 0


def test_find_start_index_hopeless():
    s = sset(constant(0.4), constant(1.0), zero())  # beta = 1 forever
    with pytest.raises(ScheduleError):
        find_start_index(s, 0.4, 0.5, 100, limit=50)


def test_resolve_start_explicit_checks_window():
    s = sset(constant(0.4), power(1.0, 0.5), harmonic())
    assert resolve_start(s, 5, 0.4, 0.5, 100) == 5
    with pytest.raises(ScheduleError):
        resolve_start(s, 0, 0.4, 0.5, 100)  # beta_0 = 1 infeasible


def test_verdict_report_serialization():
    s = sset(constant(0.4), GOOD_BETA, harmonic())
    d = validate_relaxed(s, 0.4, 0.5, 100, 2).to_dict()
    assert d["pass"] is True
    assert {c["condition"] for c in d["conditions"]} >= {
        "feasibility", "(i) liminf step margin > 0",
        "(ii) beta -> 0 and sum beta = inf", "(iii) limsup gamma < 1"}
    for c in d["conditions"]:
        assert set(c) == {"condition", "pass", "margin", "note"}
