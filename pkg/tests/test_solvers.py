import math

import numpy as np
import pytest

from egtplex.dgf import DgfContext
from egtplex.efg import saddle_residual, sequence_form_of_matrix
from egtplex.solvers import (
    CSV_HEADER,
    Checkpoints,
    ConvergenceRecord,
    anytime_bound,
    cfr_run,
    egt_init,
    egt_run,
    egt_step,
    records_from_csv,
    records_to_csv,
    smoothed_bounds,
    traversal_count,
)
from egtplex.solvers.cfr import RegretTable


def contexts(problem, scheme="recurrence:2"):
    return DgfContext.build(problem.X, scheme), DgfContext.build(problem.Y, scheme)


# --------------------------------------------------------------------- EGT
def test_init_interior_and_finite(rps):
    cx, cy = contexts(rps)
    s = egt_init(rps, cx, cy, 1.0)
    assert np.all(s.x > 0) and np.all(s.y > 0)
    assert math.isfinite(saddle_residual(rps, s.x, s.y))
    assert s.traversals == 3


def test_init_trivial_game():
    p = sequence_form_of_matrix([[0.0]])
    cx, cy = contexts(p)
    s = egt_init(p, cx, cy)
    assert saddle_residual(p, s.x, s.y) == 0


def test_init_rejects_bad_mu(rps):
    cx, cy = contexts(rps)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            egt_init(rps, cx, cy, bad)


def test_init_traversals_on_leduc(leduc3):
    cx, cy = contexts(leduc3, "new")
    assert egt_init(leduc3, cx, cy, 1e-3).traversals == 3


def test_step_shrinks_one_mu_and_stays_feasible(leduc2):
    cx, cy = contexts(leduc2)
    s = egt_init(leduc2, cx, cy)
    for _ in range(6):
        tau = 2 / (s.t + 3)
        n = egt_step(s, leduc2, cx, cy)
        if s.t % 2 == 0:
            assert n.mu1 == pytest.approx((1 - tau) * s.mu1) and n.mu2 == s.mu2
        else:
            assert n.mu2 == pytest.approx((1 - tau) * s.mu2) and n.mu1 == s.mu1
        assert n.mu1 * n.mu2 < s.mu1 * s.mu2
        assert leduc2.X.constraint_residual(n.x) <= 1e-9
        assert leduc2.Y.constraint_residual(n.y) <= 1e-9
        assert n.traversals == s.traversals + 3
        s = n


def test_traversals_after_ten_steps(rps):
    cx, cy = contexts(rps)
    s = egt_init(rps, cx, cy)
    for _ in range(10):
        s = egt_step(s, rps, cx, cy)
    assert s.traversals == 3 + 30


def test_excessive_gap_on_random_game(rng):
    p = sequence_form_of_matrix(rng.uniform(-1, 1, size=(4, 3)))
    cx, cy = contexts(p)
    res = egt_run(p, cx, cy, 1.0, max_iters=200, check_gap=True)
    for _, up, lo in res.gaps:
        assert up <= lo + 1e-8 * max(1.0, abs(lo))


def test_egt_rps(rps):
    cx, cy = contexts(rps)
    assert egt_run(rps, cx, cy, 1.0, max_iters=1000).final_eps < 1e-3


def test_egt_drives_skewed_rps_down():
    # perturbed rock-paper-scissors, so the start is not already the equilibrium
    M = np.array([[0.0, 1.0, -2.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]])
    p = sequence_form_of_matrix(M)
    cx, cy = contexts(p)
    res = egt_run(p, cx, cy, 1.0, max_iters=2048)
    assert res.final_eps < 1e-3
    tail = [r.eps_sad for r in res.records if r.iteration >= 16]
    assert all(b < a for a, b in zip(tail, tail[1:]))


def test_egt_pennies_reaches_target(pennies):
    cx, cy = contexts(pennies)
    res = egt_run(pennies, cx, cy, 1.0, target_eps=1e-4, max_iters=5000)
    assert res.converged and not res.budget_exhausted
    assert res.final_eps <= 1e-4


def test_budget_exhaustion_flagged(leduc2):
    cx, cy = contexts(leduc2)
    res = egt_run(leduc2, cx, cy, 1.0, target_eps=1e-9, max_iters=5)
    assert res.budget_exhausted and not res.converged
    assert res.records[-1].iteration == 5


def test_records_strictly_increase(leduc2):
    cx, cy = contexts(leduc2, "new")
    res = egt_run(leduc2, cx, cy, 1e-3, max_iters=100)
    trav = [r.traversals for r in res.records]
    assert trav == sorted(set(trav))
    assert [r.iteration for r in res.records] == [0, 1, 2, 4, 8, 16, 32, 64, 100]


def test_anytime_bound_formula(rps):
    cx, cy = contexts(rps)
    expected = 4 * 1.0 / 11 * math.sqrt(math.log(3) ** 2)
    assert anytime_bound(rps, cx, cy, 10) == pytest.approx(expected)


def test_smoothed_bounds_bracket_value(leduc2):
    cx, cy = contexts(leduc2)
    s = egt_init(leduc2, cx, cy)
    up, lo = smoothed_bounds(s, leduc2, cx, cy)
    assert up <= lo


def test_egt_run_is_reproducible(leduc2):
    cx, cy = contexts(leduc2, "new")
    a = egt_run(leduc2, cx, cy, 1e-3, max_iters=64)
    b = egt_run(leduc2, cx, cy, 1e-3, max_iters=64)
    np.testing.assert_array_equal(a.state.x, b.state.x)
    assert [r.eps_sad for r in a.records] == [r.eps_sad for r in b.records]


# --------------------------------------------------------------------- CFR
def test_regret_matching_uniform_fallback(nine):
    table = RegretTable(nine)
    np.testing.assert_allclose(table.behavioral(), nine.uniform_behavioral())
    table.regrets[:] = -1.0
    table.regrets[0] = 3.0
    b = table.behavioral()
    assert b[0] == 1 and b[1] == 0


def test_cfr_rps_average_uniform(rps):
    for plus in (False, True):
        res = cfr_run(rps, 10_000, plus=plus)
        np.testing.assert_allclose(res.x, 1 / 3, atol=1e-2)
        np.testing.assert_allclose(res.y, 1 / 3, atol=1e-2)


def test_cfr_pennies_value(pennies):
    res = cfr_run(pennies, 2000, plus=True)
    assert pennies.value(res.x, res.y) == pytest.approx(0, abs=1e-3)


def test_cfr_traversals(leduc2):
    res = cfr_run(leduc2, 5, plus=True)
    assert res.traversals == 10 and res.records[-1].traversals == 10


def test_cfrplus_regrets_nonnegative_and_decreasing_trend(leduc2):
    seen = []

    def check(it, tx, ty):
        assert tx.regrets.min() >= 0 and ty.regrets.min() >= 0
        seen.append(it)

    res = cfr_run(leduc2, 256, plus=True, callback=check)
    assert seen == list(range(1, 257))
    eps = [r.eps_sad for r in res.records]
    assert eps[-1] < eps[0] / 50


def test_cfr_vanilla_converges(leduc2):
    res = cfr_run(leduc2, 512, plus=False)
    assert res.final_eps < res.records[0].eps_sad / 10


def test_cfr_target_stops_early(pennies):
    res = cfr_run(pennies, 10_000, plus=True, target_eps=1e-3)
    assert res.final_eps <= 1e-3 and res.records[-1].iteration < 10_000


# --------------------------------------------------------------- telemetry
def test_checkpoint_schedules():
    pow2 = Checkpoints()
    assert [t for t in range(20) if t in pow2] == [0, 1, 2, 4, 8, 16]
    every = Checkpoints(5)
    assert [t for t in range(12) if t in every] == [0, 5, 10]
    assert 7 in Checkpoints([7, 9]) and 8 not in Checkpoints([7, 9])
    with pytest.raises(ValueError):
        Checkpoints("log")


def test_csv_round_trip():
    recs = [ConvergenceRecord(0, 3, 1.5, 2.0, 2.0, 0.25), ConvergenceRecord(1, 6, 0.5)]
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    back = records_from_csv(text)
    assert back[0] == recs[0]
    assert math.isnan(back[1].mu1)
    assert traversal_count(back[1]) == 6
