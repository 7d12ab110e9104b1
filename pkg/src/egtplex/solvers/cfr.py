"""CFR and CFR+ baselines run directly on the sequence form.

With ``l = a1 + A y`` the loss vector of player 1, the counterfactual value
of action ``i`` at simplex ``j`` is ``-l_i`` plus the values of the simplexes
that follow ``i``; this equals the tree-walk counterfactual value because
``A`` already carries chance and opponent reach.  Player 2 uses
``a2 + A^T x`` with the opposite sign.  Each gradient is one tree pass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from egtplex.efg.sequence_form import SequenceFormProblem, saddle_residual
from egtplex.solvers.telemetry import Checkpoints, ConvergenceRecord, Schedule
from egtplex.treeplex import ROOT, Treeplex

TRAVERSALS_PER_ITERATION = 2


@dataclass
class RegretTable:
    """Per-sequence cumulative regrets and weighted strategy sums for one player."""

    treeplex: Treeplex
    regrets: np.ndarray = None
    strategy_sum: np.ndarray = None
    weight_sum: float = 0.0

    def __post_init__(self):
        n = self.treeplex.num_variables
        if self.regrets is None:
            self.regrets = np.zeros(n)
        if self.strategy_sum is None:
            self.strategy_sum = np.zeros(n)

    def behavioral(self) -> np.ndarray:
        """Regret matching: positive part normalized, uniform when nothing is positive."""
        t = self.treeplex
        pos = np.maximum(self.regrets, 0.0)
        totals = np.bincount(t.var_simplex, weights=pos, minlength=len(t))
        sizes = np.bincount(t.var_simplex, minlength=len(t))
        tot = totals[t.var_simplex]
        return np.where(tot > 0, pos / np.where(tot > 0, tot, 1.0), 1.0 / sizes[t.var_simplex])

    def sequence(self) -> np.ndarray:
        return self.treeplex.sequence_from_behavioral(self.behavioral())

    def average(self) -> np.ndarray:
        if self.weight_sum <= 0:
            return self.treeplex.uniform_sequence()
        return self.strategy_sum / self.weight_sum

    def accumulate(self, seq: np.ndarray, weight: float) -> None:
        self.strategy_sum += weight * seq
        self.weight_sum += weight

    def update(self, utility: np.ndarray, behavioral: np.ndarray, clip: bool) -> None:
        """Add instantaneous counterfactual regrets for per-sequence ``utility``."""
        t = self.treeplex
        acc = np.zeros(t.num_variables)
        for lvl in t.bottom_up:
            v = utility[lvl.vars] + acc[lvl.vars]
            value = np.add.reduceat(behavioral[lvl.vars] * v, lvl.starts)
            self.regrets[lvl.vars] += v - value[lvl.seg]
            inner = lvl.parents != ROOT
            np.add.at(acc, lvl.parents[inner], value[inner])
        if clip:
            np.maximum(self.regrets, 0.0, out=self.regrets)


@dataclass
class CfrResult:
    x: np.ndarray
    y: np.ndarray
    records: list[ConvergenceRecord]
    tables: tuple[RegretTable, RegretTable]
    traversals: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def final_eps(self) -> float:
        return self.records[-1].eps_sad if self.records else float("nan")


def cfr_run(
    problem: SequenceFormProblem,
    iters: int,
    plus: bool = False,
    checkpoints: Schedule = "pow2",
    target_eps: Optional[float] = None,
    callback: Optional[Callable[[int, RegretTable, RegretTable], None]] = None,
) -> CfrResult:
    """Vanilla CFR (simultaneous, uniform averages) or CFR+ (alternating,
    clipped regrets, averages weighted by the iteration number).

    Records eps_sad of the average strategies at checkpoints and at the end.
    ``callback`` sees both tables after every iteration.
    """
    if iters < 1:
        raise ValueError("need at least one iteration")
    p = problem
    tx, ty = RegretTable(p.X), RegretTable(p.Y)
    marks = Checkpoints(checkpoints)
    records: list[ConvergenceRecord] = []
    traversals = 0
    solve_s = 0.0
    for it in range(1, iters + 1):
        start = time.perf_counter()
        bx = tx.behavioral()
        x = p.X.sequence_from_behavioral(bx)
        by = ty.behavioral()
        y = p.Y.sequence_from_behavioral(by)
        if plus:
            tx.update(-(p.a1 + p.A @ y), bx, clip=True)
            tx.accumulate(x, float(it))
            x_next = tx.sequence()
            ty.update(p.a2 + p.AT @ x_next, by, clip=True)
            ty.accumulate(y, float(it))
        else:
            loss_x = p.a1 + p.A @ y
            gain_y = p.a2 + p.AT @ x
            tx.update(-loss_x, bx, clip=False)
            ty.update(gain_y, by, clip=False)
            tx.accumulate(x, 1.0)
            ty.accumulate(y, 1.0)
        traversals += TRAVERSALS_PER_ITERATION
        solve_s += time.perf_counter() - start
        if callback is not None:
            callback(it, tx, ty)
        last = it == iters
        if it in marks or last or target_eps is not None:
            eps = saddle_residual(p, tx.average(), ty.average())
            hit = target_eps is not None and eps <= target_eps
            if it in marks or last or hit:
                records.append(ConvergenceRecord(
                    it, traversals, eps, float("nan"), float("nan"), 1e3 * solve_s))
            if hit:
                break
    return CfrResult(tx.average(), ty.average(), records, (tx, ty), traversals)
