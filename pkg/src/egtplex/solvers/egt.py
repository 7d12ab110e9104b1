"""Excessive gap technique on the sequence-form saddle-point problem.

Player 1 (``x``) minimizes and player 2 (``y``) maximizes
``v0 + <a1,x> + <a2,y> + <x, A y>``.  Each player's dilated entropy is
normalized to vanish at its omega-center, so the smoothed values

    upper(x) = max_y phi(x, y) - mu2 (omega_Y(y) - omega_Y(y_omega))
    lower(y) = min_x phi(x, y) + mu1 (omega_X(x) - omega_X(x_omega))

bracket the game value and ``upper(x) <= lower(y)`` is the excessive gap
condition the method maintains.

Every A or A^T product is one traversal: three at initialization and three
per step.  Objective evaluations done only for telemetry are not counted.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from egtplex.dgf import DgfContext, prox_from_logb, smoothed_argmax_full
from egtplex.efg.sequence_form import SequenceFormProblem, saddle_residual
from egtplex.solvers.telemetry import Checkpoints, ConvergenceRecord, Schedule

INIT_TRAVERSALS = 3
STEP_TRAVERSALS = 3


@dataclass(frozen=True)
class EgtState:
    x: np.ndarray
    y: np.ndarray
    mu1: float
    mu2: float
    t: int = 0
    traversals: int = 0


@dataclass
class EgtResult:
    state: EgtState
    records: list[ConvergenceRecord]
    converged: bool
    budget_exhausted: bool
    gaps: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def final_eps(self) -> float:
        return self.records[-1].eps_sad if self.records else math.nan


class _Ops:
    """Products with A that keep the traversal count."""

    def __init__(self, problem: SequenceFormProblem):
        self.p = problem
        self.count = 0

    def Ay(self, y: np.ndarray) -> np.ndarray:
        self.count += 1
        return self.p.A @ y

    def ATx(self, x: np.ndarray) -> np.ndarray:
        self.count += 1
        return self.p.AT @ x


def _x_response(problem, ctx_x, Ay, mu1):
    """Smoothed best response of the minimizer to ``A y``."""
    return smoothed_argmax_full(ctx_x, -(problem.a1 + Ay) / mu1)


def _y_response(problem, ctx_y, ATx, mu2):
    """Smoothed best response of the maximizer to ``A^T x``."""
    return smoothed_argmax_full(ctx_y, (problem.a2 + ATx) / mu2)


def initial_mu(
    problem: SequenceFormProblem, ctx_x: DgfContext, ctx_y: DgfContext, mu_scale: float = 1.0
) -> float:
    """``mu_scale * ||A|| / sqrt(phi_X phi_Y)``; ``mu_scale >= 1`` keeps the gap condition."""
    if not mu_scale > 0 or not math.isfinite(mu_scale):
        raise ValueError(f"mu_scale must be positive, got {mu_scale}")
    norm = problem.A_norm if problem.A_norm > 0 else 1.0
    return mu_scale * norm / math.sqrt(ctx_x.modulus * ctx_y.modulus)


def egt_init(
    problem: SequenceFormProblem,
    ctx_x: DgfContext,
    ctx_y: DgfContext,
    mu_scale: float = 1.0,
    mu_ratio: float = 1.0,
    mu: Optional[tuple[float, float]] = None,
) -> EgtState:
    """Initial iterate from the omega-centers.

    ``mu_ratio`` splits the default product unevenly (``mu1 / mu2 = mu_ratio``);
    ``mu`` overrides both with an explicit ``(mu1, mu2)``.
    """
    if mu is None:
        if not mu_ratio > 0:
            raise ValueError("mu_ratio must be positive")
        base = initial_mu(problem, ctx_x, ctx_y, mu_scale)
        mu1, mu2 = base * math.sqrt(mu_ratio), base / math.sqrt(mu_ratio)
    else:
        mu1, mu2 = map(float, mu)
        if not (mu1 > 0 and mu2 > 0):
            raise ValueError("smoothing parameters must be positive")
    ops = _Ops(problem)
    y0, _, _ = _y_response(problem, ctx_y, ops.ATx(ctx_x.omega_center), mu2)
    grad = problem.a1 + ops.Ay(y0)
    x0, _ = prox_from_logb(ctx_x, ctx_x.omega_center_logb, grad / mu1)
    # warm-up product A^T x0: the first certificate and any y-side response use it
    ops.ATx(x0)
    _check_finite(0, x0, y0)
    return EgtState(x0, y0, mu1, mu2, 0, ops.count)


def egt_step(
    state: EgtState, problem: SequenceFormProblem, ctx_x: DgfContext, ctx_y: DgfContext
) -> EgtState:
    """One step: x-focused when ``t`` is even, y-focused when odd."""
    tau = 2.0 / (state.t + 3.0)
    ops = _Ops(problem)
    x, y, mu1, mu2 = state.x, state.y, state.mu1, state.mu2
    if state.t % 2 == 0:
        xr, _, xr_logb = _x_response(problem, ctx_x, ops.Ay(y), mu1)
        x_hat = (1.0 - tau) * x + tau * xr
        yr, _, _ = _y_response(problem, ctx_y, ops.ATx(x_hat), mu2)
        y_new = (1.0 - tau) * y + tau * yr
        grad = problem.a1 + ops.Ay(yr)
        x_tilde, _ = prox_from_logb(ctx_x, xr_logb, tau / ((1.0 - tau) * mu1) * grad)
        x_new = (1.0 - tau) * x + tau * x_tilde
        mu1 = (1.0 - tau) * mu1
    else:
        yr, _, yr_logb = _y_response(problem, ctx_y, ops.ATx(x), mu2)
        y_hat = (1.0 - tau) * y + tau * yr
        xr, _, _ = _x_response(problem, ctx_x, ops.Ay(y_hat), mu1)
        x_new = (1.0 - tau) * x + tau * xr
        grad = problem.a2 + ops.ATx(xr)
        y_tilde, _ = prox_from_logb(ctx_y, yr_logb, -tau / ((1.0 - tau) * mu2) * grad)
        y_new = (1.0 - tau) * y + tau * y_tilde
        mu2 = (1.0 - tau) * mu2
    _check_finite(state.t + 1, x_new, y_new)
    return EgtState(x_new, y_new, mu1, mu2, state.t + 1, state.traversals + ops.count)


def _check_finite(t: int, x: np.ndarray, y: np.ndarray) -> None:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FloatingPointError(f"non-finite EGT iterate at iteration {t}")


def smoothed_bounds(
    state: EgtState, problem: SequenceFormProblem, ctx_x: DgfContext, ctx_y: DgfContext
) -> tuple[float, float]:
    """``(upper_{mu2}(x), lower_{mu1}(y))``; the gap condition is ``upper <= lower``.

    Telemetry only: the products here are not counted as traversals.
    """
    p = problem
    _, vy, _ = _y_response(p, ctx_y, p.AT @ state.x, state.mu2)
    upper = p.v0 + float(p.a1 @ state.x) + state.mu2 * (vy + ctx_y.omega_min)
    _, vx, _ = _x_response(p, ctx_x, p.A @ state.y, state.mu1)
    lower = p.v0 + float(p.a2 @ state.y) - state.mu1 * (vx + ctx_x.omega_min)
    return upper, lower


def anytime_bound(
    problem: SequenceFormProblem, ctx_x: DgfContext, ctx_y: DgfContext, t: int
) -> float:
    """``4 ||A|| / (t+1) sqrt(Omega_X Omega_Y / (phi_X phi_Y))``."""
    width = ctx_x.set_width * ctx_y.set_width / (ctx_x.modulus * ctx_y.modulus)
    return 4.0 * problem.A_norm / (t + 1.0) * math.sqrt(width)


def egt_run(
    problem: SequenceFormProblem,
    ctx_x: DgfContext,
    ctx_y: DgfContext,
    mu_scale: float = 1.0,
    mu_ratio: float = 1.0,
    target_eps: Optional[float] = None,
    max_iters: int = 1000,
    checkpoints: Schedule = "pow2",
    check_gap: bool = False,
    callback: Optional[Callable[[EgtState], None]] = None,
) -> EgtResult:
    """Run until ``eps_sad <= target_eps`` or ``max_iters`` steps.

    With a target, eps_sad is evaluated after every step (uncounted);
    otherwise only at checkpoints.  ``check_gap`` records the smoothed
    bounds at every iteration in ``result.gaps``.
    """
    if target_eps is not None and not target_eps > 0:
        raise ValueError("target_eps must be positive")
    if max_iters < 0:
        raise ValueError("max_iters must be non-negative")
    marks = Checkpoints(checkpoints)
    records: list[ConvergenceRecord] = []
    gaps: list[tuple[int, float, float]] = []
    solve_s = 0.0

    def observe(state: EgtState, final: bool) -> bool:
        due = final or state.t in marks
        if target_eps is None and not due:
            return False
        eps = saddle_residual(problem, state.x, state.y)
        hit = target_eps is not None and eps <= target_eps
        if due or hit:
            records.append(ConvergenceRecord(
                state.t, state.traversals, eps, state.mu1, state.mu2, 1e3 * solve_s))
        return hit

    start = time.perf_counter()
    state = egt_init(problem, ctx_x, ctx_y, mu_scale, mu_ratio)
    solve_s += time.perf_counter() - start
    converged = False
    while True:
        if check_gap:
            up, lo = smoothed_bounds(state, problem, ctx_x, ctx_y)
            gaps.append((state.t, up, lo))
        if callback is not None:
            callback(state)
        last = state.t >= max_iters
        if observe(state, last):
            converged = True
            break
        if last:
            break
        start = time.perf_counter()
        state = egt_step(state, problem, ctx_x, ctx_y)
        solve_s += time.perf_counter() - start
    exhausted = target_eps is not None and not converged
    return EgtResult(state, records, converged, exhausted, gaps)

