"""Slow reference implementations used only by the test suite.

Nothing here shares code with the modules it checks: loops instead of level
traversals, generic optimizers instead of closed forms, exact rationals
instead of floats where it matters.  Importing this module pulls in scipy's
optimizer; the solvers never import it.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from egtplex.efg.game import Chance, Decision, GameTree, Terminal
from egtplex.treeplex import ROOT, Treeplex

MAX_PROX_DIM = 8


class OracleRefusal(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 201
    refinements: int = 4

    def __post_init__(self):
        if self.resolution < 3 or self.refinements < 0:
            raise ValueError("grid needs at least 3 points and non-negative refinements")


# ------------------------------------------------------------- dilated entropy
def _parent_value(t: Treeplex, q: Sequence[float], j: int) -> float:
    p = t.simplexes[j].parent_variable
    return 1.0 if p == ROOT else q[p]


def loop_omega(t: Treeplex, beta: Sequence[float], q: Sequence[float]) -> float:
    """Dilated entropy by a plain double loop over simplexes and their entries."""
    total = 0.0
    for s in t.simplexes:
        par = _parent_value(t, q, s.id)
        for i in s.variable_indices:
            if q[i] > 0:
                total += beta[s.id] * q[i] * math.log(q[i] / par)
    return total


def loop_gradient(t: Treeplex, beta: Sequence[float], q: Sequence[float]) -> np.ndarray:
    """Partial derivatives written out per simplex, children handled by parent lookup."""
    g = np.zeros(t.num_variables)
    for s in t.simplexes:
        par = _parent_value(t, q, s.id)
        for i in s.variable_indices:
            g[i] += beta[s.id] * (math.log(q[i] / par) + 1.0)
        if s.parent_variable != ROOT:
            # d/dq_p of sum_i q_i log(q_i/q_p) = -sum_i q_i / q_p, which is -1 on the treeplex
            g[s.parent_variable] -= beta[s.id] * sum(q[i] for i in s.variable_indices) / par
    return g


def fd_gradient(t: Treeplex, beta, q: np.ndarray, step: float = 1e-6) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    g = np.zeros_like(q)
    for i in range(len(q)):
        h = step * max(q[i], 1e-3)
        e = np.zeros_like(q)
        e[i] = h
        g[i] = (loop_omega(t, beta, q + e) - loop_omega(t, beta, q - e)) / (2 * h)
    return g


def fd_hessian_quadratic(
    t: Treeplex, beta, q: np.ndarray, h: np.ndarray, step: Optional[float] = None
) -> float:
    """``h^T (d^2 omega) h`` from directional differences of the loop gradient.

    A central difference of the directional derivative ``<grad omega(q + s h), h>``
    with Richardson extrapolation over ``s, s/2``; refuses near the boundary.
    """
    q = np.asarray(q, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.min(q) < 1e-6:
        raise OracleRefusal("point too close to the boundary for finite differences")
    hn = float(np.max(np.abs(h)))
    if hn == 0:
        return 0.0
    if step is None:
        step = 1e-4 * float(np.min(q)) / hn

    def d1(s: float) -> float:
        up = float(np.dot(loop_gradient(t, beta, q + s * h), h))
        dn = float(np.dot(loop_gradient(t, beta, q - s * h), h))
        return (up - dn) / (2 * s)

    coarse, fine = d1(step), d1(step / 2)
    return (4 * fine - coarse) / 3


# --------------------------------------------------------------------- prox
def _equality_system(t: Treeplex) -> tuple[np.ndarray, np.ndarray]:
    rows, rhs = [], []
    for s in t.simplexes:
        r = np.zeros(t.num_variables)
        r[list(s.variable_indices)] = 1.0
        if s.parent_variable == ROOT:
            rhs.append(1.0)
        else:
            r[s.parent_variable] = -1.0
            rhs.append(0.0)
        rows.append(r)
    return np.array(rows), np.array(rhs)


def brute_prox(
    t: Treeplex, beta, center: np.ndarray, xi: np.ndarray, starts: int = 20, seed: int = 0
) -> np.ndarray:
    """``argmin_u <xi,u> + V(u || center)`` by SLSQP from random interior starts.

    Returns the best solution; raises if the starts disagree by more than 1e-6
    (the objective is strictly convex, so they must not).
    """
    if t.num_variables > MAX_PROX_DIM:
        raise OracleRefusal(f"brute prox limited to {MAX_PROX_DIM} variables")
    center = np.asarray(center, dtype=float)
    xi = np.asarray(xi, dtype=float)
    gc = loop_gradient(t, beta, center)
    E, e = _equality_system(t)

    def f(u):
        u = np.maximum(u, 1e-300)
        return float(np.dot(xi - gc, u)) + loop_omega(t, beta, u)

    def grad(u):
        return xi - gc + loop_gradient(t, beta, np.maximum(u, 1e-300))

    rng = np.random.default_rng(seed)
    sols = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for _ in range(starts):
            u0 = _random_interior(t, rng)
            res = minimize(
                f, u0, jac=grad, method="SLSQP",
                bounds=[(1e-12, 1.0)] * t.num_variables,
                constraints=[{"type": "eq", "fun": lambda u: E @ u - e, "jac": lambda u: E}],
                options={"ftol": 1e-15, "maxiter": 1000},
            )
            sols.append((res.fun, res.x))
    best = min(sols, key=lambda s: s[0])[1]
    spread = max(float(np.max(np.abs(x - best))) for _, x in sols)
    if spread > 1e-6:
        raise OracleRefusal(f"prox starts disagree by {spread:.2e}")
    return best


def _random_interior(t: Treeplex, rng: np.random.Generator) -> np.ndarray:
    u = np.zeros(t.num_variables)
    for s in t.simplexes:  # ids are topological, parents first
        par = _parent_value(t, u, s.id)
        w = rng.dirichlet(np.ones(s.size))
        for i, wi in zip(s.variable_indices, w):
            u[i] = par * wi
    return u


def grid_smoothed_argmax_chain(
    beta: Sequence[float], g: Sequence[float], grid: GridSpec = GridSpec()
) -> tuple[float, float, float]:
    """Two-level chain: a 2-simplex whose first entry leads to another 2-simplex.

    Variables (a0, a1, b0, b1) with b = a0 * (p, 1-p), a = (r, 1-r).  Maximizes
    ``<g,u> - omega(u)`` over (r, p) on a refined grid; returns (r, p, value).
    """
    b0, b1 = beta
    g = list(g)

    def obj(r: float, p: float) -> float:
        ent = lambda z: sum(v * math.log(v) for v in z if v > 0)
        u = (r, 1 - r, r * p, r * (1 - p))
        return (sum(gi * ui for gi, ui in zip(g, u))
                - b0 * ent((r, 1 - r)) - b1 * r * ent((p, 1 - p)))

    lo_r, hi_r, lo_p, hi_p = 0.0, 1.0, 0.0, 1.0
    best = (0.5, 0.5, obj(0.5, 0.5))
    for _ in range(grid.refinements + 1):
        rs = np.linspace(lo_r, hi_r, grid.resolution)
        ps = np.linspace(lo_p, hi_p, grid.resolution)
        for r in rs:
            for p in ps:
                v = obj(float(r), float(p))
                if v > best[2]:
                    best = (float(r), float(p), v)
        wr = (hi_r - lo_r) * 4 / (grid.resolution - 1)
        wp = (hi_p - lo_p) * 4 / (grid.resolution - 1)
        lo_r, hi_r = max(0.0, best[0] - wr), min(1.0, best[0] + wr)
        lo_p, hi_p = max(0.0, best[1] - wp), min(1.0, best[1] + wp)
    return best


# ------------------------------------------------------------ best responses
def tree_best_response(game: GameTree, responder: int, opponent: dict) -> float:
    """Best-response value for ``responder`` by walking the game tree.

    ``opponent`` maps each opponent infoset to its behavioral action
    distribution.  Uses the standard construction: gather, per responder
    infoset, the counterfactual value of every action (opponent and chance
    reach times subtree value) and solve infosets deepest-first.  Returns
    the value of the game to player 2 under the best response.
    """
    sign = 1.0 if responder == 2 else -1.0
    nodes: dict[str, list[tuple[Decision, float]]] = {}

    def collect(node, reach: float) -> None:
        if isinstance(node, Terminal):
            return
        if isinstance(node, Chance):
            for p, c in zip(node.probs, node.children):
                collect(c, reach * p)
        elif node.player == responder:
            nodes.setdefault(node.infoset, []).append((node, reach))
            for c in node.children:
                collect(c, reach)
        else:
            for a, c in enumerate(node.children):
                collect(c, reach * opponent[node.infoset][a])

    collect(game.root, 1.0)
    choice: dict[str, int] = {}

    def decide(key: str) -> int:
        # resolved on first use; perfect recall rules out cycles
        if key not in choice:
            members = nodes[key]
            acts = len(members[0][0].children)
            totals = [sum(value(n.children[a], r) for n, r in members) for a in range(acts)]
            choice[key] = max(range(acts), key=lambda a: sign * totals[a])
        return choice[key]

    def value(node, reach: float) -> float:
        """Reach-weighted payoff to player 2 below ``node``."""
        if isinstance(node, Terminal):
            return reach * node.payoff
        if isinstance(node, Chance):
            return sum(value(c, reach * p) for p, c in zip(node.probs, node.children))
        if node.player == responder:
            return value(node.children[decide(node.infoset)], reach)
        return sum(value(c, reach * opponent[node.infoset][a]) for a, c in enumerate(node.children))

    return value(game.root, 1.0)


def uniform_behavior(game: GameTree, player: int) -> dict:
    return {k: [1.0 / n] * n for k, n in game.infosets()[player].items()}


def vertex_best_response(values: Sequence[np.ndarray], g: np.ndarray, maximize: bool) -> float:
    """Optimum of ``<g, v>`` over an explicit vertex list."""
    vals = [float(np.dot(g, v)) for v in values]
    return max(vals) if maximize else min(vals)


# ---------------------------------------------------------------- equilibria
def lp_equilibrium(payoffs) -> tuple[np.ndarray, np.ndarray, float]:
    """Exact equilibrium of ``min_x max_y x^T M y`` for matrices up to 6x6.

    Shapley-Snow: after shifting ``M`` positive, some square submatrix ``B``
    yields an equilibrium with ``y_B ~ B^{-1} 1``, ``x_B ~ 1^T B^{-1}`` and
    value ``1 / (1^T B^{-1} 1)``.  Supports are tried in lexicographic order
    of (size, rows, cols) with exact rational arithmetic; the first candidate
    that is feasible and optimal for both players is returned.
    """
    M = np.asarray(payoffs, dtype=float)
    m, n = M.shape
    if max(m, n) > 6:
        raise OracleRefusal("support enumeration limited to 6x6")
    F = [[Fraction(v) for v in row] for row in M.tolist()]
    shift = -min(min(r) for r in F) + 1
    P = [[v + shift for v in row] for row in F]
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                B = [[P[i][j] for j in cols] for i in rows]
                inv = _inverse(B)
                if inv is None:
                    continue
                total = sum(sum(r) for r in inv)
                if total == 0:
                    continue
                v = 1 / total
                y = [0 * v] * n
                x = [0 * v] * m
                for a, j in enumerate(cols):
                    y[j] = v * sum(inv[a])
                for a, i in enumerate(rows):
                    x[i] = v * sum(inv[b][a] for b in range(k))
                if min(x) < 0 or min(y) < 0:
                    continue
                # x minimizes: every column payoff <= v; y maximizes: every row payoff >= v
                if any(sum(x[i] * P[i][j] for i in range(m)) > v for j in range(n)):
                    continue
                if any(sum(P[i][j] * y[j] for j in range(n)) < v for i in range(m)):
                    continue
                return (np.array([float(a) for a in x]), np.array([float(b) for b in y]),
                        float(v - shift))
    raise RuntimeError("no equilibrium found; matrix game oracle failed")


def _inverse(B: list[list[Fraction]]) -> Optional[list[list[Fraction]]]:
    k = len(B)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(B)]
    for c in range(k):
        piv = next((r for r in range(c, k) if aug[r][c] != 0), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        pv = aug[c][c]
        aug[c] = [v / pv for v in aug[c]]
        for r in range(k):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    return [row[k:] for row in aug]
