"""Sequence-form extraction: ``min_x max_y v0 + <a1,x> + <a2,y> + <x, A y>``.

Rows of ``A`` are player-1 sequences, columns player-2 sequences, and each
entry is the chance-weighted sum of payoffs (to player 2) over leaves whose
sequence pair is exactly (row, col).  Leaves reached with an empty sequence
for one player land in ``a1``/``a2`` (or in ``v0`` when both are empty), so
the treeplexes never need an explicit empty-sequence variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from egtplex.efg.game import Chance, Decision, GameError, GameTree, Terminal
from egtplex.treeplex import ROOT, Treeplex

EMPTY = -1


class PerfectRecallError(GameError):
    def __init__(self, infoset: str, reason: str):
        super().__init__(f"perfect recall violated at information set {infoset!r}: {reason}")
        self.infoset = infoset


@dataclass(frozen=True)
class SequenceFormProblem:
    X: Treeplex
    Y: Treeplex
    A: sp.csr_matrix
    a1: np.ndarray
    a2: np.ndarray
    v0: float = 0.0
    name: str = ""
    x_labels: tuple[tuple[str, str], ...] = ()
    y_labels: tuple[tuple[str, str], ...] = ()
    infoset_simplex: dict = field(default_factory=dict, compare=False)

    @cached_property
    def AT(self) -> sp.csr_matrix:
        return self.A.T.tocsr()

    @cached_property
    def A_norm(self) -> float:
        """l1-to-l_inf operator norm, i.e. the largest absolute entry."""
        return float(np.max(np.abs(self.A.data))) if self.A.nnz else 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def grad_x(self, y: np.ndarray) -> np.ndarray:
        return self.a1 + self.A @ y

    def grad_y(self, x: np.ndarray) -> np.ndarray:
        return self.a2 + self.AT @ x

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.v0 + self.a1 @ x + self.a2 @ y + x @ (self.A @ y))

    def to_csv(self) -> str:
        coo = self.A.tocoo()
        rows = ["row,col,value"]
        rows += [f"{i},{j},{float(v)!r}" for i, j, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(rows) + "\n"


def to_sequence_form(game: GameTree) -> SequenceFormProblem:
    game.validate()
    # per player: infoset -> (simplex id, parent sequence, first variable, size)
    tables: list[dict[str, tuple[int, int, int, int]]] = [{}, {}]
    sizes: list[list[int]] = [[], []]
    parents: list[list[int]] = [[], []]
    labels: list[list[tuple[str, str]]] = [[], []]
    nvars = [0, 0]
    owner: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    a_lin: list[dict[int, float]] = [{}, {}]
    v0 = 0.0

    stack: list[tuple[object, float, int, int]] = [(game.root, 1.0, EMPTY, EMPTY)]
    while stack:
        node, prob, s1, s2 = stack.pop()
        if isinstance(node, Terminal):
            w = prob * node.payoff
            if s1 != EMPTY and s2 != EMPTY:
                rows.append(s1)
                cols.append(s2)
                vals.append(w)
            elif s1 != EMPTY:
                a_lin[0][s1] = a_lin[0].get(s1, 0.0) + w
            elif s2 != EMPTY:
                a_lin[1][s2] = a_lin[1].get(s2, 0.0) + w
            else:
                v0 += w
        elif isinstance(node, Chance):
            for p, child in reversed(list(zip(node.probs, node.children))):
                if p > 0:
                    stack.append((child, prob * p, s1, s2))
        elif isinstance(node, Decision):
            pl = node.player - 1
            if owner.setdefault(node.infoset, pl) != pl:
                raise PerfectRecallError(node.infoset, "shared by both players")
            parent_seq = s1 if pl == 0 else s2
            entry = tables[pl].get(node.infoset)
            if entry is None:
                j = len(sizes[pl])
                entry = (j, parent_seq, nvars[pl], len(node.children))
                tables[pl][node.infoset] = entry
                sizes[pl].append(len(node.children))
                parents[pl].append(ROOT if parent_seq == EMPTY else parent_seq)
                labels[pl].extend((node.infoset, a) for a in node.actions)
                nvars[pl] += len(node.children)
            else:
                if entry[1] != parent_seq:
                    raise PerfectRecallError(node.infoset, "nodes disagree on the owner's past sequence")
                if entry[3] != len(node.children):
                    raise PerfectRecallError(node.infoset, "nodes disagree on the number of actions")
            first = entry[2]
            for a in reversed(range(len(node.children))):
                seq = first + a
                stack.append(
                    (node.children[a], prob, seq, s2) if pl == 0 else (node.children[a], prob, s1, seq)
                )
        else:
            raise GameError(f"unknown node type {type(node).__name__}")

    if not sizes[0] or not sizes[1]:
        raise GameError("both players need at least one information set")
    X = Treeplex.from_parents(sizes[0], parents[0])
    Y = Treeplex.from_parents(sizes[1], parents[1])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(nvars[0], nvars[1])).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    a1 = np.zeros(nvars[0])
    a2 = np.zeros(nvars[1])
    for i, v in a_lin[0].items():
        a1[i] = v
    for i, v in a_lin[1].items():
        a2[i] = v
    return SequenceFormProblem(
        X, Y, A, a1, a2, v0, game.name,
        tuple(labels[0]), tuple(labels[1]),
        {(pl + 1, key): e[0] for pl in (0, 1) for key, e in tables[pl].items()},
    )


def sequence_form_of_matrix(payoffs) -> SequenceFormProblem:
    from egtplex.efg.game import build_matrix_game

    return to_sequence_form(build_matrix_game(payoffs))


# -------------------------------------------------------- best responses
def best_vertex(t: Treeplex, g: np.ndarray, maximize: bool = True) -> tuple[float, np.ndarray]:
    """Optimal vertex of ``<g, q>`` over the treeplex by one bottom-up pass."""
    g = np.asarray(g, dtype=float)
    sign = 1.0 if maximize else -1.0
    acc = np.zeros(t.num_variables)
    choice = np.zeros(t.num_variables)
    total = 0.0
    for lvl in t.bottom_up:
        z = sign * g[lvl.vars] + acc[lvl.vars]
        m = np.maximum.reduceat(z, lvl.starts)
        pos = np.arange(len(z))
        first = np.minimum.reduceat(np.where(z == m[lvl.seg], pos, len(z)), lvl.starts)
        choice[lvl.vars[first]] = 1.0
        roots = lvl.parents == ROOT
        np.add.at(acc, lvl.parents[~roots], m[~roots])
        total += float(np.sum(m[roots]))
    return sign * total, t.sequence_from_behavioral(choice)


def best_response_value(
    problem: SequenceFormProblem, responder: str, strategy: np.ndarray
) -> tuple[float, np.ndarray]:
    """Exact best-response value and vertex.

    ``responder="y"`` returns ``max_y phi(x, y)`` for ``x = strategy``;
    ``responder="x"`` returns ``min_x phi(x, y)`` for ``y = strategy``.
    """
    strategy = np.asarray(strategy, dtype=float)
    if responder == "y":
        if strategy.shape != (problem.X.num_variables,):
            raise ValueError("dimension mismatch: expected a player-1 sequence-form vector")
        val, vertex = best_vertex(problem.Y, problem.grad_y(strategy), maximize=True)
        return problem.v0 + float(problem.a1 @ strategy) + val, vertex
    if responder == "x":
        if strategy.shape != (problem.Y.num_variables,):
            raise ValueError("dimension mismatch: expected a player-2 sequence-form vector")
        val, vertex = best_vertex(problem.X, problem.grad_x(strategy), maximize=False)
        return problem.v0 + float(problem.a2 @ strategy) + val, vertex
    raise ValueError("responder must be 'x' or 'y'")


def saddle_residual(
    problem: SequenceFormProblem, x: np.ndarray, y: np.ndarray, clamp: bool = True
) -> float:
    """``max_y' phi(x, y') - min_x' phi(x', y)``; zero exactly at equilibria."""
    upper, _ = best_response_value(problem, "y", x)
    lower, _ = best_response_value(problem, "x", y)
    gap = upper - lower
    if gap < -1e-9 * max(1.0, abs(upper)):
        raise FloatingPointError(f"negative saddle residual {gap:.3g}; inputs are infeasible")
    return max(gap, 0.0) if clamp else gap
