"""Extensive-form game trees and small game builders.

Terminal payoffs are always the amount player 1 pays player 2, i.e. the
payoff of the maximizing player ``y``.  Player 1 (``x``) minimizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

import numpy as np


@dataclass(eq=False)
class Terminal:
    payoff: float


@dataclass(eq=False)
class Chance:
    probs: list[float]
    children: list["Node"]
    labels: list[str] = field(default_factory=list)


@dataclass(eq=False)
class Decision:
    player: int
    infoset: str
    children: list["Node"]
    actions: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.actions:
            self.actions = [str(a) for a in range(len(self.children))]


Node = Union[Terminal, Chance, Decision]


class GameError(ValueError):
    pass


@dataclass
class GameTree:
    root: Node
    name: str = "game"

    def walk(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not isinstance(node, Terminal):
                stack.extend(reversed(node.children))

    def infosets(self) -> dict[int, dict[str, int]]:
        """``{player: {infoset: number of actions}}``."""
        out: dict[int, dict[str, int]] = {1: {}, 2: {}}
        for node in self.walk():
            if isinstance(node, Decision):
                out[node.player].setdefault(node.infoset, len(node.children))
        return out

    def num_nodes(self) -> int:
        return sum(1 for _ in self.walk())

    def leaves(self) -> list[Terminal]:
        return [n for n in self.walk() if isinstance(n, Terminal)]

    def max_abs_payoff(self) -> float:
        return max(abs(leaf.payoff) for leaf in self.leaves())

    def validate(self, tol: float = 1e-12) -> None:
        owner: dict[str, int] = {}
        for node in self.walk():
            if isinstance(node, Chance):
                if len(node.probs) != len(node.children) or not node.children:
                    raise GameError("chance node with mismatched outcomes")
                if any(p < 0 for p in node.probs) or abs(math.fsum(node.probs) - 1.0) > tol:
                    raise GameError(f"chance probabilities sum to {math.fsum(node.probs)!r}")
            elif isinstance(node, Decision):
                if node.player not in (1, 2):
                    raise GameError(f"unknown player {node.player}")
                if not node.children:
                    raise GameError(f"decision node in {node.infoset!r} has no actions")
                if owner.setdefault(node.infoset, node.player) != node.player:
                    raise GameError(f"information set {node.infoset!r} shared by both players")


# ------------------------------------------------------------------ builders
def build_matrix_game(payoffs: Sequence[Sequence[float]], name: str = "matrix") -> GameTree:
    """Simultaneous-move game: row player 1 pays ``payoffs[i][j]`` to column player 2."""
    A = np.asarray(payoffs, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise GameError("payoff matrix must be a non-empty 2-D array")
    m, n = A.shape
    rows = [
        Decision(2, "col", [Terminal(float(A[i, j])) for j in range(n)], [f"c{j}" for j in range(n)])
        for i in range(m)
    ]
    return GameTree(Decision(1, "row", rows, [f"r{i}" for i in range(m)]), name)


RPS = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]]
MATCHING_PENNIES = [[1.0, -1.0], [-1.0, 1.0]]
BUILTIN_MATRICES = {"rps": RPS, "pennies": MATCHING_PENNIES, "matching-pennies": MATCHING_PENNIES}


def load_matrix(path_or_name: str) -> np.ndarray:
    """Builtin name (``rps``, ``pennies``) or a comma/whitespace separated text file."""
    if path_or_name in BUILTIN_MATRICES:
        return np.array(BUILTIN_MATRICES[path_or_name], dtype=float)
    rows = []
    with open(path_or_name, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(v) for v in line.replace(",", " ").split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise GameError(f"{path_or_name}: expected a rectangular matrix")
    return np.array(rows, dtype=float)


def build_alternating_game(
    k: int, d: int, rng: Optional[np.random.Generator] = None, name: str = ""
) -> GameTree:
    """Perfect-information game: players alternate choosing among ``k`` actions,
    each moving ``d`` times, player 1 first.  Leaf payoffs are uniform on
    [-1, 1] from ``rng`` (zero when ``rng`` is None).
    """
    if k < 1 or d < 1:
        raise GameError("k and d must be positive")

    def node(history: tuple[int, ...]) -> Node:
        if len(history) == 2 * d:
            return Terminal(float(rng.uniform(-1.0, 1.0)) if rng is not None else 0.0)
        player = 1 + len(history) % 2
        key = "h" + "".join(str(a) for a in history)
        return Decision(player, key, [node(history + (a,)) for a in range(k)])

    return GameTree(node(()), name or f"alternating-k{k}-d{d}")


def build_one_card_toy(payoff: float = 1.0) -> GameTree:
    """Chance deals H or L to player 1 with probability 1/2 each; player 1
    sees the card and stops or bets; player 2 (blind) folds or calls a bet.
    """
    def hand(card: str, sign: float) -> Decision:
        call = Terminal(-2.0 * payoff * sign)
        fold = Terminal(-payoff)
        return Decision(
            1,
            f"p1:{card}",
            [Terminal(-payoff * sign), Decision(2, "p2:bet", [fold, call], ["fold", "call"])],
            ["stop", "bet"],
        )

    return GameTree(Chance([0.5, 0.5], [hand("H", 1.0), hand("L", -1.0)], ["H", "L"]), "one-card")


# ------------------------------------------------------------- text format
def dumps_game(game: GameTree) -> str:
    """Line per node, root first::

        <id> chance <prob>:<child> ...
        <id> p1|p2 <infoset> <action>=<child> ...
        <id> leaf <payoff>

    Infoset and action labels may not contain whitespace, ``=`` or ``:``.
    """
    ids: dict[int, int] = {}
    order: list[Node] = []
    for node in game.walk():
        ids[id(node)] = len(order)
        order.append(node)
    lines = [f"# egtplex game {game.name}"]
    for i, node in enumerate(order):
        if isinstance(node, Terminal):
            lines.append(f"{i} leaf {float(node.payoff)!r}")
        elif isinstance(node, Chance):
            body = " ".join(f"{float(p)!r}:{ids[id(c)]}" for p, c in zip(node.probs, node.children))
            lines.append(f"{i} chance {body}")
        else:
            body = " ".join(f"{a}={ids[id(c)]}" for a, c in zip(node.actions, node.children))
            lines.append(f"{i} p{node.player} {node.infoset} {body}")
    return "\n".join(lines) + "\n"


def loads_game(text: str) -> GameTree:
    name = "game"
    specs: dict[int, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("# egtplex game"):
            name = line[len("# egtplex game"):].strip() or name
            continue
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            specs[int(parts[0])] = parts[1:]
        except (ValueError, IndexError) as exc:
            raise GameError(f"line {lineno}: cannot parse {raw!r}") from exc
    if not specs:
        raise GameError("empty game description")

    built: dict[int, Node] = {}

    def make(i: int) -> Node:
        # iterative post-order to survive deep trees
        stack = [(i, False)]
        while stack:
            j, ready = stack.pop()
            if j in built:
                continue
            if j not in specs:
                raise GameError(f"reference to undefined node {j}")
            kind, *rest = specs[j]
            if kind == "leaf":
                built[j] = Terminal(float(rest[0]))
                continue
            if kind == "chance":
                refs = [int(tok.split(":")[1]) for tok in rest]
            elif kind in ("p1", "p2"):
                refs = [int(tok.split("=")[1]) for tok in rest[1:]]
            else:
                raise GameError(f"node {j}: unknown kind {kind!r}")
            if not ready:
                stack.append((j, True))
                stack.extend((r, False) for r in refs if r not in built)
                continue
            if kind == "chance":
                probs = [float(tok.split(":")[0]) for tok in rest]
                built[j] = Chance(probs, [built[r] for r in refs])
            else:
                actions = [tok.split("=")[0] for tok in rest[1:]]
                built[j] = Decision(int(kind[1]), rest[0], [built[r] for r in refs], actions)
        return built[i]

    root = make(min(specs))
    game = GameTree(root, name)
    game.validate()
    return game

