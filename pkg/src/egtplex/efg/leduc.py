"""Leduc hold'em with a deck of ``k`` pairs (2k cards).

Each player antes, receives one private card, a betting round follows, a
community card is revealed, a second betting round follows, then showdown:
pairing the community card wins, otherwise the higher private card wins, and
equal private cards split.  Betting is fixed-limit with a cap on the number
of bets (bet plus raises) per round; player 1 opens both rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

from egtplex.efg.game import Chance, Decision, GameError, GameTree, Node, Terminal


@dataclass(frozen=True)
class LeducConfig:
    k: int = 3
    ante: float = 1.0
    bet_sizes: tuple[float, float] = (2.0, 4.0)
    max_bets: tuple[int, int] = (2, 2)

    def __post_init__(self):
        if self.k < 2:
            raise GameError("Leduc needs at least two ranks")
        if self.ante <= 0 or any(b <= 0 for b in self.bet_sizes):
            raise GameError("ante and bet sizes must be positive")
        if len(self.bet_sizes) != 2 or len(self.max_bets) != 2 or min(self.max_bets) < 0:
            raise GameError("need bet size and bet cap for exactly two rounds")

    @property
    def max_contribution(self) -> float:
        return self.ante + sum(b * n for b, n in zip(self.bet_sizes, self.max_bets))

    @property
    def max_pot(self) -> float:
        return 2.0 * self.max_contribution


def rank(card: int) -> int:
    return card // 2 + 1


def showdown(r1: int, r2: int, public: int) -> int:
    """+1 if player 1 wins, -1 if player 2 wins, 0 on a split."""
    if r1 == public and r2 != public:
        return 1
    if r2 == public and r1 != public:
        return -1
    return (r1 > r2) - (r1 < r2)


def build_leduc(cfg: LeducConfig = LeducConfig()) -> GameTree:
    deck = list(range(2 * cfg.k))
    n_deal = len(deck) * (len(deck) - 1)

    def betting(rnd: int, hist: str, prev: str, contrib: tuple[float, float],
                cards: tuple[int, int], public: int | None) -> Node:
        player = len(hist) % 2  # 0 = player 1
        facing = hist[-1:] in ("b", "r")
        nbets = sum(1 for a in hist if a in "br")
        can_raise = nbets < cfg.max_bets[rnd]
        pub = "" if public is None else str(rank(public))
        key = f"P{player + 1}|{rank(cards[player])}|{pub}|{prev}{'/' if rnd else ''}{hist}"
        actions: list[str] = []
        children: list[Node] = []

        def add(a: str, child: Node) -> None:
            actions.append(a)
            children.append(child)

        other = 1 - player
        if facing:
            # folding player gives up what they put in
            lost = contrib[player]
            add("f", Terminal(lost if player == 0 else -lost))
            called = _set(contrib, player, contrib[other])
            add("c", _round_end(rnd, hist + "c", prev, called, cards, public))
            if can_raise:
                add("r", betting(rnd, hist + "r", prev,
                                 _set(contrib, player, contrib[other] + cfg.bet_sizes[rnd]),
                                 cards, public))
        else:
            if hist == "":
                add("k", betting(rnd, "k", prev, contrib, cards, public))
            else:
                add("k", _round_end(rnd, hist + "k", prev, contrib, cards, public))
            if can_raise:
                add("b", betting(rnd, hist + "b", prev,
                                 _set(contrib, player, contrib[other] + cfg.bet_sizes[rnd]),
                                 cards, public))
        return Decision(player + 1, key, children, actions)

    def _round_end(rnd, hist, prev, contrib, cards, public) -> Node:
        if rnd == 0:
            rest = [c for c in deck if c not in cards]
            return Chance(
                [1.0 / len(rest)] * len(rest),
                [betting(1, "", hist, contrib, cards, c) for c in rest],
                [str(c) for c in rest],
            )
        outcome = showdown(rank(cards[0]), rank(cards[1]), rank(public))
        # payoff to player 2; a win takes the opponent's contribution
        return Terminal(-outcome * contrib[1] if outcome >= 0 else -outcome * contrib[0])

    deals = [(a, b) for a in deck for b in deck if a != b]
    root = Chance(
        [1.0 / n_deal] * n_deal,
        [betting(0, "", "", (cfg.ante, cfg.ante), d, None) for d in deals],
        [f"{a},{b}" for a, b in deals],
    )
    return GameTree(root, f"leduc-{2 * cfg.k}")


def _set(pair: tuple[float, float], i: int, value: float) -> tuple[float, float]:
    return (value, pair[1]) if i == 0 else (pair[0], value)
