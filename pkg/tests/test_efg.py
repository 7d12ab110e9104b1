import numpy as np
import pytest

from egtplex.efg import (
    Chance,
    Decision,
    GameError,
    GameTree,
    LeducConfig,
    PerfectRecallError,
    Terminal,
    best_response_value,
    build_alternating_game,
    build_leduc,
    build_matrix_game,
    build_one_card_toy,
    dumps_game,
    load_matrix,
    loads_game,
    saddle_residual,
    sequence_form_of_matrix,
    to_sequence_form,
)
from egtplex.efg.leduc import showdown
from egtplex.oracle import tree_best_response, uniform_behavior, vertex_best_response
from egtplex.treeplex import compute_stats, enumerate_vertices


# ------------------------------------------------------------------ Leduc
def test_leduc3_root_deals(leduc3_game):
    assert isinstance(leduc3_game.root, Chance)
    assert len(leduc3_game.root.children) == 30
    assert leduc3_game.root.probs[0] == pytest.approx(1 / 30)


def test_leduc_regression_counts(leduc2_game, leduc3_game, leduc2, leduc3):
    # pinned from an exhaustive tree walk with the default betting rules
    for game, prob, nodes, infosets, seqs, nnz in (
        (leduc2_game, leduc2, 1981, 66, 154, 286),
        (leduc3_game, leduc3, 9451, 144, 336, 1116),
    ):
        assert game.num_nodes() == nodes
        sets = game.infosets()
        assert len(sets[1]) == len(sets[2]) == infosets
        assert prob.X.num_variables == prob.Y.num_variables == seqs
        assert len(prob.X) == infosets
        assert prob.A.nnz == nnz


def test_leduc_payoff_scale_shrinks_with_chance(leduc3_game, leduc3):
    cfg = LeducConfig(k=3)
    assert cfg.max_pot == 26
    assert leduc3_game.max_abs_payoff() == 13
    # every leaf lies below a deal of probability 1/30
    assert leduc3.A_norm <= cfg.max_pot / 30 + 1e-12
    assert leduc3.A_norm < cfg.max_pot


def test_leduc_linear_terms_vanish(leduc3):
    assert not leduc3.a1.any() and not leduc3.a2.any() and leduc3.v0 == 0


def test_leduc_check_down_payoffs_are_ante_sized():
    game = build_leduc(LeducConfig(k=2))
    seen = set()

    def walk(node, checks_only):
        if isinstance(node, Terminal):
            if checks_only:
                seen.add(node.payoff)
            return
        if isinstance(node, Chance):
            for c in node.children:
                walk(c, checks_only)
            return
        for a, c in zip(node.actions, node.children):
            walk(c, checks_only and a == "k")

    walk(game.root, True)
    assert seen <= {-1.0, 0.0, 1.0} and seen


def test_showdown_rules():
    assert showdown(1, 2, 1) == 1
    assert showdown(2, 1, 1) == -1
    assert showdown(3, 2, 1) == 1
    assert showdown(2, 2, 1) == 0


def test_leduc_config_validation():
    with pytest.raises(GameError):
        LeducConfig(k=1)
    with pytest.raises(GameError):
        LeducConfig(bet_sizes=(0.0, 4.0))


# ------------------------------------------------------------ matrix games
def test_rps_sequence_form_is_the_matrix(rps):
    assert rps.X.num_variables == rps.Y.num_variables == 3
    assert len(rps.X) == len(rps.Y) == 1
    np.testing.assert_array_equal(rps.A.toarray(), load_matrix("rps"))
    assert rps.A_norm == 1


def test_one_by_one_zero_game():
    p = sequence_form_of_matrix([[0.0]])
    assert saddle_residual(p, np.ones(1), np.ones(1)) == 0
    assert p.value(np.ones(1), np.ones(1)) == 0


def test_pennies_value_zero_at_half(pennies):
    half = np.array([0.5, 0.5])
    assert saddle_residual(pennies, half, half) == 0
    assert pennies.value(half, half) == 0


def test_pennies_pure_residual(pennies):
    e1 = np.array([1.0, 0.0])
    assert saddle_residual(pennies, e1, e1) == pytest.approx(2.0)


def test_empty_matrix_rejected():
    with pytest.raises(GameError):
        build_matrix_game([])


def test_load_matrix_file(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("# comment\n1, 2\n3 4\n")
    np.testing.assert_array_equal(load_matrix(str(f)), [[1, 2], [3, 4]])
    f.write_text("1 2\n3\n")
    with pytest.raises(GameError):
        load_matrix(str(f))


# ----------------------------------------------------------- sequence form
def test_one_card_toy_hand_computed():
    p = to_sequence_form(build_one_card_toy())
    # rows: (H stop, H bet, L stop, L bet); cols: (fold, call); halves from the deal
    np.testing.assert_allclose(
        p.A.toarray(), [[0, 0], [-0.5, -1.0], [0, 0], [-0.5, 1.0]])
    np.testing.assert_allclose(p.a1, [-0.5, 0, 0.5, 0])
    np.testing.assert_allclose(p.a2, [0, 0])


def test_each_leaf_lands_once(leduc2_game, leduc2):
    total = sum(abs(v) for v in leduc2.A.data)
    assert leduc2.A.nnz <= len(leduc2_game.leaves())
    # chance-weighted payoffs add up to the expected absolute payoff bound
    assert total <= leduc2_game.max_abs_payoff() * 1.0 * len(leduc2_game.leaves())


def test_perfect_recall_violation_names_infoset():
    # player 1 forgets her own first action
    leaf = lambda v: Terminal(v)
    second = lambda: Decision(1, "forgot", [leaf(1.0), leaf(-1.0)])
    root = Decision(1, "first", [second(), second()])
    game = GameTree(Decision(2, "y", [root, Decision(1, "other", [leaf(0.0)])]))
    with pytest.raises(PerfectRecallError) as info:
        to_sequence_form(game)
    assert info.value.infoset == "forgot"


def test_chance_probabilities_checked():
    game = GameTree(Chance([0.5, 0.4], [Terminal(0.0), Terminal(1.0)]))
    with pytest.raises(GameError):
        game.validate()


def test_game_text_round_trip(leduc2_game):
    toy = build_one_card_toy()
    assert dumps_game(loads_game(dumps_game(toy))) == dumps_game(toy)
    p1 = to_sequence_form(toy)
    p2 = to_sequence_form(loads_game(dumps_game(toy)))
    np.testing.assert_array_equal(p1.A.toarray(), p2.A.toarray())


def test_example1_structure():
    game = build_alternating_game(2, 2)
    p = to_sequence_form(game)
    assert len(p.X) == 5
    assert compute_stats(p.X).M_Q == 3
    assert len(enumerate_vertices(p.X)) == 8


# ----------------------------------------------------------- best responses
def test_rps_uniform_best_response(rps):
    u = np.full(3, 1 / 3)
    assert best_response_value(rps, "y", u)[0] == pytest.approx(0.0)
    assert best_response_value(rps, "x", u)[0] == pytest.approx(0.0)


def test_vertex_strategy_best_response(rng):
    M = rng.uniform(-1, 1, size=(3, 4))
    p = sequence_form_of_matrix(M)
    for i in range(3):
        e = np.eye(3)[i]
        assert best_response_value(p, "y", e)[0] == pytest.approx(M[i].max())
    for j in range(4):
        e = np.eye(4)[j]
        assert best_response_value(p, "x", e)[0] == pytest.approx(M[:, j].min())


def test_best_response_dimension_mismatch(rps):
    with pytest.raises(ValueError):
        best_response_value(rps, "y", np.ones(2))
    with pytest.raises(ValueError):
        best_response_value(rps, "z", np.ones(3))


def test_leduc2_best_response_matches_tree_walk(leduc2_game, leduc2):
    x = leduc2.X.uniform_sequence()
    y = leduc2.Y.uniform_sequence()
    up, _ = best_response_value(leduc2, "y", x)
    lo, _ = best_response_value(leduc2, "x", y)
    assert up == pytest.approx(tree_best_response(leduc2_game, 2, uniform_behavior(leduc2_game, 1)),
                               abs=1e-12)
    assert lo == pytest.approx(tree_best_response(leduc2_game, 1, uniform_behavior(leduc2_game, 2)),
                               abs=1e-12)


def test_best_response_matches_vertex_enumeration(rng):
    game = build_alternating_game(2, 2, rng)
    p = to_sequence_form(game)
    verts_y = enumerate_vertices(p.Y)
    x = p.X.sequence_from_behavioral(p.X.random_behavioral(rng))
    val, vert = best_response_value(p, "y", x)
    assert val == pytest.approx(vertex_best_response(verts_y, p.grad_y(x), True))
    assert any(np.array_equal(vert, v) for v in verts_y)


def test_leduc3_uniform_residual_pinned(leduc3):
    x, y = leduc3.X.uniform_sequence(), leduc3.Y.uniform_sequence()
    assert saddle_residual(leduc3, x, y) == pytest.approx(4.747222222222222, rel=1e-12)
    assert leduc3.value(x, y) == pytest.approx(0.078125, rel=1e-12)


def test_saddle_residual_rejects_infeasible():
    p = sequence_form_of_matrix([[1.0, 1.0], [1.0, 1.0]])
    # x = 0 is not a strategy: the upper value drops below the lower one
    with pytest.raises(FloatingPointError):
        saddle_residual(p, np.zeros(2), np.array([1.0, 0.0]))
