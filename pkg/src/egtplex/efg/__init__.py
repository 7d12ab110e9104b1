"""Extensive-form games, Leduc hold'em and the sequence-form bilinear problem."""

from egtplex.efg.game import (
    BUILTIN_MATRICES,
    Chance,
    Decision,
    GameError,
    GameTree,
    Terminal,
    build_alternating_game,
    build_matrix_game,
    build_one_card_toy,
    dumps_game,
    load_matrix,
    loads_game,
)
from egtplex.efg.leduc import LeducConfig, build_leduc
from egtplex.efg.sequence_form import (
    PerfectRecallError,
    SequenceFormProblem,
    best_response_value,
    best_vertex,
    saddle_residual,
    sequence_form_of_matrix,
    to_sequence_form,
)

__all__ = [
    "BUILTIN_MATRICES", "Chance", "Decision", "GameError", "GameTree", "Terminal",
    "build_alternating_game", "build_matrix_game", "build_one_card_toy", "dumps_game",
    "load_matrix", "loads_game", "LeducConfig", "build_leduc", "PerfectRecallError",
    "SequenceFormProblem", "best_response_value", "best_vertex", "saddle_residual",
    "sequence_form_of_matrix", "to_sequence_form",
]
