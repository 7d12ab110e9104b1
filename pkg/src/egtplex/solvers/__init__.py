"""EGT with dilated entropy, and CFR/CFR+ baselines."""

from egtplex.solvers.cfr import CfrResult, RegretTable, cfr_run
from egtplex.solvers.egt import (
    EgtResult,
    EgtState,
    anytime_bound,
    egt_init,
    egt_run,
    egt_step,
    initial_mu,
    smoothed_bounds,
)
from egtplex.solvers.telemetry import (
    CSV_HEADER,
    Checkpoints,
    ConvergenceRecord,
    records_from_csv,
    records_to_csv,
    traversal_count,
)

__all__ = [
    "CfrResult", "RegretTable", "cfr_run", "EgtResult", "EgtState", "anytime_bound",
    "egt_init", "egt_run", "egt_step", "initial_mu", "smoothed_bounds", "CSV_HEADER",
    "Checkpoints", "ConvergenceRecord", "records_from_csv", "records_to_csv", "traversal_count",
]
