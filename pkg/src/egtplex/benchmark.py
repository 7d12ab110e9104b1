"""Run configurations, game construction and merging of convergence curves."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from egtplex.dgf import DgfContext
from egtplex.efg import (
    LeducConfig,
    SequenceFormProblem,
    build_alternating_game,
    build_leduc,
    load_matrix,
    loads_game,
    sequence_form_of_matrix,
    to_sequence_form,
)
from egtplex.solvers import ConvergenceRecord, cfr_run, egt_run, records_to_csv

GAMES = ("leduc", "matrix", "example1", "efg")
SOLVERS = ("egt", "cfr", "cfrplus")
THREADS_ENV = "EGTPLEX_THREADS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    game: str
    cards: int = 3
    file: Optional[str] = None
    k: int = 2
    d: int = 2
    solver: str = "egt"
    weights: str = "new"
    mu_scale: float = 1.0
    mu_ratio: float = 1.0
    dgf_scale: float = 1.0
    target_eps: Optional[float] = None
    max_iters: int = 1000
    seed: int = 0
    checkpoints: object = "pow2"
    output: Optional[str] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.game not in GAMES:
            raise ConfigError(f"game must be one of {GAMES}, got {self.game!r}")
        if self.game in ("matrix", "efg") and not self.file:
            raise ConfigError(f"game {self.game!r} needs a file")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.target_eps is not None and not self.target_eps > 0:
            raise ConfigError("target_eps must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not (self.mu_scale > 0 and self.mu_ratio > 0 and self.dgf_scale > 0):
            raise ConfigError("mu_scale, mu_ratio and dgf_scale must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "game" not in data:
            raise ConfigError("config needs a game")
        return cls(**data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        data.setdefault("label", Path(path).stem)
        base = Path(path).parent
        if data.get("file") and not Path(data["file"]).is_absolute():
            candidate = base / data["file"]
            if candidate.exists():
                data["file"] = str(candidate)
        return cls.from_dict(data)

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def game_key(self) -> tuple:
        if self.game == "leduc":
            return ("leduc", self.cards)
        if self.game == "example1":
            return ("example1", self.k, self.d, self.seed)
        return (self.game, os.path.abspath(self.file) if self.file and os.path.exists(self.file)
                else self.file)

    def name(self) -> str:
        if self.label:
            return self.label
        return self.solver if self.solver != "egt" else f"egt-{self.weights}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def build_problem(cfg: RunConfig) -> SequenceFormProblem:
    if cfg.game == "leduc":
        return to_sequence_form(build_leduc(LeducConfig(k=cfg.cards)))
    if cfg.game == "matrix":
        return sequence_form_of_matrix(load_matrix(cfg.file))
    if cfg.game == "example1":
        return to_sequence_form(
            build_alternating_game(cfg.k, cfg.d, np.random.default_rng(cfg.seed)))
    with open(cfg.file, encoding="utf-8") as fh:
        return to_sequence_form(loads_game(fh.read()))


@dataclass
class RunOutcome:
    config: RunConfig
    records: list[ConvergenceRecord]
    converged: Optional[bool]

    @property
    def final(self) -> ConvergenceRecord:
        return self.records[-1]

    def csv(self, timing: bool = True) -> str:
        recs = self.records if timing else [replace(r, wall_ms=0.0) for r in self.records]
        return records_to_csv(recs)

    def summary(self) -> str:
        r = self.final
        status = "done"
        if self.converged is not None:
            status = "converged" if self.converged else "budget-exhausted"
        return (f"{self.config.name()}: eps_sad={r.eps_sad:.6g} traversals={r.traversals} "
                f"iterations={r.iteration} wall_ms={r.wall_ms:.1f} status={status}")


def run_config(cfg: RunConfig, problem: Optional[SequenceFormProblem] = None) -> RunOutcome:
    problem = problem if problem is not None else build_problem(cfg)
    checkpoints = cfg.checkpoints
    if isinstance(checkpoints, list):
        checkpoints = tuple(checkpoints)
    if cfg.solver == "egt":
        cx = DgfContext.build(problem.X, cfg.weights, cfg.dgf_scale)
        cy = DgfContext.build(problem.Y, cfg.weights, cfg.dgf_scale)
        res = egt_run(problem, cx, cy, cfg.mu_scale, cfg.mu_ratio, cfg.target_eps,
                      cfg.max_iters, checkpoints)
        converged = res.converged if cfg.target_eps is not None else None
        return RunOutcome(cfg, res.records, converged)
    res = cfr_run(problem, cfg.max_iters, plus=cfg.solver == "cfrplus",
                  checkpoints=checkpoints, target_eps=cfg.target_eps)
    converged = None
    if cfg.target_eps is not None:
        converged = res.final_eps <= cfg.target_eps
    return RunOutcome(cfg, res.records, converged)


# ------------------------------------------------------------------ compare
def value_at(records: Sequence[ConvergenceRecord], traversals: int) -> Optional[float]:
    """eps_sad at the last checkpoint whose traversal count is <= ``traversals``."""
    best = None
    for r in records:
        if r.traversals <= traversals:
            best = r.eps_sad
        else:
            break
    return best


def merge_runs(
    runs: dict[str, Sequence[ConvergenceRecord]], queries: Optional[Sequence[int]] = None
) -> tuple[list[int], dict[str, list[Optional[float]]]]:
    """Align curves on the traversal axis without interpolation.

    Default queries are the union of every run's recorded traversal counts.
    """
    if queries is None:
        queries = sorted({r.traversals for recs in runs.values() for r in recs})
    return list(queries), {name: [value_at(recs, q) for q in queries]
                           for name, recs in runs.items()}


def merged_csv(queries: Sequence[int], columns: dict[str, list[Optional[float]]]) -> str:
    names = list(columns)
    lines = [",".join(["traversals"] + names)]
    for i, q in enumerate(queries):
        cells = ["" if columns[n][i] is None else repr(float(columns[n][i])) for n in names]
        lines.append(",".join([str(q)] + cells))
    return "\n".join(lines) + "\n"


def shared_queries(
    runs: dict[str, Sequence[ConvergenceRecord]], skip_decade: bool = False
) -> list[int]:
    """Traversal counts recorded by some run where every run already has a value.

    With ``skip_decade`` only counts at least ten times the first such point
    are kept, i.e. the first decade of the log-log axis is dropped.
    """
    start = max(recs[0].traversals for recs in runs.values())
    end = min(recs[-1].traversals for recs in runs.values())
    pts = sorted({r.traversals for recs in runs.values() for r in recs
                  if start <= r.traversals <= end})
    if skip_decade and pts:
        pts = [q for q in pts if q >= 10 * pts[0]]
    return pts


def win_fraction(
    runs: dict[str, Sequence[ConvergenceRecord]], better: str, worse: str,
    skip_decade: bool = False, strict: bool = True,
) -> tuple[float, int]:
    """Share of shared checkpoints where ``better`` has lower (or equal when not
    strict) eps_sad than ``worse``; also returns the number of checkpoints."""
    pair = {better: runs[better], worse: runs[worse]}
    pts = shared_queries(pair, skip_decade)
    if not pts:
        return math.nan, 0
    wins = 0
    for q in pts:
        a, b = value_at(runs[better], q), value_at(runs[worse], q)
        wins += (a < b) if strict else (a <= b)
    return wins / len(pts), len(pts)


def _run_for_pool(cfg: RunConfig) -> RunOutcome:
    return run_config(cfg)


def run_many(configs: Sequence[RunConfig], workers: Optional[int] = None) -> list[RunOutcome]:
    """Run configs over one game, concurrently when ``EGTPLEX_THREADS`` > 1."""
    keys = {c.game_key() for c in configs}
    if len(keys) > 1:
        raise ConfigError(f"configs describe different games: {sorted(map(str, keys))}")
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers <= 1 or len(configs) == 1:
        problem = build_problem(configs[0])
        return [run_config(c, problem) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_for_pool, configs))
