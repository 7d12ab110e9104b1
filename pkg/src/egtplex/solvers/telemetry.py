"""Convergence records and checkpoint schedules shared by all solvers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

CSV_HEADER = ("iter", "traversals", "eps_sad", "mu1", "mu2", "wall_ms")


@dataclass(frozen=True)
class ConvergenceRecord:
    iteration: int
    traversals: int
    eps_sad: float
    mu1: float = math.nan
    mu2: float = math.nan
    wall_ms: float = 0.0

    def row(self) -> list[str]:
        return [
            str(self.iteration),
            str(self.traversals),
            repr(float(self.eps_sad)),
            repr(float(self.mu1)),
            repr(float(self.mu2)),
            f"{self.wall_ms:.3f}",
        ]


def traversal_count(record: ConvergenceRecord) -> int:
    return record.traversals


class TraversalCounter:
    """Counts gradient passes; telemetry code must not touch it."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int = 1) -> None:
        self.count += n


Schedule = Union[str, int, Sequence[int]]


class Checkpoints:
    """Which iterations get an eps_sad evaluation.

    ``"pow2"`` records 0, 1, 2, 4, 8, ...; an integer ``k`` records every
    k-th iteration; an explicit sequence records exactly those.  The final
    iteration of a run is always recorded by the solver.
    """

    def __init__(self, schedule: Schedule = "pow2"):
        if isinstance(schedule, str):
            if schedule != "pow2":
                raise ValueError(f"unknown checkpoint schedule {schedule!r}")
            self._every = None
            self._explicit = None
        elif isinstance(schedule, int):
            if schedule < 1:
                raise ValueError("checkpoint interval must be positive")
            self._every = schedule
            self._explicit = None
        else:
            self._every = None
            self._explicit = frozenset(int(t) for t in schedule)

    def __contains__(self, t: int) -> bool:
        if self._explicit is not None:
            return t in self._explicit
        if self._every is not None:
            return t % self._every == 0
        return t == 0 or (t & (t - 1)) == 0


def records_to_csv(records: Iterable[ConvergenceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[ConvergenceRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"expected header {','.join(CSV_HEADER)}")
    return [
        ConvergenceRecord(
            int(row["iter"]), int(row["traversals"]), float(row["eps_sad"]),
            float(row["mu1"]), float(row["mu2"]), float(row["wall_ms"]),
        )
        for row in reader
    ]
