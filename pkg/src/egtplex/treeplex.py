"""Treeplexes: trees of simplexes joined by Cartesian products and branching.

A treeplex is stored as a list of :class:`SimplexNode` objects.  Every
variable (sequence) belongs to exactly one simplex, and a simplex is scaled
by a single parent variable, or by the constant 1 when it is a root.  Simplex
ids are dense and topologically ordered (parents before children); the text
format and :meth:`Treeplex.from_nodes` accept arbitrary variable numbering as
long as the structure is a forest.

All heavy traversals are vectorised per level: a bottom-up pass processes
simplexes grouped by ``depth_below`` and a top-down pass groups them by
``branchings_above``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

ROOT = -1
VERTEX_LIMIT = 10**6


class TreeplexError(ValueError):
    """Raised when a treeplex description violates a structural invariant."""


@dataclass(frozen=True)
class SimplexNode:
    id: int
    variable_indices: tuple[int, ...]
    parent_variable: int = ROOT
    children: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    depth_below: int = 0
    branchings_above: int = 0

    @property
    def size(self) -> int:
        return len(self.variable_indices)

    @property
    def is_root(self) -> bool:
        return self.parent_variable == ROOT


@dataclass(frozen=True)
class TreeplexStats:
    """Size statistics of a treeplex.

    ``M_Q_r[r]`` is the max l1 norm restricted to simplexes within ``r``
    branchings of a root; ``per_subtree_M_r[j][r]`` is the same quantity for
    the sub-treeplex rooted at simplex ``j`` (length ``d_j + 1``).
    """

    M_Q: float
    M_Q_r: tuple[float, ...]
    d_Q: int
    m_max: int
    num_simplexes: int
    per_subtree_M: tuple[float, ...]
    per_subtree_M_r: tuple[tuple[float, ...], ...]

    def M_r(self, r: int) -> float:
        return self.M_Q_r[min(r, self.d_Q)]

    def subtree_M_r(self, j: int, r: int) -> float:
        row = self.per_subtree_M_r[j]
        return row[min(r, len(row) - 1)]


@dataclass(frozen=True)
class _Level:
    simplexes: np.ndarray  # simplex ids in this level
    vars: np.ndarray  # concatenated variable indices
    starts: np.ndarray  # segment offsets into ``vars``
    seg: np.ndarray  # position in ``simplexes`` of each entry of ``vars``
    parents: np.ndarray  # parent variable per simplex (ROOT allowed)


class Treeplex:
    """Immutable treeplex.  Build with :meth:`from_parents` or :meth:`from_nodes`."""

    def __init__(self, simplexes: Sequence[SimplexNode], num_variables: int):
        self.simplexes: tuple[SimplexNode, ...] = tuple(simplexes)
        self.num_variables = int(num_variables)
        self.root_simplexes: tuple[int, ...] = tuple(
            s.id for s in self.simplexes if s.branchings_above == 0
        )

    # ------------------------------------------------------------------ build
    @classmethod
    def from_parents(cls, sizes: Sequence[int], parents: Sequence[int]) -> "Treeplex":
        """Build from simplex sizes and parent variables.

        Variables are numbered contiguously in simplex order.  ``parents[j]``
        must be a variable of an earlier simplex or ``ROOT``.
        """
        if len(sizes) != len(parents):
            raise TreeplexError("sizes and parents differ in length")
        variable_lists = []
        offset = 0
        for m in sizes:
            if m < 1:
                raise TreeplexError("empty simplex")
            variable_lists.append(tuple(range(offset, offset + m)))
            offset += m
        return cls.from_nodes(variable_lists, parents)

    @classmethod
    def from_nodes(
        cls, variable_lists: Sequence[Sequence[int]], parents: Sequence[int]
    ) -> "Treeplex":
        """Build from explicit variable lists; simplex ids are list positions.

        Raises :class:`TreeplexError` on duplicate variables, orphans
        (parent variable that no simplex owns), cycles or non-topological ids.
        """
        owner: dict[int, int] = {}
        for j, vs in enumerate(variable_lists):
            if len(vs) == 0:
                raise TreeplexError(f"simplex {j} is empty")
            for v in vs:
                if v < 0:
                    raise TreeplexError(f"negative variable index {v}")
                if v in owner:
                    raise TreeplexError(
                        f"duplicate index {v} in simplexes {owner[v]} and {j}"
                    )
                owner[v] = j
        n = len(owner)
        if sorted(owner) != list(range(n)):
            raise TreeplexError("variable indices must be exactly 0..n-1")

        children: list[dict[int, list[int]]] = [
            {v: [] for v in vs} for vs in variable_lists
        ]
        for j, p in enumerate(parents):
            if p == ROOT:
                continue
            if p not in owner:
                raise TreeplexError(f"orphan simplex {j}: parent variable {p} unknown")
            pj = owner[p]
            if pj == j:
                raise TreeplexError(f"cyclic child map at simplex {j}")
            children[pj][p].append(j)

        for j in range(len(variable_lists)):
            seen = {j}
            k = j
            while parents[k] != ROOT:
                k = owner[parents[k]]
                if k in seen:
                    raise TreeplexError(f"cyclic child map through simplex {k}")
                seen.add(k)
        for j, p in enumerate(parents):
            if p != ROOT and owner[p] >= j:
                raise TreeplexError(
                    f"simplex {j} precedes its parent simplex {owner[p]}; ids must be topological"
                )
        branch = [0] * len(variable_lists)
        for j, p in enumerate(parents):
            if p != ROOT:
                branch[j] = branch[owner[p]] + 1

        depth = [0] * len(variable_lists)
        for j in reversed(range(len(variable_lists))):
            kids = [k for ks in children[j].values() for k in ks]
            depth[j] = 1 + max(depth[k] for k in kids) if kids else 0

        nodes = [
            SimplexNode(
                id=j,
                variable_indices=tuple(int(v) for v in vs),
                parent_variable=int(parents[j]),
                children={v: tuple(ks) for v, ks in children[j].items()},
                depth_below=depth[j],
                branchings_above=branch[j],
            )
            for j, vs in enumerate(variable_lists)
        ]
        return cls(nodes, n)

    # ------------------------------------------------------------ accessors
    def __len__(self) -> int:
        return len(self.simplexes)

    def __repr__(self) -> str:
        return f"Treeplex({len(self.simplexes)} simplexes, {self.num_variables} variables)"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Treeplex):
            return NotImplemented
        return self.simplexes == other.simplexes and self.num_variables == other.num_variables

    def __hash__(self) -> int:
        return hash((self.num_variables, tuple(s.variable_indices for s in self.simplexes)))

    @cached_property
    def var_simplex(self) -> np.ndarray:
        out = np.empty(self.num_variables, dtype=np.intp)
        for s in self.simplexes:
            out[list(s.variable_indices)] = s.id
        return out

    @cached_property
    def parent_of_simplex(self) -> np.ndarray:
        return np.array([s.parent_variable for s in self.simplexes], dtype=np.intp)

    @cached_property
    def var_parent(self) -> np.ndarray:
        """Parent variable of the simplex each variable belongs to (ROOT for roots)."""
        return self.parent_of_simplex[self.var_simplex]

    @cached_property
    def depth(self) -> int:
        return max((s.depth_below for s in self.simplexes), default=0)

    @cached_property
    def max_simplex_size(self) -> int:
        return max(s.size for s in self.simplexes)

    def _levels(self, key: str) -> tuple[_Level, ...]:
        groups: dict[int, list[SimplexNode]] = {}
        for s in self.simplexes:
            groups.setdefault(getattr(s, key), []).append(s)
        levels = []
        for lvl in sorted(groups):
            nodes = groups[lvl]
            sizes = np.array([s.size for s in nodes], dtype=np.intp)
            starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.intp)
            levels.append(
                _Level(
                    simplexes=np.array([s.id for s in nodes], dtype=np.intp),
                    vars=np.array(
                        [v for s in nodes for v in s.variable_indices], dtype=np.intp
                    ),
                    starts=starts,
                    seg=np.repeat(np.arange(len(nodes), dtype=np.intp), sizes),
                    parents=np.array([s.parent_variable for s in nodes], dtype=np.intp),
                )
            )
        return tuple(levels)

    @cached_property
    def bottom_up(self) -> tuple[_Level, ...]:
        """Levels ordered leaves first (by ``depth_below``)."""
        return self._levels("depth_below")

    @cached_property
    def top_down(self) -> tuple[_Level, ...]:
        """Levels ordered roots first (by ``branchings_above``)."""
        return self._levels("branchings_above")

    # ------------------------------------------------------ vector helpers
    def parent_values(self, q: np.ndarray) -> np.ndarray:
        """``q_{p_j}`` for every variable, with 1 at roots."""
        q = np.asarray(q, dtype=float)
        pv = self.var_parent
        return np.where(pv == ROOT, 1.0, q[np.maximum(pv, 0)])

    def constraint_residual(self, q: np.ndarray) -> float:
        """Max |sum_{i in I_j} q_i - q_{p_j}| over simplexes."""
        q = np.asarray(q, dtype=float)
        worst = 0.0
        for lvl in self.bottom_up:
            sums = np.add.reduceat(q[lvl.vars], lvl.starts)
            par = np.where(lvl.parents == ROOT, 1.0, q[np.maximum(lvl.parents, 0)])
            if sums.size:
                worst = max(worst, float(np.max(np.abs(sums - par))))
        return worst

    def contains(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        return (
            q.shape == (self.num_variables,)
            and bool(np.all(q >= -tol))
            and self.constraint_residual(q) <= tol
        )

    def sequence_from_behavioral(self, b: np.ndarray) -> np.ndarray:
        """Top-down: ``q_i = q_{p_j} * b_i``."""
        b = np.asarray(b, dtype=float)
        q = np.empty(self.num_variables)
        for lvl in self.top_down:
            par = np.where(lvl.parents == ROOT, 1.0, q[np.maximum(lvl.parents, 0)])
            q[lvl.vars] = par[lvl.seg] * b[lvl.vars]
        return q

    def uniform_behavioral(self) -> np.ndarray:
        sizes = np.array([self.simplexes[j].size for j in self.var_simplex], dtype=float)
        return 1.0 / sizes

    def uniform_sequence(self) -> np.ndarray:
        return self.sequence_from_behavioral(self.uniform_behavioral())

    def random_behavioral(
        self, rng: np.random.Generator, concentration: float = 1.0
    ) -> np.ndarray:
        """Dirichlet-distributed local strategies (strictly positive)."""
        b = np.empty(self.num_variables)
        for s in self.simplexes:
            d = rng.dirichlet(np.full(s.size, concentration))
            b[list(s.variable_indices)] = np.maximum(d, 1e-12)
            b[list(s.variable_indices)] /= b[list(s.variable_indices)].sum()
        return b

    def random_vertex(self, rng: np.random.Generator) -> np.ndarray:
        b = np.zeros(self.num_variables)
        for s in self.simplexes:
            b[s.variable_indices[rng.integers(s.size)]] = 1.0
        return self.sequence_from_behavioral(b)


# ---------------------------------------------------------------- operations
def validate(t: Treeplex) -> None:
    """Check every structural invariant; raise :class:`TreeplexError` on the first failure."""
    seen: dict[int, int] = {}
    for pos, s in enumerate(t.simplexes):
        if s.id != pos:
            raise TreeplexError(f"simplex at position {pos} has id {s.id}")
        for v in s.variable_indices:
            if v in seen:
                raise TreeplexError(f"duplicate index {v} in simplexes {seen[v]} and {s.id}")
            seen[v] = s.id
    if sorted(seen) != list(range(t.num_variables)):
        raise TreeplexError("variable indices do not partition 0..n-1")
    has_parent: dict[int, int] = {}
    for s in t.simplexes:
        if set(s.children) != set(s.variable_indices):
            raise TreeplexError(f"simplex {s.id}: child map keys differ from I_j")
        for v, kids in s.children.items():
            for k in kids:
                if not 0 <= k < len(t.simplexes):
                    raise TreeplexError(f"simplex {s.id}: unknown child {k}")
                if k in has_parent:
                    raise TreeplexError(f"simplex {k} has two parents")
                has_parent[k] = s.id
                if t.simplexes[k].parent_variable != v:
                    raise TreeplexError(f"simplex {k}: parent link disagrees with child map")
                if k <= s.id:
                    raise TreeplexError(f"cyclic child map or non-topological id at {k}")
    for s in t.simplexes:
        if s.parent_variable == ROOT:
            if s.branchings_above != 0:
                raise TreeplexError(f"root simplex {s.id} has branchings_above != 0")
        else:
            if s.parent_variable not in seen:
                raise TreeplexError(f"orphan simplex {s.id}")
            if s.id not in has_parent:
                raise TreeplexError(f"orphan simplex {s.id}: not listed by its parent")
            parent = t.simplexes[seen[s.parent_variable]]
            if s.branchings_above != parent.branchings_above + 1:
                raise TreeplexError(f"simplex {s.id}: inconsistent branchings_above")
        kids = [k for ks in s.children.values() for k in ks]
        expected = 1 + max(t.simplexes[k].depth_below for k in kids) if kids else 0
        if s.depth_below != expected:
            raise TreeplexError(f"simplex {s.id}: inconsistent depth_below")


def compute_stats(t: Treeplex) -> TreeplexStats:
    """M_Q, M_{Q,r}, depths and per-subtree sizes by a bottom-up pass.

    ``M_{Q_j,r} = 1 + max_i sum_{l in D_j^i} M_{Q_l,r-1}`` with ``M_{Q_j,0} = 1``.
    """
    per_r: list[list[float]] = [[] for _ in t.simplexes]
    for s in sorted(t.simplexes, key=lambda s: s.depth_below):
        row = [1.0]
        for r in range(1, s.depth_below + 1):
            best = 0.0
            for kids in s.children.values():
                best = max(best, sum(_at(per_r[k], r - 1) for k in kids))
            row.append(1.0 + best)
        per_r[s.id] = row
    d_Q = t.depth
    M_Q_r = tuple(
        float(sum(_at(per_r[j], r) for j in t.root_simplexes)) for r in range(d_Q + 1)
    )
    return TreeplexStats(
        M_Q=M_Q_r[-1],
        M_Q_r=M_Q_r,
        d_Q=d_Q,
        m_max=t.max_simplex_size,
        num_simplexes=len(t.simplexes),
        per_subtree_M=tuple(row[-1] for row in per_r),
        per_subtree_M_r=tuple(tuple(row) for row in per_r),
    )


def _at(row: Sequence[float], r: int) -> float:
    return row[min(r, len(row) - 1)]


def count_vertices(t: Treeplex) -> int:
    """Number of pure strategies, without enumerating them."""
    count = [0] * len(t.simplexes)
    for s in reversed(t.simplexes):
        total = 0
        for kids in s.children.values():
            prod = 1
            for k in kids:
                prod *= count[k]
            total += prod
        count[s.id] = total
    out = 1
    for j in t.root_simplexes:
        out *= count[j]
    return out


def enumerate_vertices(t: Treeplex, limit: int = VERTEX_LIMIT) -> list[np.ndarray]:
    """All 0/1 sequence-form vertices (pure strategies), each exactly once.

    Refuses with :class:`TreeplexError` when the count exceeds ``limit``.
    """
    n_vert = count_vertices(t)
    if n_vert > limit:
        raise TreeplexError(f"{n_vert} vertices exceed limit {limit}")

    def choices(j: int) -> Iterator[tuple[int, ...]]:
        # yields tuples of active variables inside the subtree of simplex j
        for v, kids in t.simplexes[j].children.items():
            for combo in itertools.product(*(list(choices(k)) for k in kids)):
                yield (v,) + tuple(x for part in combo for x in part)

    out = []
    for combo in itertools.product(*(list(choices(j)) for j in t.root_simplexes)):
        q = np.zeros(t.num_variables)
        for part in combo:
            q[list(part)] = 1.0
        out.append(q)
    return out


def behavioral_from_sequence(
    t: Treeplex, q: np.ndarray, tol: float = 1e-9
) -> np.ndarray:
    """Local distributions ``q_i / q_{p_j}``; uniform where ``q_{p_j} == 0``."""
    q = np.asarray(q, dtype=float)
    if q.shape != (t.num_variables,):
        raise ValueError(f"expected vector of length {t.num_variables}")
    if np.any(q < -tol):
        raise ValueError("negative entries in sequence-form vector")
    resid = t.constraint_residual(q)
    if resid > tol * max(1.0, float(np.max(np.abs(q)))):
        raise ValueError(f"simplex sums deviate from parent value by {resid:.3g}")
    par = t.parent_values(q)
    b = t.uniform_behavioral()
    live = par > 0
    b[live] = np.clip(q[live], 0.0, None) / par[live]
    return b


# ------------------------------------------------------------ serialization
def dumps(t: Treeplex) -> str:
    """One line per simplex: ``j | p_j | i:k1,k2 ; i: ;`` (``-`` for root)."""
    lines = []
    for s in t.simplexes:
        parent = "-" if s.parent_variable == ROOT else str(s.parent_variable)
        entries = " ".join(
            f"{v}:{','.join(str(k) for k in s.children[v])} ;" for v in s.variable_indices
        )
        lines.append(f"{s.id} | {parent} | {entries}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Treeplex:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            j_s, p_s, body = (part.strip() for part in line.split("|"))
            j = int(j_s)
            p = ROOT if p_s in ("-", "root") else int(p_s)
            variables = []
            for entry in body.split(";"):
                entry = entry.strip()
                if not entry:
                    continue
                v_s, _, _kids = entry.partition(":")
                variables.append(int(v_s))
        except ValueError as exc:
            raise TreeplexError(f"line {lineno}: cannot parse {raw!r}") from exc
        rows.append((j, p, variables))
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise TreeplexError("simplex ids must be 0..S-1")
    t = Treeplex.from_nodes([r[2] for r in rows], [r[1] for r in rows])
    # child lists are implied by parent links; reject files where they disagree
    declared = _declared_children(text)
    for s in t.simplexes:
        for v in s.variable_indices:
            if sorted(declared.get((s.id, v), ())) != sorted(s.children[v]):
                raise TreeplexError(f"simplex {s.id}: child list of {v} disagrees with parents")
    return t


def _declared_children(text: str) -> dict[tuple[int, int], tuple[int, ...]]:
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        j_s, _, body = (part.strip() for part in line.split("|"))
        for entry in body.split(";"):
            entry = entry.strip()
            if not entry:
                continue
            v_s, _, kids = entry.partition(":")
            out[(int(j_s), int(v_s))] = tuple(int(k) for k in kids.split(",") if k.strip())
    return out


# --------------------------------------------------------------- instances
def single_simplex(m: int) -> Treeplex:
    return Treeplex.from_parents([m], [ROOT])


def nine_simplex_treeplex() -> Treeplex:
    """Nine simplexes over twenty variables, depth three; a standard small test instance."""
    sizes = [2, 3, 2, 2, 2, 2, 2, 3, 2]
    parents = [ROOT, ROOT, 0, 1, 2, 3, 4, 6, 6]
    return Treeplex.from_parents(sizes, parents)


def chain_treeplex(sizes: Iterable[int]) -> Treeplex:
    """Each simplex hangs off the first variable of the previous one."""
    sizes = list(sizes)
    parents = [ROOT]
    offset = 0
    for m in sizes[:-1]:
        parents.append(offset)
        offset += m
    return Treeplex.from_parents(sizes, parents)


def random_treeplex(
    rng: np.random.Generator,
    max_depth: int = 3,
    max_variables: int = 40,
    max_simplex_size: int = 4,
) -> Treeplex:
    """Random forest of simplexes with depth <= ``max_depth`` and <= ``max_variables`` variables."""
    sizes: list[int] = []
    parents: list[int] = []
    branch: list[int] = []
    total = 0
    n_roots = int(rng.integers(1, 3))
    frontier: list[tuple[int, int]] = []  # (variable, branchings of owner)
    for _ in range(n_roots):
        m = int(rng.integers(2, max_simplex_size + 1))
        if total + m > max_variables:
            break
        sizes.append(m)
        parents.append(ROOT)
        branch.append(0)
        frontier.extend((v, 0) for v in range(total, total + m))
        total += m
    while frontier:
        pos = int(rng.integers(len(frontier)))
        v, b = frontier.pop(pos)
        if b >= max_depth or rng.random() < 0.35:
            continue
        for _ in range(int(rng.integers(1, 3))):
            m = int(rng.integers(2, max_simplex_size + 1))
            if total + m > max_variables:
                break
            sizes.append(m)
            parents.append(v)
            branch.append(b + 1)
            frontier.extend((u, b + 1) for u in range(total, total + m))
            total += m
    # from_parents needs parents before children: they already are.
    return Treeplex.from_parents(sizes, parents)
