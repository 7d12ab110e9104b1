"""Dilated entropy distance-generating function on a treeplex.

``omega(q) = sum_j beta_j sum_{i in I_j} q_i log(q_i / q_{p_j})``

Weights come from one of the schemes below.  Every traversal is a single
bottom-up pass (log-sum-exp per simplex) followed by a top-down pass that
rebuilds the sequence-form vector from local log-probabilities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from egtplex.treeplex import ROOT, Treeplex, TreeplexStats, compute_stats

log = logging.getLogger(__name__)

TINY = 1e-300

SCHEMES = ("recurrence", "new", "corollary", "corollary-scaled", "old")


@dataclass(frozen=True)
class DgfWeights:
    """Per-simplex weights.

    ``alpha`` is the recurrence's alpha implied by ``beta`` (for the
    recurrence and practical schemes it is the value used to build ``beta``).
    ``ell1_modulus`` is the strong-convexity modulus w.r.t. the l1 norm that
    the scheme claims; ``certified`` says whether that claim rests on a proven
    bound that holds for these particular numbers.
    """

    scheme: str
    alpha: np.ndarray
    beta: np.ndarray
    ell1_modulus: float
    ell2_modulus: Optional[float] = None
    certified: bool = False
    multiplier: Optional[float] = None

    def to_csv(self) -> str:
        rows = ["simplex_id,alpha,beta,scheme"]
        tag = self.scheme if self.multiplier is None else f"{self.scheme}:{self.multiplier:g}"
        for j, (a, b) in enumerate(zip(self.alpha, self.beta)):
            rows.append(f"{j},{float(a)!r},{float(b)!r},{tag}")
        return "\n".join(rows) + "\n"


# ------------------------------------------------------------------ weights
def weights_recurrence(
    t: Treeplex, stats: Optional[TreeplexStats] = None, c: float = 2.0
) -> DgfWeights:
    """Bottom-up recurrence with ``beta_j = c * alpha_j`` below the roots.

    ``alpha_j = 1 + max_i sum_{k in D_j^i} alpha_k beta_k / (beta_k - alpha_k)``
    and ``beta_j = alpha_j`` at roots.
    """
    if not c > 1:
        raise ValueError(f"multiplier c must exceed 1, got {c}")
    stats = stats or compute_stats(t)
    alpha = np.zeros(len(t))
    beta = np.zeros(len(t))
    for s in sorted(t.simplexes, key=lambda s: s.depth_below):
        best = 0.0
        for kids in s.children.values():
            best = max(best, sum(alpha[k] * beta[k] / (beta[k] - alpha[k]) for k in kids))
        alpha[s.id] = 1.0 + best
        beta[s.id] = alpha[s.id] if s.is_root else c * alpha[s.id]
    return DgfWeights(
        "recurrence", alpha, beta, 1.0 / stats.M_Q, 1.0, certified=True, multiplier=c
    )


def weights_practical_new(t: Treeplex, stats: Optional[TreeplexStats] = None) -> DgfWeights:
    """``beta_j = alpha_j`` everywhere, children aggregated as ``2 alpha_k``.

    Heuristic: violates the strict inequality the strong-convexity proof
    needs below the roots, so no certificate is attached.
    """
    stats = stats or compute_stats(t)
    alpha = np.zeros(len(t))
    for s in sorted(t.simplexes, key=lambda s: s.depth_below):
        best = 0.0
        for kids in s.children.values():
            best = max(best, sum(2.0 * alpha[k] for k in kids))
        alpha[s.id] = 1.0 + best
    return DgfWeights("new", alpha, alpha.copy(), 1.0 / stats.M_Q, None, certified=False)


def weights_corollary(
    t: Treeplex, stats: Optional[TreeplexStats] = None, scale_by_max_norm: bool = False
) -> DgfWeights:
    """Closed form ``beta_j = 2 + sum_{r=1}^{d_j} 2^r (M_{Q_j,r} - 1)``, optionally times M_Q.

    The scheme is certified only when the numbers also satisfy the
    recurrence; :func:`recurrence_violations` decides, and failures are logged.
    """
    stats = stats or compute_stats(t)
    beta = np.empty(len(t))
    for s in t.simplexes:
        beta[s.id] = 2.0 + sum(
            2.0**r * (stats.subtree_M_r(s.id, r) - 1.0) for r in range(1, s.depth_below + 1)
        )
    if scale_by_max_norm:
        beta *= stats.M_Q
    bad = recurrence_violations(t, beta)
    if bad:
        log.info(
            "corollary weights violate the recurrence at %d of %d simplexes", len(bad), len(t)
        )
    return DgfWeights(
        "corollary-scaled" if scale_by_max_norm else "corollary",
        implied_alpha(t, beta),
        beta,
        1.0 if scale_by_max_norm else 1.0 / stats.M_Q,
        None,
        certified=not bad,
    )


def weights_old(t: Treeplex, stats: Optional[TreeplexStats] = None) -> DgfWeights:
    """Prior-work baseline ``beta_j = 2^{d_j} M_{Q_j}`` with l1 modulus ``1/|S_Q|``."""
    stats = stats or compute_stats(t)
    beta = np.array(
        [2.0**s.depth_below * stats.per_subtree_M[s.id] for s in t.simplexes], dtype=float
    )
    return DgfWeights("old", implied_alpha(t, beta), beta, 1.0 / len(t), None, certified=True)


def make_weights(
    t: Treeplex, name: str, stats: Optional[TreeplexStats] = None
) -> DgfWeights:
    """Parse ``recurrence:c | new | corollary | corollary-scaled | old``."""
    kind, _, arg = name.partition(":")
    if kind == "recurrence":
        return weights_recurrence(t, stats, float(arg) if arg else 2.0)
    if arg:
        raise ValueError(f"scheme {kind!r} takes no argument")
    if kind == "new":
        return weights_practical_new(t, stats)
    if kind == "corollary":
        return weights_corollary(t, stats, scale_by_max_norm=False)
    if kind == "corollary-scaled":
        return weights_corollary(t, stats, scale_by_max_norm=True)
    if kind == "old":
        return weights_old(t, stats)
    raise ValueError(f"unknown weight scheme {name!r}; expected one of {SCHEMES}")


def implied_alpha(t: Treeplex, beta: np.ndarray) -> np.ndarray:
    """Alpha the recurrence assigns given ``beta``; ``inf`` once a child has ``beta_k <= alpha_k``."""
    alpha = np.zeros(len(t))
    for s in sorted(t.simplexes, key=lambda s: s.depth_below):
        best = 0.0
        for kids in s.children.values():
            total = 0.0
            for k in kids:
                gap = beta[k] - alpha[k]
                total += alpha[k] * beta[k] / gap if gap > 0 else math.inf
            best = max(best, total)
        alpha[s.id] = 1.0 + best
    return alpha


def recurrence_violations(t: Treeplex, beta: np.ndarray) -> list[int]:
    """Simplexes where ``beta`` fails the recurrence (strict below roots, >= at roots)."""
    alpha = implied_alpha(t, beta)
    bad = []
    for s in t.simplexes:
        if s.is_root:
            if not beta[s.id] >= alpha[s.id]:
                bad.append(s.id)
        elif not beta[s.id] > alpha[s.id]:
            bad.append(s.id)
    return bad


def closed_form_gaps(t: Treeplex, beta: np.ndarray) -> list[tuple[int, int, float]]:
    """``(j, i, beta_j - 2 - sum_k 2 beta_k)`` for every branch where it is negative."""
    out = []
    for s in t.simplexes:
        for v, kids in s.children.items():
            gap = beta[s.id] - 2.0 - sum(2.0 * beta[k] for k in kids)
            if gap < 0:
                out.append((s.id, v, float(gap)))
    return out


# ------------------------------------------------------------------ context
class DgfContext:
    """A treeplex with weights and an optional user scale on every beta."""

    def __init__(
        self,
        treeplex: Treeplex,
        weights: DgfWeights,
        scale: float = 1.0,
        stats: Optional[TreeplexStats] = None,
    ):
        if not scale > 0:
            raise ValueError("DGF scale must be positive")
        self.treeplex = treeplex
        self.weights = weights
        self.scale = float(scale)
        self.stats = stats or compute_stats(treeplex)
        self.beta = self.scale * np.asarray(weights.beta, dtype=float)
        if np.any(self.beta <= 0):
            raise ValueError("all beta_j must be positive")
        self.modulus = self.scale * weights.ell1_modulus
        self._beta_var = self.beta[treeplex.var_simplex]

    @classmethod
    def build(cls, t: Treeplex, scheme: str = "recurrence:2", scale: float = 1.0) -> "DgfContext":
        stats = compute_stats(t)
        return cls(t, make_weights(t, scheme, stats), scale, stats)

    @cached_property
    def _center(self) -> tuple[np.ndarray, float, np.ndarray]:
        u, value, logb = smoothed_argmax_full(self, np.zeros(self.treeplex.num_variables))
        return u, value, logb

    @property
    def omega_center(self) -> np.ndarray:
        return self._center[0]

    @property
    def omega_center_logb(self) -> np.ndarray:
        return self._center[2]

    @cached_property
    def omega_min(self) -> float:
        """``omega(x_omega)``, equal to minus the value of the unperturbed smoothed max."""
        return -self._center[1]

    @property
    def set_width(self) -> float:
        """``max_x V(x || x_omega) = -omega(x_omega)``, since omega vanishes at vertices."""
        return -self.omega_min

    def proven_width_bound(self) -> float:
        """``M_Q^2 2^{d_Q+2} log m``: bound on width/modulus for corollary-scaled weights."""
        st = self.stats
        return st.M_Q**2 * 2.0 ** (st.d_Q + 2) * math.log(st.m_max)


# --------------------------------------------------------------- operations
def _check_interior(q: np.ndarray) -> None:
    if np.any(~np.isfinite(q)) or np.any(q <= 0):
        raise ValueError("point must lie strictly inside the treeplex (all entries > 0)")


def omega_value(ctx: DgfContext, q: np.ndarray) -> float:
    """Dilated entropy with ``0 log 0 = 0``; exactly 0 at every vertex."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("negative entries")
    par = ctx.treeplex.parent_values(q)
    pos = q > 0
    terms = np.zeros_like(q)
    terms[pos] = q[pos] * np.log(q[pos] / par[pos])
    return float(np.dot(ctx._beta_var, terms))


def omega_gradient(ctx: DgfContext, q: np.ndarray) -> np.ndarray:
    """``beta_j (log(q_i/q_{p_j}) + 1) - sum_{k in D_j^i} beta_k``."""
    q = np.asarray(q, dtype=float)
    _check_interior(q)
    t = ctx.treeplex
    grad = ctx._beta_var * (np.log(q / t.parent_values(q)) + 1.0)
    nonroot = t.parent_of_simplex != ROOT
    np.subtract.at(grad, t.parent_of_simplex[nonroot], ctx.beta[nonroot])
    return grad


def hessian_quadratic_form(ctx: DgfContext, q: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``h^T (d^2 omega)(q) h`` in closed form; broadcasts over leading axes.

    Root simplexes use ``h_{p_j} = 0, q_{p_j} = 1``.
    """
    q = np.asarray(q, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_interior(q)
    t = ctx.treeplex
    pv = t.var_parent
    is_root = pv == ROOT
    idx = np.maximum(pv, 0)
    qp = np.where(is_root, 1.0, q[..., idx])
    hp = np.where(is_root, 0.0, h[..., idx])
    per_var = ctx._beta_var * (h * h / q - 2.0 * h * hp / qp)
    ps = t.parent_of_simplex
    s_root = ps == ROOT
    sidx = np.maximum(ps, 0)
    hps = np.where(s_root, 0.0, h[..., sidx])
    qps = np.where(s_root, 1.0, q[..., sidx])
    per_simplex = ctx.beta * hps * hps / qps
    return per_var.sum(axis=-1) + per_simplex.sum(axis=-1)


def smoothed_argmax_full(
    ctx: DgfContext, g: np.ndarray
) -> tuple[np.ndarray, float, np.ndarray]:
    """``argmax_u <g,u> - omega(u)``, its value, and the local log-probabilities."""
    g = np.asarray(g, dtype=float)
    t = ctx.treeplex
    acc = np.zeros(t.num_variables)
    logb = np.empty(t.num_variables)
    total = 0.0
    for lvl in t.bottom_up:
        beta_s = ctx.beta[lvl.simplexes]
        z = (g[lvl.vars] + acc[lvl.vars]) / beta_s[lvl.seg]
        lse = _segment_lse(z, lvl.starts, lvl.seg)
        logb[lvl.vars] = z - lse[lvl.seg]
        val = beta_s * lse
        roots = lvl.parents == ROOT
        np.add.at(acc, lvl.parents[~roots], val[~roots])
        total += float(np.sum(val[roots]))
    u = _sequence_from_logb(t, logb)
    if not (np.isfinite(total) and np.all(np.isfinite(u))):
        raise FloatingPointError("non-finite result in smoothed argmax")
    return u, total, logb


def smoothed_argmax(ctx: DgfContext, g: np.ndarray) -> tuple[np.ndarray, float]:
    u, value, _ = smoothed_argmax_full(ctx, g)
    return u, value


def prox_from_logb(
    ctx: DgfContext, center_logb: np.ndarray, xi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Prox step from a center given by its local log-probabilities.

    Works with ``w_i = -xi_i + sum_{k in D_j^i} v_k`` and
    ``v_j = beta_j log sum_i b_i exp(w_i / beta_j)``, which is the smoothed
    argmax of ``grad omega(x) - xi`` with the gradient's constants cancelled.
    """
    xi = np.asarray(xi, dtype=float)
    t = ctx.treeplex
    acc = np.zeros(t.num_variables)
    logb = np.empty(t.num_variables)
    for lvl in t.bottom_up:
        beta_s = ctx.beta[lvl.simplexes]
        z = center_logb[lvl.vars] + (acc[lvl.vars] - xi[lvl.vars]) / beta_s[lvl.seg]
        lse = _segment_lse(z, lvl.starts, lvl.seg)
        logb[lvl.vars] = z - lse[lvl.seg]
        roots = lvl.parents == ROOT
        np.add.at(acc, lvl.parents[~roots], (beta_s * lse)[~roots])
    u = _sequence_from_logb(t, logb)
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite result in prox mapping")
    return u, logb


def prox_map(ctx: DgfContext, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """``argmin_u <xi,u> + V(u || x)`` for a strictly interior center ``x``."""
    x = np.asarray(x, dtype=float)
    _check_interior(x)
    t = ctx.treeplex
    logb = np.log(x) - np.log(t.parent_values(x))
    return prox_from_logb(ctx, logb, xi)[0]


def omega_center(ctx: DgfContext) -> np.ndarray:
    return ctx.omega_center


def bregman(ctx: DgfContext, u: np.ndarray, x: np.ndarray) -> float:
    """``V(u || x)`` for interior ``x``."""
    return omega_value(ctx, u) - omega_value(ctx, x) - float(
        np.dot(omega_gradient(ctx, x), np.asarray(u) - np.asarray(x))
    )


@dataclass(frozen=True)
class SetWidth:
    empirical: float  # max over sampled vertices of V(v || x_omega)
    exact: float  # -omega(x_omega)
    modulus: float
    bound: Optional[float]  # proven bound on width/modulus, corollary-scaled only

    @property
    def ratio(self) -> float:
        return self.empirical / self.modulus


def set_width_bound(
    ctx: DgfContext, rng: Optional[np.random.Generator] = None, samples: int = 200
) -> SetWidth:
    rng = rng or np.random.default_rng(0)
    xw = ctx.omega_center
    grad = omega_gradient(ctx, xw)
    w0 = omega_value(ctx, xw)
    best = 0.0
    for _ in range(samples):
        v = ctx.treeplex.random_vertex(rng)
        best = max(best, omega_value(ctx, v) - w0 - float(np.dot(grad, v - xw)))
    bound = ctx.proven_width_bound() if ctx.weights.scheme == "corollary-scaled" else None
    return SetWidth(best, ctx.set_width, ctx.modulus, bound)


# ------------------------------------------------------------------ helpers
def _segment_lse(z: np.ndarray, starts: np.ndarray, seg: np.ndarray) -> np.ndarray:
    m = np.maximum.reduceat(z, starts)
    s = np.add.reduceat(np.exp(z - m[seg]), starts)
    return m + np.log(s)


def _sequence_from_logb(t: Treeplex, logb: np.ndarray) -> np.ndarray:
    u = np.empty(t.num_variables)
    for lvl in t.top_down:
        par = np.where(lvl.parents == ROOT, 1.0, u[np.maximum(lvl.parents, 0)])
        u[lvl.vars] = par[lvl.seg] * np.exp(logb[lvl.vars])
    return u
