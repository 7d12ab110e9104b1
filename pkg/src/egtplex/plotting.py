"""Log-log convergence figures written to image files."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from egtplex.solvers.telemetry import ConvergenceRecord  # noqa: E402


def plot_curves(
    runs: dict[str, Sequence[ConvergenceRecord]],
    path: str,
    title: Optional[str] = None,
) -> str:
    """eps_sad against tree traversals, both axes logarithmic; returns ``path``."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    drawn = False
    for name, recs in runs.items():
        pts = [(r.traversals, r.eps_sad) for r in recs if r.eps_sad > 0 and r.traversals > 0]
        if pts:
            xs, ys = zip(*pts)
            ax.loglog(xs, ys, marker=".", label=name)
            drawn = True
    ax.set_xlabel("tree traversals")
    ax.set_ylabel("saddle-point residual")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if drawn:
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no positive residuals to plot", ha="center", transform=ax.transAxes)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
