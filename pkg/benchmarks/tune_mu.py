"""Grid search of mu_scale for EGT on Leduc, scored by the mean log10
eps_sad over power-of-two checkpoints (area under the log-log curve).

    python3 benchmarks/tune_mu.py --cards 3 --weights new --iters 2048
"""

import argparse

import numpy as np

from egtplex.dgf import DgfContext
from egtplex.efg import LeducConfig, build_leduc, to_sequence_form
from egtplex.solvers import egt_run

GRID = [10.0 ** (-e / 2) for e in range(0, 11)]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--cards", type=int, default=3)
    ap.add_argument("--weights", default="new")
    ap.add_argument("--iters", type=int, default=2048)
    args = ap.parse_args()
    problem = to_sequence_form(build_leduc(LeducConfig(k=args.cards)))
    cx = DgfContext.build(problem.X, args.weights)
    cy = DgfContext.build(problem.Y, args.weights)
    scores = []
    for s in GRID:
        try:
            res = egt_run(problem, cx, cy, s, max_iters=args.iters)
        except FloatingPointError as exc:
            print(f"{s:.3g},failed,{exc}")
            continue
        score = float(np.mean([np.log10(max(r.eps_sad, 1e-300)) for r in res.records]))
        scores.append((score, s))
        print(f"{s:.3g},{score:.4f},{res.final_eps:.4g}", flush=True)
    best = min(scores)
    print(f"best mu_scale {best[1]:.3g} (score {best[0]:.4f})")


if __name__ == "__main__":
    main()
