#!/usr/bin/env python3
"""Sweep the temporal-weight gamma over the standard grid on frame_order.

Writes sweep.csv and reports.json into --out (default ./results/gamma_sweep)
and prints the CSV. Fully deterministic given --seed.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from frameattn.harness import PAPER_GAMMA_GRID, TrialConfig, gamma_sweep, sweep_csv
from frameattn.layout import build_layout
from frameattn.pgmio import write_text_atomic
from frameattn.tasks import Task


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--out", default="results/gamma_sweep")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    base = TrialConfig(
        task=Task.FRAME_ORDER,
        layout=build_layout(2, 4, 4, 2),
        seed=args.seed,
        steps=args.steps,
    )
    reports = gamma_sweep(base, PAPER_GAMMA_GRID, workers=args.workers)
    csv = sweep_csv(reports)
    os.makedirs(args.out, exist_ok=True)
    write_text_atomic(os.path.join(args.out, "sweep.csv"), csv)
    sys.stdout.write(csv)
    print(f"wrote {args.out}/sweep.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
