#!/usr/bin/env python3
"""Mask and position-encoding ablation grid on the synthetic tasks.

Runs all four masks against the baseline and temporal position-encoding
modes over several seeds, then prints the per-task ranking. The interesting
comparison is frame-block-causal + dual rotary versus plain causal + global
rotary.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from frameattn.attention import PeMode
from frameattn.harness import TrialConfig, ablation_grid, grid_csv, grid_summary
from frameattn.layout import build_layout
from frameattn.masks import MaskKind
from frameattn.pgmio import write_text_atomic
from frameattn.tasks import Task


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--tasks", default="frame_order,last_frame_recall")
    ap.add_argument("--out", default="results/mask_ablation")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    base = TrialConfig(
        task=Task.FRAME_ORDER,
        layout=build_layout(2, 4, 4, 2),
        steps=args.steps,
    )
    reports = ablation_grid(
        base,
        tasks=[Task.from_string(t) for t in args.tasks.split(",")],
        mask_kinds=list(MaskKind),
        pe_modes=[PeMode.ROPE_ONLY, PeMode.DUAL_ROPE, PeMode.TIME_ROPE_ONLY, PeMode.TIME_APE, PeMode.TIME_RPE],
        seeds=[int(s) for s in args.seeds.split(",")],
        workers=args.workers,
    )
    os.makedirs(args.out, exist_ok=True)
    write_text_atomic(os.path.join(args.out, "grid.csv"), grid_csv(reports))
    summary = grid_summary(reports)
    write_text_atomic(os.path.join(args.out, "summary.txt"), summary)
    sys.stdout.write(summary)
    print(f"wrote {args.out}/grid.csv and {args.out}/summary.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
