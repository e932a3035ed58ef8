"""Command-line front end.

Subcommands: render-mask, positions, heatmap, gradcheck, sweep, grid,
selftest. Exit statuses are a stable contract: 0 success, 1 check failure,
2 bad input, 3 I/O error. Everything is deterministic given flags and
seeds; files are written atomically (temp + rename).

JSON arguments (--layout, --config) accept either inline JSON text or a
path to a JSON file. When --out is omitted, the FRAMEATTN_OUT environment
variable supplies the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .attention import AttentionConfig, PeMode, attention_forward
from .gradcheck import attention_fd_error, default_micro_cases, model_fd_error
from .harness import (
    PAPER_GAMMA_GRID,
    TrialConfig,
    ablation_grid,
    gamma_sweep,
    grid_csv,
    grid_summary,
    sweep_csv,
)
from .layout import SequenceLayout, adjusted_positions
from .masks import MaskKind, build_mask, mask_stats, mask_to_csv, mask_to_pgm
from .numerics import make_rng
from .pgmio import csv_text, pgm_text, write_text_atomic
from .rope import RopeConfig
from .selftest import run_selftest
from .tasks import Task

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_IO_ERROR = 3

OUT_DIR_ENV = "FRAMEATTN_OUT"


class InputError(ValueError):
    pass


def _load_json_arg(value: str) -> dict:
    """Inline JSON object or a path to a file containing one."""
    text = value
    if not value.lstrip().startswith("{"):
        try:
            with open(value) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {value!r}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("expected a JSON object")
    return obj


def _layout_from_arg(value: str) -> SequenceLayout:
    obj = _load_json_arg(value)
    try:
        return SequenceLayout.from_json(json.dumps(obj))
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc


def _resolve_out(path: str | None, default_name: str) -> str:
    if path:
        return path
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return os.path.join(env, default_name)
    raise InputError(f"--out not given and {OUT_DIR_ENV} is not set")


def _attention_setup(obj: dict) -> tuple[SequenceLayout, AttentionConfig]:
    """Attention config JSON: layout plus head/mask/pe fields."""
    if "layout" not in obj:
        raise InputError("config needs a 'layout' object")
    layout = SequenceLayout.from_json(json.dumps(obj["layout"]))
    known = {
        "layout",
        "num_heads",
        "d_head",
        "mask_kind",
        "pe_mode",
        "gamma",
        "base",
        "scale",
        "strict_monotonic_suffix",
        "fw_block_causal_within_frame",
    }
    unknown = set(obj) - known
    if unknown:
        raise InputError(f"unknown config fields: {sorted(unknown)}")
    try:
        config = AttentionConfig(
            num_heads=int(obj.get("num_heads", 2)),
            d_head=int(obj.get("d_head", 8)),
            rope=RopeConfig(
                d_head=int(obj.get("d_head", 8)),
                base=float(obj.get("base", 10000.0)),
                gamma=float(obj.get("gamma", 1.0)),
            ),
            mask_kind=MaskKind.from_string(obj.get("mask_kind", "fw_block_causal")),
            pe_mode=PeMode.from_string(obj.get("pe_mode", "dual_rope")),
            scale=obj.get("scale"),
            strict_monotonic_suffix=bool(obj.get("strict_monotonic_suffix", False)),
            fw_block_causal_within_frame=bool(obj.get("fw_block_causal_within_frame", False)),
        )
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    return layout, config


def cmd_render_mask(args) -> int:
    layout = _layout_from_arg(args.layout)
    try:
        kind = MaskKind.from_string(args.kind)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    mask = build_mask(kind, layout, fw_block_causal_within_frame=args.fw_block_causal_within_frame)
    out = _resolve_out(args.out, f"mask_{kind.value}.pgm")
    if out.endswith(".pgm"):
        text = mask_to_pgm(mask)
    elif out.endswith(".csv"):
        text = mask_to_csv(mask)
    else:
        raise InputError(f"output path must end in .pgm or .csv, got {out!r}")
    write_text_atomic(out, text)
    print(f"allowed_count={mask_stats(mask)['allowed_count']}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_positions(args) -> int:
    layout = _layout_from_arg(args.layout)
    gamma = args.gamma
    if not np.isfinite(gamma):
        raise InputError(f"gamma must be finite, got {gamma}")
    table = adjusted_positions(layout, gamma, strict_monotonic_suffix=args.strict_monotonic_suffix)
    rows = [
        (
            int(n),
            layout.role_of(int(n)).value,
            int(table.temporal_ids[n]),
            repr(float(table.adjusted[n])),
        )
        for n in table.global_ids
    ]
    if args.csv:
        print("n,role,temporal_id,adjusted")
        for n, role, tid, adj in rows:
            print(f"{n},{role},{tid},{adj}")
    else:
        header = ("n", "role", "temporal_id", "adjusted")
        cells = [tuple(str(c) for c in row) for row in rows]
        widths = [max(len(header[i]), *(len(c[i]) for c in cells)) for i in range(4)]
        print("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
        for c in cells:
            print("  ".join(c[i].ljust(widths[i]) for i in range(4)))
    return EXIT_OK


def _heatmap_pixels(weights: np.ndarray) -> np.ndarray:
    peak = float(weights.max())
    if peak <= 0.0:
        return np.zeros(weights.shape, dtype=np.int64)
    return np.rint(255.0 * weights / peak).astype(np.int64)


def cmd_heatmap(args) -> int:
    layout, config = _attention_setup(_load_json_arg(args.config))
    t = layout.total_len
    shape = (config.num_heads, t, config.d_head)
    if args.qkv:
        try:
            with np.load(args.qkv) as data:
                q, k, v = data["Q"], data["K"], data["V"]
        except OSError as exc:
            raise InputError(f"cannot read tensors from {args.qkv!r}: {exc}") from exc
        except KeyError as exc:
            raise InputError(f"{args.qkv!r} must contain arrays Q, K, V") from exc
    else:
        rng = make_rng(args.seed, 200)
        q, k, v = (rng.standard_normal(shape) for _ in range(3))
    try:
        result = attention_forward(q, k, v, layout, config)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out_dir = _resolve_out(args.out, "heatmap")
    os.makedirs(out_dir, exist_ok=True)
    for h in range(config.num_heads):
        if args.format == "csv":
            path = os.path.join(out_dir, f"head_{h}.csv")
            write_text_atomic(path, csv_text(result.weights[h], fmt=lambda v: repr(float(v))))
        else:
            path = os.path.join(out_dir, f"head_{h}.pgm")
            write_text_atomic(path, pgm_text(_heatmap_pixels(result.weights[h])))
        print(f"wrote {path}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    worst = 0.0
    worst_name = ""
    for pe, mk in default_micro_cases():
        err = attention_fd_error(pe, mk, seed=args.seed)
        if err > worst:
            worst, worst_name = err, f"{pe.value}/{mk.value}"
    print(f"attention max_rel_err={worst:.3e} ({worst_name})")
    model_err = model_fd_error(seed=args.seed)
    print(f"model max_rel_err={model_err:.3e}")
    if worst >= 1e-4 or model_err >= 1e-3:
        print("gradcheck FAILED")
        return EXIT_CHECK_FAILED
    print("gradcheck passed")
    return EXIT_OK


def _trial_config_from_arg(value: str) -> TrialConfig:
    try:
        return TrialConfig.from_dict(_load_json_arg(value))
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise InputError(f"{flag} expects a comma-separated list of numbers: {exc}") from exc
    if not values:
        raise InputError(f"{flag} must name at least one value")
    return values


def cmd_sweep(args) -> int:
    base = _trial_config_from_arg(args.config)
    gammas = _parse_float_list(args.gammas, "--gammas") if args.gammas else list(PAPER_GAMMA_GRID)
    reports = gamma_sweep(base, gammas, workers=args.workers)
    csv = sweep_csv(reports)
    out_dir = _resolve_out(args.out, "sweep")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    write_text_atomic(csv_path, csv)
    reports_path = os.path.join(out_dir, "reports.json")
    write_text_atomic(
        reports_path, json.dumps([r.result_dict() for r in reports], sort_keys=True) + "\n"
    )
    sys.stdout.write(csv)
    print(f"wrote {csv_path}")
    print(f"wrote {reports_path}")
    return EXIT_OK


def cmd_grid(args) -> int:
    base = _trial_config_from_arg(args.config)
    try:
        tasks = [Task.from_string(t) for t in args.tasks.split(",") if t]
        masks = [MaskKind.from_string(m) for m in args.masks.split(",") if m]
        pe_modes = [PeMode.from_string(p) for p in args.pe_modes.split(",") if p]
        seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if not (tasks and masks and pe_modes and seeds):
        raise InputError("every grid axis needs at least one value")
    reports = ablation_grid(base, tasks, masks, pe_modes, seeds, workers=args.workers)
    out_dir = _resolve_out(args.out, "grid")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "grid.csv")
    write_text_atomic(csv_path, grid_csv(reports))
    summary = grid_summary(reports)
    summary_path = os.path.join(out_dir, "summary.txt")
    write_text_atomic(summary_path, summary)
    sys.stdout.write(summary)
    print(f"wrote {csv_path}")
    print(f"wrote {summary_path}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    ok, lines = run_selftest()
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frameattn",
        description="Temporal-aware rotary attention with frame-block masks: "
        "render masks and heatmaps, verify gradients, run experiment sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render-mask", help="write an attention mask as PGM or CSV")
    p.add_argument("--layout", required=True, help="layout JSON (inline or file path)")
    p.add_argument("--kind", required=True, help="mask kind name")
    p.add_argument("--out", help="output path ending in .pgm or .csv")
    p.add_argument("--fw-block-causal-within-frame", action="store_true", dest="fw_block_causal_within_frame")
    p.set_defaults(func=cmd_render_mask)

    p = sub.add_parser("positions", help="print global/temporal/adjusted position ids")
    p.add_argument("--layout", required=True, help="layout JSON (inline or file path)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--strict-monotonic-suffix", action="store_true", dest="strict_monotonic_suffix")
    p.set_defaults(func=cmd_positions)

    p = sub.add_parser("heatmap", help="write per-head attention weights as PGM images")
    p.add_argument("--config", required=True, help="attention config JSON (inline or file path)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--qkv", help="optional .npz with arrays Q, K, V instead of seeded noise")
    p.add_argument("--format", choices=("pgm", "csv"), default="pgm", help="pgm grayscale or raw-weight csv")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep", help="run one trial per gamma value")
    p.add_argument("--config", required=True, help="trial config JSON (inline or file path)")
    p.add_argument("--gammas", help="comma-separated gamma list (default: the standard grid)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("grid", help="run the full mask/pe/task/seed cross product")
    p.add_argument("--config", required=True, help="base trial config JSON (inline or file path)")
    p.add_argument("--tasks", default="frame_order")
    p.add_argument("--masks", default=",".join(k.value for k in MaskKind))
    p.add_argument("--pe-modes", dest="pe_modes", default=",".join(m.value for m in PeMode))
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("selftest", help="run the built-in property battery")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
