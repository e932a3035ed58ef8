"""Desk-scale experiment harness: trials, gamma sweeps, ablation grids.

Every trial is fully determined by its TrialConfig: parameter init, data
generation, batch order, and the optional temporal-bias table all derive
from the trial seed through fixed substreams. Reports are byte-identical
across runs except for the wall-clock field, which is excluded from all
serialised tables.

All emitted tables carry REPORT_HEADER: these are synthetic direction-of-
effect experiments, and their absolute accuracies are not comparable to any
published video benchmark.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .attention import AttentionConfig, PeMode
from .layout import SequenceLayout
from .masks import MaskKind
from .model import ModelConfig, TinyModel
from .numerics import make_rng
from .rope import RopeConfig
from .tasks import Task, gen_task, num_classes, vocab_size

__all__ = [
    "REPORT_HEADER",
    "TrialConfig",
    "TrialReport",
    "PAPER_GAMMA_GRID",
    "train_trial",
    "gamma_sweep",
    "ablation_grid",
    "sweep_csv",
    "grid_csv",
    "grid_summary",
]

REPORT_HEADER = (
    "# synthetic-task harness: direction-of-effect comparisons only; "
    "absolute numbers are not comparable to any published benchmark"
)

# The gamma grid the sweep defaults to.
PAPER_GAMMA_GRID = (0.1, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class TrialConfig:
    task: Task
    layout: SequenceLayout
    pe_mode: PeMode = PeMode.DUAL_ROPE
    mask_kind: MaskKind = MaskKind.FW_BLOCK_CAUSAL
    gamma: float = 1.0
    seed: int = 0
    steps: int = 500
    lr: float = 0.02
    momentum: float = 0.9
    layers: int = 2
    num_heads: int = 2
    d_head: int = 8
    ff_hidden: int = 0
    num_symbols: int = 8
    rope_base: float = 10000.0
    train_size: int = 256
    eval_size: int = 256
    batch_size: int = 16
    converge_threshold: float = 0.25
    rpe_radius: int = 8
    rpe_scale: float = 0.1
    strict_monotonic_suffix: bool = False
    fw_block_causal_within_frame: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        for name in ("train_size", "eval_size", "batch_size", "rpe_radius"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not (math.isfinite(self.gamma) and math.isfinite(self.lr)):
            raise ValueError("gamma and lr must be finite")

    def attention_config(self) -> AttentionConfig:
        return AttentionConfig(
            num_heads=self.num_heads,
            d_head=self.d_head,
            rope=RopeConfig(d_head=self.d_head, base=self.rope_base, gamma=self.gamma),
            mask_kind=self.mask_kind,
            pe_mode=self.pe_mode,
            strict_monotonic_suffix=self.strict_monotonic_suffix,
            fw_block_causal_within_frame=self.fw_block_causal_within_frame,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            layers=self.layers,
            num_heads=self.num_heads,
            d_head=self.d_head,
            vocab_size=vocab_size(self.num_symbols),
            num_classes=num_classes(self.task, self.layout, self.num_symbols),
            ff_hidden=self.ff_hidden,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["task"] = self.task.value
        d["pe_mode"] = self.pe_mode.value
        d["mask_kind"] = self.mask_kind.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrialConfig":
        data = dict(obj)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown trial config fields: {sorted(unknown)}")
        if "task" not in data or "layout" not in data:
            raise ValueError("trial config needs at least 'task' and 'layout'")
        data["task"] = Task.from_string(data["task"])
        data["layout"] = SequenceLayout(**data["layout"])
        if "pe_mode" in data:
            data["pe_mode"] = PeMode.from_string(data["pe_mode"])
        if "mask_kind" in data:
            data["mask_kind"] = MaskKind.from_string(data["mask_kind"])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "TrialConfig":
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ValueError("trial config JSON must be an object")
        return cls.from_dict(obj)


@dataclass
class TrialReport:
    config: TrialConfig
    loss_curve: list[float]
    accuracy: float
    wall_ms: float
    converged: bool

    def result_dict(self) -> dict:
        """Everything except wall time; the unit of determinism comparisons."""
        return {
            "config": self.config.to_dict(),
            "loss_curve": self.loss_curve,
            "accuracy": self.accuracy,
            "converged": self.converged,
        }

    def to_json(self, include_wall: bool = False) -> str:
        d = self.result_dict()
        if include_wall:
            d["wall_ms"] = self.wall_ms
        return json.dumps(d, sort_keys=True)


def _make_rpe_bias(config: TrialConfig) -> np.ndarray | None:
    # Fixed (not trained) temporal-distance bias: the trial seed pins it.
    if config.pe_mode is not PeMode.TIME_RPE:
        return None
    rng = make_rng(config.seed, 4)
    return rng.uniform(-config.rpe_scale, config.rpe_scale, 2 * config.rpe_radius + 1)


def train_trial(config: TrialConfig) -> TrialReport:
    """Run one deterministic SGD trial and report its curve and accuracy.

    A non-finite loss stops the parameter updates; the remaining curve is
    filled with NaN and the report comes back with converged=False rather
    than raising.
    """
    start = time.perf_counter()
    train = gen_task(config.task, config.layout, config.seed, config.train_size, config.num_symbols)
    eval_set = gen_task(
        config.task, config.layout, config.seed + 1_000_003, config.eval_size, config.num_symbols
    )
    model = TinyModel(config.model_config(), seed=config.seed)
    attn_cfg = config.attention_config()
    rpe_bias = _make_rpe_bias(config)
    batch_rng = make_rng(config.seed, 3)

    velocity = {k: np.zeros_like(v) for k, v in model.params.items()} if config.momentum else None
    curve: list[float] = []
    diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.steps):
            idx = batch_rng.integers(0, len(train), size=config.batch_size)
            try:
                loss, grads = model.loss_and_grads(
                    train.tokens[idx], train.labels[idx], config.layout, attn_cfg, rpe_bias
                )
            except (ValueError, FloatingPointError, OverflowError):
                # Parameters blew up badly enough that a kernel rejected them.
                loss, grads = float("nan"), None
            curve.append(float(loss))
            if grads is None or not math.isfinite(loss) or any(
                not np.all(np.isfinite(g)) for g in grads.values()
            ):
                diverged = True
                break
            if velocity is not None:
                for k, g in grads.items():
                    velocity[k] = config.momentum * velocity[k] + g
                    model.params[k] -= config.lr * velocity[k]
            else:
                for k, g in grads.items():
                    model.params[k] -= config.lr * g
    while len(curve) < config.steps:
        curve.append(float("nan"))

    def predict_safe(tokens) -> int:
        try:
            return model.predict(tokens, config.layout, attn_cfg, rpe_bias)
        except (ValueError, FloatingPointError, OverflowError):
            return -1

    with np.errstate(over="ignore", invalid="ignore"):
        correct = sum(
            1
            for b in range(len(eval_set))
            if predict_safe(eval_set.tokens[b]) == int(eval_set.labels[b])
        )
    accuracy = correct / len(eval_set)
    final = curve[-1]
    converged = (not diverged) and math.isfinite(final) and final < config.converge_threshold
    wall_ms = (time.perf_counter() - start) * 1000.0
    return TrialReport(
        config=config, loss_curve=curve, accuracy=accuracy, wall_ms=wall_ms, converged=converged
    )


def gamma_sweep(base: TrialConfig, gammas, workers: int = 1) -> list[TrialReport]:
    """One trial per gamma, sharing everything else including the seed.

    Trials are independent; with workers > 1 they run in separate processes
    and the results are identical to a serial run, in gamma order.
    """
    configs = [replace(base, gamma=float(g)) for g in gammas]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(train_trial, configs))
    return [train_trial(c) for c in configs]


def ablation_grid(
    base: TrialConfig,
    tasks,
    mask_kinds,
    pe_modes,
    seeds,
    workers: int = 1,
) -> list[TrialReport]:
    """Full cross-product of trials over the given axes."""
    tasks, mask_kinds, pe_modes, seeds = list(tasks), list(mask_kinds), list(pe_modes), list(seeds)
    if not (tasks and mask_kinds and pe_modes and seeds):
        raise ValueError("all grid axes must be non-empty")
    configs = [
        replace(base, task=t, mask_kind=mk, pe_mode=pm, seed=s)
        for t in tasks
        for mk in mask_kinds
        for pm in pe_modes
        for s in seeds
    ]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(train_trial, configs))
    return [train_trial(c) for c in configs]


def _final_loss(report: TrialReport) -> float:
    return report.loss_curve[-1] if report.loss_curve else float("nan")


def sweep_csv(reports: list[TrialReport]) -> str:
    lines = [
        REPORT_HEADER,
        "gamma,pe_mode,mask_kind,task,seed,steps,final_loss,accuracy,converged",
    ]
    for r in reports:
        c = r.config
        lines.append(
            f"{c.gamma!r},{c.pe_mode.value},{c.mask_kind.value},{c.task.value},"
            f"{c.seed},{c.steps},{_final_loss(r)!r},{r.accuracy!r},{int(r.converged)}"
        )
    return "\n".join(lines) + "\n"


def grid_csv(reports: list[TrialReport]) -> str:
    lines = [
        REPORT_HEADER,
        "task,mask_kind,pe_mode,seed,gamma,steps,final_loss,accuracy,converged",
    ]
    for r in reports:
        c = r.config
        lines.append(
            f"{c.task.value},{c.mask_kind.value},{c.pe_mode.value},{c.seed},"
            f"{c.gamma!r},{c.steps},{_final_loss(r)!r},{r.accuracy!r},{int(r.converged)}"
        )
    return "\n".join(lines) + "\n"


def grid_summary(reports: list[TrialReport]) -> str:
    """Per task: cells (mask, pe) ranked by median accuracy over seeds.

    A cell with any unconverged trial is flagged with the unconverged count.
    """
    cells: dict[tuple[str, str, str], list[TrialReport]] = {}
    for r in reports:
        key = (r.config.task.value, r.config.mask_kind.value, r.config.pe_mode.value)
        cells.setdefault(key, []).append(r)
    lines = [REPORT_HEADER]
    for task in sorted({k[0] for k in cells}):
        lines.append(f"task {task}")
        rows = []
        for (t, mk, pm), rs in cells.items():
            if t != task:
                continue
            med = statistics.median(r.accuracy for r in rs)
            bad = sum(1 for r in rs if not r.converged)
            rows.append((med, mk, pm, bad, len(rs)))
        rows.sort(key=lambda row: (-row[0], row[1], row[2]))
        for med, mk, pm, bad, n in rows:
            flag = f"  UNCONVERGED {bad}/{n}" if bad else ""
            lines.append(f"  {mk:16s} {pm:16s} median_acc={med!r}{flag}")
    return "\n".join(lines) + "\n"
