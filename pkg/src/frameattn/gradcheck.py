"""Central-difference gradient verification for the attention kernel and model.

The numeric side only ever calls the forward pass, so it stays independent
of attention_backward and of the hand-written model gradients it checks.

Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor)
with floor 1e-4: entries smaller than the floor are compared absolutely at
tolerance * floor, which keeps finite-difference noise on near-zero entries
from drowning the signal.
"""

from __future__ import annotations

import numpy as np

from .attention import (
    AttentionConfig,
    PeMode,
    attention_backward,
    attention_forward,
)
from .layout import SequenceLayout, build_layout
from .masks import MaskKind
from .model import ModelConfig, TinyModel
from .numerics import make_rng
from .rope import RopeConfig
from .tasks import Task, gen_task, num_classes, vocab_size

__all__ = [
    "relative_error",
    "default_micro_cases",
    "attention_fd_error",
    "model_fd_error",
]

ERROR_FLOOR = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = ERROR_FLOOR) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def default_micro_cases() -> list[tuple[PeMode, MaskKind]]:
    """Every pe mode crossed with every mask kind: 20 cases."""
    return [(pe, mk) for pe in PeMode for mk in MaskKind]


def attention_fd_error(
    pe_mode: PeMode,
    mask_kind: MaskKind,
    seed: int,
    layout: SequenceLayout | None = None,
    num_heads: int = 2,
    d_head: int = 4,
    gamma: float = 0.7,
    h: float = 1e-5,
) -> float:
    """Max relative error of attention_backward vs central differences.

    Uses a scalar probe loss sum(output * G) for a fixed random G, so the
    backward pass is exercised with a dense upstream gradient.
    """
    if layout is None:
        layout = build_layout(1, 2, 2, 2)
    config = AttentionConfig(
        num_heads=num_heads,
        d_head=d_head,
        rope=RopeConfig(d_head=d_head, gamma=gamma),
        mask_kind=mask_kind,
        pe_mode=pe_mode,
    )
    rng = make_rng(seed, 300)
    t = layout.total_len
    shape = (num_heads, t, d_head)
    q, k, v = rng.standard_normal(shape), rng.standard_normal(shape), rng.standard_normal(shape)
    rpe_bias = 0.3 * rng.standard_normal(2 * 3 + 1) if pe_mode is PeMode.TIME_RPE else None
    probe = rng.standard_normal(shape)

    def loss(q_, k_, v_) -> float:
        out = attention_forward(q_, k_, v_, layout, config, rpe_bias=rpe_bias).output
        return float(np.sum(out * probe))

    state = attention_forward(q, k, v, layout, config, rpe_bias=rpe_bias)
    grads = attention_backward(state, probe)
    worst = 0.0
    for arr, analytic, slot in ((q, grads.grad_q, 0), (k, grads.grad_k, 1), (v, grads.grad_v, 2)):
        numeric = np.zeros_like(arr)
        flat = arr.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss(q, k, v)
            flat[i] = orig - h
            down = loss(q, k, v)
            flat[i] = orig
            num_flat[i] = (up - down) / (2.0 * h)
        worst = max(worst, relative_error(analytic, numeric))
    return worst


def model_fd_error(
    seed: int,
    layout: SequenceLayout | None = None,
    task: Task = Task.FRAME_ORDER,
    pe_mode: PeMode = PeMode.DUAL_ROPE,
    mask_kind: MaskKind = MaskKind.FW_BLOCK_CAUSAL,
    layers: int = 1,
    num_heads: int = 1,
    d_head: int = 4,
    num_symbols: int = 4,
    batch: int = 2,
    h: float = 1e-5,
) -> float:
    """Max relative error of the full-model analytic gradient vs central differences.

    Default micro configuration: T=8 layout, one layer, d_head=4.
    """
    if layout is None:
        layout = build_layout(1, 2, 2, 3)
    model_cfg = ModelConfig(
        layers=layers,
        num_heads=num_heads,
        d_head=d_head,
        vocab_size=vocab_size(num_symbols),
        num_classes=num_classes(task, layout, num_symbols),
    )
    attn_cfg = AttentionConfig(
        num_heads=num_heads,
        d_head=d_head,
        rope=RopeConfig(d_head=d_head, gamma=1.0),
        mask_kind=mask_kind,
        pe_mode=pe_mode,
    )
    model = TinyModel(model_cfg, seed=seed)
    data = gen_task(task, layout, seed, batch, num_symbols)

    def loss_only() -> float:
        loss, _ = model.loss_and_grads(data.tokens, data.labels, layout, attn_cfg)
        return loss

    _, grads = model.loss_and_grads(data.tokens, data.labels, layout, attn_cfg)
    worst = 0.0
    for name, param in model.params.items():
        flat = param.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_only()
            flat[i] = orig - h
            down = loss_only()
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * h)
        worst = max(worst, relative_error(grads[name].reshape(-1), numeric))
    return worst
