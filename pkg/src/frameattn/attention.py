"""Full attention forward/backward with temporal position encoding modes.

Tensors are (heads, T, d_head) float64 arrays. Per head the forward pass is:
rotate Q and K rows at their mode-dependent positions, scores = scale * Q'K'^T
plus the additive mask (and, for time_rpe, a temporal-distance bias), masked
row softmax, then weights @ V. Rotation touches Q and K only, never V. One
mask and one position table are shared by all heads.

Position-encoding modes:

  * rope_only       -- rotate at the global id n.
  * time_rope_only  -- rotate at gamma * temporal_id(n).
  * dual_rope       -- rotate at n + gamma * temporal_id(n); gamma=0 is
                       bit-identical to rope_only.
  * time_ape        -- rope_only rotation, plus a fixed sinusoidal embedding
                       of temporal_id(n) added to the Q/K inputs.
  * time_rpe        -- rope_only rotation, plus a bias table indexed by the
                       clipped temporal-id difference added to the scores.

time_ape and time_rpe exist to give the ablation harness representatives of
the absolute/relative encoding families; they are deliberately minimal and
not faithful to any particular published variant. With an empty visual span
the temporal ids equal the global ids, so the time modes are permitted but
collapse to functions of n alone (dual_rope, for instance, rotates at
(1 + gamma) * n).

The backward pass is the exact analytic gradient of this map; positions,
masks, the APE table, and the RPE bias are treated as constants. Rotations
are orthonormal, so their backward is the rotation at the negated position.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .layout import SequenceLayout, adjusted_positions
from .masks import AttentionMask, MaskKind, allowed, build_mask
from .numerics import masked_row_softmax, softmax_backward
from .rope import FrequencyTable, RopeConfig, frequencies, pair_score, rotate_rows

__all__ = [
    "PeMode",
    "AttentionConfig",
    "AttentionResult",
    "AttentionGrads",
    "mode_positions",
    "time_ape_embedding",
    "temporal_bias_matrix",
    "attention_forward",
    "attention_backward",
    "attention_brute_oracle",
]


class PeMode(enum.Enum):
    ROPE_ONLY = "rope_only"
    TIME_ROPE_ONLY = "time_rope_only"
    DUAL_ROPE = "dual_rope"
    TIME_APE = "time_ape"
    TIME_RPE = "time_rpe"

    @classmethod
    def from_string(cls, name: str) -> "PeMode":
        for mode in cls:
            if mode.value == name:
                return mode
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown pe mode {name!r}; valid modes: {valid}")


@dataclass(frozen=True)
class AttentionConfig:
    num_heads: int
    d_head: int
    rope: RopeConfig
    mask_kind: MaskKind
    pe_mode: PeMode = PeMode.DUAL_ROPE
    scale: float | None = None
    strict_monotonic_suffix: bool = False
    fw_block_causal_within_frame: bool = False

    def __post_init__(self):
        if self.num_heads < 1:
            raise ValueError(f"num_heads must be >= 1, got {self.num_heads}")
        if self.d_head != self.rope.d_head:
            raise ValueError(f"d_head {self.d_head} does not match rope.d_head {self.rope.d_head}")
        if self.scale is None:
            object.__setattr__(self, "scale", 1.0 / math.sqrt(self.d_head))
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass
class AttentionResult:
    """Forward output plus everything the backward pass needs."""

    output: np.ndarray
    weights: np.ndarray
    config: AttentionConfig
    positions: np.ndarray
    mask: AttentionMask
    q_rot: np.ndarray = field(repr=False)
    k_rot: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    freqs: FrequencyTable = field(repr=False)


@dataclass
class AttentionGrads:
    grad_q: np.ndarray
    grad_k: np.ndarray
    grad_v: np.ndarray


def mode_positions(layout: SequenceLayout, config: AttentionConfig) -> np.ndarray:
    """Rotation position per token under the configured pe mode."""
    table = adjusted_positions(
        layout, config.rope.gamma, strict_monotonic_suffix=config.strict_monotonic_suffix
    )
    if config.pe_mode is PeMode.TIME_ROPE_ONLY:
        return config.rope.gamma * table.temporal_ids.astype(np.float64)
    if config.pe_mode is PeMode.DUAL_ROPE:
        return table.adjusted
    return table.global_ids.astype(np.float64)


def time_ape_embedding(temporal: np.ndarray, freqs: FrequencyTable) -> np.ndarray:
    """Sinusoidal embedding of temporal ids: (sin, cos) per frequency pair."""
    phi = np.asarray(temporal, dtype=np.float64)[:, None] * freqs.thetas[None, :]
    emb = np.empty((len(phi), freqs.d_head), dtype=np.float64)
    emb[:, 0::2] = np.sin(phi)
    emb[:, 1::2] = np.cos(phi)
    return emb


def temporal_bias_matrix(temporal: np.ndarray, rpe_bias: np.ndarray) -> np.ndarray:
    """Bias[i, j] = rpe_bias[R + clip(temporal[i] - temporal[j], -R, R)].

    `rpe_bias` must have odd length 2R + 1; its middle entry is the
    zero-distance bias.
    """
    b = np.asarray(rpe_bias, dtype=np.float64)
    if b.ndim != 1 or len(b) % 2 != 1:
        raise ValueError(f"rpe bias must be a 1-D odd-length table, got shape {b.shape}")
    radius = len(b) // 2
    t = np.asarray(temporal, dtype=np.int64)
    delta = np.clip(t[:, None] - t[None, :], -radius, radius)
    return b[radius + delta]


def _temporal_for(layout: SequenceLayout, config: AttentionConfig) -> np.ndarray:
    return adjusted_positions(
        layout, config.rope.gamma, strict_monotonic_suffix=config.strict_monotonic_suffix
    ).temporal_ids


def _check_tensor(name: str, x: np.ndarray, config: AttentionConfig, t: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    expected = (config.num_heads, t, config.d_head)
    if arr.shape != expected:
        raise ValueError(f"{name} must have shape {expected}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def attention_forward(
    Q: np.ndarray,
    K: np.ndarray,
    V: np.ndarray,
    layout: SequenceLayout,
    config: AttentionConfig,
    rpe_bias: np.ndarray | None = None,
    positions: np.ndarray | None = None,
) -> AttentionResult:
    """Per-head rotate-score-softmax-mix; returns output and the weights.

    `positions` overrides the mode-derived rotation positions (used for
    shift-invariance experiments). `rpe_bias` is only accepted in time_rpe
    mode; omitting it there means a zero bias.
    """
    t = layout.total_len
    Q = _check_tensor("Q", Q, config, t)
    K = _check_tensor("K", K, config, t)
    V = _check_tensor("V", V, config, t)
    if rpe_bias is not None and config.pe_mode is not PeMode.TIME_RPE:
        raise ValueError("rpe_bias is only meaningful with pe_mode=time_rpe")

    freqs = frequencies(config.rope)
    pos = mode_positions(layout, config) if positions is None else np.asarray(positions, dtype=np.float64)
    if pos.shape != (t,):
        raise ValueError(f"positions must have shape ({t},), got {pos.shape}")
    mask = build_mask(config.mask_kind, layout, config.fw_block_causal_within_frame)

    q_in, k_in = Q, K
    if config.pe_mode is PeMode.TIME_APE:
        ape = time_ape_embedding(_temporal_for(layout, config), freqs)
        q_in = Q + ape[None, :, :]
        k_in = K + ape[None, :, :]
    bias = None
    if config.pe_mode is PeMode.TIME_RPE and rpe_bias is not None:
        bias = temporal_bias_matrix(_temporal_for(layout, config), rpe_bias)

    h = config.num_heads
    q_rot = np.empty_like(q_in)
    k_rot = np.empty_like(k_in)
    weights = np.empty((h, t, t), dtype=np.float64)
    output = np.empty_like(V)
    for i in range(h):
        q_rot[i] = rotate_rows(q_in[i], pos, freqs)
        k_rot[i] = rotate_rows(k_in[i], pos, freqs)
        scores = config.scale * (q_rot[i] @ k_rot[i].T)
        if bias is not None:
            scores = scores + bias
        weights[i] = masked_row_softmax(scores, mask.values)
        output[i] = weights[i] @ V[i]
    return AttentionResult(
        output=output,
        weights=weights,
        config=config,
        positions=pos,
        mask=mask,
        q_rot=q_rot,
        k_rot=k_rot,
        v=V,
        freqs=freqs,
    )


def attention_backward(state: AttentionResult, grad_output: np.ndarray) -> AttentionGrads:
    """Exact gradients of attention_forward w.r.t. Q, K, V.

    Positions, mask, APE rows, and RPE bias are constants of the forward
    map, so additive encodings pass gradients straight through.
    """
    g = np.asarray(grad_output, dtype=np.float64)
    if g.shape != state.output.shape:
        raise ValueError(f"grad_output shape {g.shape} does not match output {state.output.shape}")
    cfg = state.config
    grad_q = np.empty_like(state.q_rot)
    grad_k = np.empty_like(state.k_rot)
    grad_v = np.empty_like(state.v)
    for i in range(cfg.num_heads):
        w = state.weights[i]
        grad_v[i] = w.T @ g[i]
        grad_w = g[i] @ state.v[i].T
        grad_scores = softmax_backward(w, grad_w)
        grad_qr = cfg.scale * (grad_scores @ state.k_rot[i])
        grad_kr = cfg.scale * (grad_scores.T @ state.q_rot[i])
        grad_q[i] = rotate_rows(grad_qr, -state.positions, state.freqs)
        grad_k[i] = rotate_rows(grad_kr, -state.positions, state.freqs)
    return AttentionGrads(grad_q=grad_q, grad_k=grad_k, grad_v=grad_v)


def attention_brute_oracle(
    Q: np.ndarray,
    K: np.ndarray,
    V: np.ndarray,
    layout: SequenceLayout,
    config: AttentionConfig,
    rpe_bias: np.ndarray | None = None,
    positions: np.ndarray | None = None,
) -> np.ndarray:
    """Scalar-loop re-implementation of the forward output.

    Walks every (head, query, key) triple with per-pair `pair_score` calls,
    uses the `allowed` predicate instead of a mask matrix, and normalises by
    hand. Kept deliberately independent of attention_forward so the two can
    check each other.
    """
    t = layout.total_len
    Q = _check_tensor("Q", Q, config, t)
    K = _check_tensor("K", K, config, t)
    V = _check_tensor("V", V, config, t)
    freqs = frequencies(config.rope)
    pos = mode_positions(layout, config) if positions is None else np.asarray(positions, dtype=np.float64)
    temporal = _temporal_for(layout, config)

    q_in, k_in = Q, K
    if config.pe_mode is PeMode.TIME_APE:
        ape = time_ape_embedding(temporal, freqs)
        q_in = Q + ape[None, :, :]
        k_in = K + ape[None, :, :]
    bias_table = None
    radius = 0
    if config.pe_mode is PeMode.TIME_RPE and rpe_bias is not None:
        bias_table = [float(b) for b in np.asarray(rpe_bias, dtype=np.float64)]
        radius = len(bias_table) // 2

    out = np.zeros_like(V)
    for h in range(config.num_heads):
        for i in range(t):
            cols = [
                j
                for j in range(t)
                if allowed(config.mask_kind, layout, i, j, config.fw_block_causal_within_frame)
            ]
            if not cols:
                continue
            logits = []
            for j in cols:
                s = config.scale * pair_score(q_in[h, i], k_in[h, j], pos[i], pos[j], freqs)
                if bias_table is not None:
                    d = int(temporal[i]) - int(temporal[j])
                    d = max(-radius, min(radius, d))
                    s += bias_table[radius + d]
                logits.append(s)
            top = max(logits)
            exps = [math.exp(s - top) for s in logits]
            z = sum(exps)
            row = np.zeros(config.d_head)
            for e, j in zip(exps, cols):
                row += (e / z) * V[h, j]
            out[h, i] = row
    return out
