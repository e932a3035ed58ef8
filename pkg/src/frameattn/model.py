"""Tiny decoder built on the attention kernel, with hand-written gradients.

One to four layers of (attention + residual, tanh feed-forward + residual)
over a token embedding, classified from the final position. No layer norm,
no dropout, no biases: small enough that every gradient is written out by
hand and checkable against finite differences.

Parameter matrices of shape (fan_in, fan_out) initialise uniform in
+-1/sqrt(fan_in); the embedding table uses fan_in = embed_dim. All
initialisation draws come from one seeded stream in a fixed parameter
order, so a seed pins the model bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attention import attention_backward, attention_forward
from .numerics import make_rng

__all__ = ["ModelConfig", "TinyModel"]


@dataclass(frozen=True)
class ModelConfig:
    layers: int
    num_heads: int
    d_head: int
    vocab_size: int
    num_classes: int
    ff_hidden: int = 0  # 0 means 2 * embed_dim

    def __post_init__(self):
        if not 1 <= self.layers <= 4:
            raise ValueError(f"layers must be in 1..4, got {self.layers}")
        for name in ("num_heads", "d_head", "vocab_size", "num_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.ff_hidden == 0:
            object.__setattr__(self, "ff_hidden", 2 * self.embed_dim)

    @property
    def embed_dim(self) -> int:
        return self.num_heads * self.d_head


def _init(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class TinyModel:
    def __init__(self, config: ModelConfig, seed: int):
        self.config = config
        rng = make_rng(seed, 0)
        d = config.embed_dim
        self.params: dict[str, np.ndarray] = {"embed": _init(rng, d, (config.vocab_size, d))}
        for layer in range(config.layers):
            for name in ("w_q", "w_k", "w_v", "w_o"):
                self.params[f"layer{layer}.{name}"] = _init(rng, d, (d, d))
            self.params[f"layer{layer}.w_ff1"] = _init(rng, d, (d, config.ff_hidden))
            self.params[f"layer{layer}.w_ff2"] = _init(rng, config.ff_hidden, (config.ff_hidden, d))
        self.params["w_out"] = _init(rng, d, (d, config.num_classes))

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        t = x.shape[0]
        cfg = self.config
        return np.ascontiguousarray(x.reshape(t, cfg.num_heads, cfg.d_head).transpose(1, 0, 2))

    def _merge_heads(self, x: np.ndarray) -> np.ndarray:
        cfg = self.config
        return np.ascontiguousarray(x.transpose(1, 0, 2)).reshape(-1, cfg.embed_dim)

    def _forward_seq(self, tokens, layout, attn_cfg, rpe_bias):
        p = self.params
        x = p["embed"][tokens]
        caches = []
        for layer in range(self.config.layers):
            w_q, w_k = p[f"layer{layer}.w_q"], p[f"layer{layer}.w_k"]
            w_v, w_o = p[f"layer{layer}.w_v"], p[f"layer{layer}.w_o"]
            w1, w2 = p[f"layer{layer}.w_ff1"], p[f"layer{layer}.w_ff2"]
            q = self._split_heads(x @ w_q)
            k = self._split_heads(x @ w_k)
            v = self._split_heads(x @ w_v)
            attn = attention_forward(q, k, v, layout, attn_cfg, rpe_bias=rpe_bias)
            attn_cat = self._merge_heads(attn.output)
            x_mid = x + attn_cat @ w_o
            hidden = np.tanh(x_mid @ w1)
            x_out = x_mid + hidden @ w2
            caches.append((x, attn, attn_cat, x_mid, hidden))
            x = x_out
        logits = x[-1] @ p["w_out"]
        return logits, x, caches

    def logits(self, tokens, layout, attn_cfg, rpe_bias=None) -> np.ndarray:
        out, _, _ = self._forward_seq(np.asarray(tokens), layout, attn_cfg, rpe_bias)
        return out

    def predict(self, tokens, layout, attn_cfg, rpe_bias=None) -> int:
        return int(np.argmax(self.logits(tokens, layout, attn_cfg, rpe_bias)))

    def loss_and_grads(self, tokens_batch, labels, layout, attn_cfg, rpe_bias=None):
        """Mean cross-entropy over the batch plus gradients for every parameter."""
        tokens_batch = np.asarray(tokens_batch)
        labels = np.asarray(labels)
        n = tokens_batch.shape[0]
        p = self.params
        grads = self.zero_grads()
        total_loss = 0.0
        for b in range(n):
            tokens = tokens_batch[b]
            label = int(labels[b])
            logits, x_final, caches = self._forward_seq(tokens, layout, attn_cfg, rpe_bias)
            shifted = logits - logits.max()
            exps = np.exp(shifted)
            probs = exps / exps.sum()
            total_loss += -math.log(max(probs[label], 1e-300))

            dlogits = probs.copy()
            dlogits[label] -= 1.0
            grads["w_out"] += np.outer(x_final[-1], dlogits)
            dx = np.zeros_like(x_final)
            dx[-1] = p["w_out"] @ dlogits
            for layer in reversed(range(self.config.layers)):
                x_in, attn, attn_cat, x_mid, hidden = caches[layer]
                w_o = p[f"layer{layer}.w_o"]
                w1, w2 = p[f"layer{layer}.w_ff1"], p[f"layer{layer}.w_ff2"]
                # x_out = x_mid + tanh(x_mid w1) w2
                grads[f"layer{layer}.w_ff2"] += hidden.T @ dx
                dhidden = dx @ w2.T
                dpre = dhidden * (1.0 - hidden**2)
                grads[f"layer{layer}.w_ff1"] += x_mid.T @ dpre
                dx_mid = dx + dpre @ w1.T
                # x_mid = x_in + attn_cat w_o
                grads[f"layer{layer}.w_o"] += attn_cat.T @ dx_mid
                dattn_cat = dx_mid @ w_o.T
                attn_grads = attention_backward(attn, self._split_heads(dattn_cat))
                dq = self._merge_heads(attn_grads.grad_q)
                dk = self._merge_heads(attn_grads.grad_k)
                dv = self._merge_heads(attn_grads.grad_v)
                grads[f"layer{layer}.w_q"] += x_in.T @ dq
                grads[f"layer{layer}.w_k"] += x_in.T @ dk
                grads[f"layer{layer}.w_v"] += x_in.T @ dv
                dx = dx_mid + dq @ p[f"layer{layer}.w_q"].T + dk @ p[f"layer{layer}.w_k"].T + dv @ p[f"layer{layer}.w_v"].T
            np.add.at(grads["embed"], tokens, dx)
        for g in grads.values():
            g /= n
        return total_loss / n, grads
