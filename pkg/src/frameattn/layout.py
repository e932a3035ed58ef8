"""Multimodal token sequences and their position ids.

A sequence is text prefix, then F frames of m visual tokens each, then text
suffix. Every token gets three position values:

  * a global id n (0..T-1),
  * a temporal id that is constant inside a frame, increments across frames,
    and is the identity outside the visual span,
  * an adjusted real position n + gamma * temporal_id(n).

The temporal map is implemented exactly as the piecewise definition reads,
which makes the first suffix token share the last frame's temporal id. Pass
``strict_monotonic_suffix=True`` to bump the suffix branch by one and avoid
that collision.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TokenRole",
    "SequenceLayout",
    "PositionTable",
    "build_layout",
    "temporal_ids",
    "adjusted_positions",
    "relative_text_visual_distance",
]


class TokenRole(enum.Enum):
    TEXT_PREFIX = "text_prefix"
    VISUAL = "visual"
    TEXT_SUFFIX = "text_suffix"


@dataclass(frozen=True)
class SequenceLayout:
    """Token-role structure of one sequence: text, F frames x m tokens, text."""

    prefix_len: int
    num_frames: int
    tokens_per_frame: int
    suffix_len: int

    def __post_init__(self):
        for name in ("prefix_len", "num_frames", "tokens_per_frame", "suffix_len"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if (self.num_frames == 0) != (self.tokens_per_frame == 0):
            raise ValueError("num_frames and tokens_per_frame must be zero together or both positive")
        if self.total_len < 1:
            raise ValueError("layout must contain at least one token")

    @property
    def visual_len(self) -> int:
        return self.num_frames * self.tokens_per_frame

    @property
    def total_len(self) -> int:
        return self.prefix_len + self.visual_len + self.suffix_len

    @property
    def has_visual(self) -> bool:
        return self.visual_len > 0

    @property
    def visual_start(self) -> int:
        """First visual position id v_s (== prefix_len; meaningless if no visual span)."""
        return self.prefix_len

    @property
    def visual_end(self) -> int:
        """Last visual position id v_e; only defined when the visual span is non-empty."""
        if not self.has_visual:
            raise ValueError("layout has no visual span")
        return self.prefix_len + self.visual_len - 1

    def role_of(self, n: int) -> TokenRole:
        self._check_index(n)
        if n < self.prefix_len:
            return TokenRole.TEXT_PREFIX
        if n < self.prefix_len + self.visual_len:
            return TokenRole.VISUAL
        return TokenRole.TEXT_SUFFIX

    def frame_of(self, n: int) -> int | None:
        """Frame index of a visual position, None for text positions."""
        if self.role_of(n) is not TokenRole.VISUAL:
            return None
        return (n - self.prefix_len) // self.tokens_per_frame

    def frame_slice(self, f: int) -> slice:
        if not 0 <= f < self.num_frames:
            raise ValueError(f"frame index {f} out of range for {self.num_frames} frames")
        start = self.prefix_len + f * self.tokens_per_frame
        return slice(start, start + self.tokens_per_frame)

    def _check_index(self, n: int) -> None:
        if not 0 <= n < self.total_len:
            raise ValueError(f"position {n} out of range for T={self.total_len}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "prefix_len": self.prefix_len,
                "num_frames": self.num_frames,
                "tokens_per_frame": self.tokens_per_frame,
                "suffix_len": self.suffix_len,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SequenceLayout":
        obj = json.loads(text)
        if not isinstance(obj, dict):
            raise ValueError("layout JSON must be an object")
        required = {"prefix_len", "num_frames", "tokens_per_frame", "suffix_len"}
        unknown = set(obj) - required
        if unknown:
            raise ValueError(f"unknown layout fields: {sorted(unknown)}")
        missing = required - set(obj)
        if missing:
            raise ValueError(f"missing layout fields: {sorted(missing)}")
        return cls(**{k: int(obj[k]) for k in required})


def build_layout(prefix_len: int, num_frames: int, tokens_per_frame: int, suffix_len: int) -> SequenceLayout:
    return SequenceLayout(prefix_len, num_frames, tokens_per_frame, suffix_len)


def temporal_ids(layout: SequenceLayout, strict_monotonic_suffix: bool = False) -> np.ndarray:
    """Per-token temporal ids as an int64 vector of length T.

    Identity before the visual span; v_s + (n - v_s) // m inside it; after
    the span the global id shifted down by the span length minus the number
    of whole frame steps it covered. With no visual span this is the identity
    map.
    """
    n = np.arange(layout.total_len, dtype=np.int64)
    if not layout.has_visual:
        return n
    v_s = layout.visual_start
    v_e = layout.visual_end
    m = layout.tokens_per_frame
    ids = n.copy()
    inside = (n >= v_s) & (n <= v_e)
    ids[inside] = v_s + (n[inside] - v_s) // m
    after = n > v_e
    shift = v_e - v_s + 1 - (v_e - v_s) // m
    if strict_monotonic_suffix:
        shift -= 1
    ids[after] = n[after] - shift
    return ids


@dataclass(frozen=True)
class PositionTable:
    """Global, temporal, and adjusted positions for every token of a layout."""

    global_ids: np.ndarray
    temporal_ids: np.ndarray
    adjusted: np.ndarray
    gamma: float

    def __len__(self) -> int:
        return len(self.global_ids)


def adjusted_positions(
    layout: SequenceLayout, gamma: float, strict_monotonic_suffix: bool = False
) -> PositionTable:
    """Full position table with adjusted[n] = n + gamma * temporal_id(n), exactly."""
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite, got {gamma}")
    g = np.arange(layout.total_len, dtype=np.int64)
    t = temporal_ids(layout, strict_monotonic_suffix=strict_monotonic_suffix)
    adjusted = g.astype(np.float64) + gamma * t.astype(np.float64)
    return PositionTable(global_ids=g, temporal_ids=t, adjusted=adjusted, gamma=gamma)


def relative_text_visual_distance(table: PositionTable, text_pos: int, visual_pos: int) -> float:
    """Adjusted-position distance from a text token to a visual token.

    With gamma=0 this is the plain global-id difference.
    """
    t = len(table)
    for name, idx in (("text_pos", text_pos), ("visual_pos", visual_pos)):
        if not 0 <= idx < t:
            raise ValueError(f"{name}={idx} out of range for T={t}")
    return float(table.adjusted[text_pos] - table.adjusted[visual_pos])
