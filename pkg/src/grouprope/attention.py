"""Rotary position encoding and merged neighbor/grouped causal attention.

Rotary encoding turns a position into per-pair 2-D rotations, so the inner
product of an encoded query and key depends only on their position
difference.  Merged attention exploits that: it computes one logit set with
exact positions and one with grouped positions, picks per pair whichever
branch applies (exact inside the neighbor window, grouped outside), and
normalizes the merged row once.  Every effective rotation difference then
equals :func:`grouprope.posmap.rel_pos` for that pair.

All math is double precision with sequential reductions, keeping outputs
byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import RemapError
from .posmap import PositionAssignment, max_context_length

__all__ = [
    "RopeConfig",
    "rope_encode",
    "rotate_at_positions",
    "AttentionBatch",
    "vanilla_attention",
    "merged_attention",
    "merged_logits",
    "vanilla_logits",
]


@dataclass(frozen=True)
class RopeConfig:
    """Rotary encoding parameters: per-pair angles ``base^(-2d/head_dim)``."""

    head_dim: int
    base: float = 10000.0

    def __post_init__(self):
        if self.head_dim <= 0 or self.head_dim % 2 != 0:
            raise RemapError(
                "dimension", f"head dimension must be a positive even integer, got {self.head_dim}"
            )
        if not self.base > 0:
            raise RemapError("invalid-config", f"rotary base must be positive, got {self.base}")

    @cached_property
    def angles(self) -> np.ndarray:
        d = np.arange(self.head_dim // 2, dtype=np.float64)
        theta = self.base ** (-2.0 * d / self.head_dim)
        theta.setflags(write=False)
        return theta


def rotate_at_positions(x: np.ndarray, positions, cfg: RopeConfig) -> np.ndarray:
    """Rotate coordinate pairs (2d, 2d+1) of x by position * angle_d.

    ``x`` has shape [..., head_dim]; ``positions`` must broadcast against
    ``x.shape[:-1]``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != cfg.head_dim:
        raise RemapError(
            "dimension", f"vector length {x.shape[-1]} does not match head dimension {cfg.head_dim}"
        )
    angle = np.multiply.outer(np.asarray(positions, dtype=np.float64), cfg.angles)
    cos, sin = np.cos(angle), np.sin(angle)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = np.empty_like(x)
    out[..., 0::2] = even * cos - odd * sin
    out[..., 1::2] = even * sin + odd * cos
    return out


def rope_encode(v: np.ndarray, position, cfg: RopeConfig) -> np.ndarray:
    """Encode a single vector at the given (integer or real) position."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise RemapError("dimension", f"expected a 1-D vector, got shape {v.shape}")
    if v.shape[0] % 2 != 0 or v.shape[0] != cfg.head_dim:
        raise RemapError(
            "dimension", f"vector length {v.shape[0]} does not match head dimension {cfg.head_dim}"
        )
    return rotate_at_positions(v, np.float64(position), cfg)


@dataclass(frozen=True)
class AttentionBatch:
    """Per-head query/key/value tensors of shape [heads, n, head_dim]."""

    queries: np.ndarray
    keys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tensors = {}
        for name in ("queries", "keys", "values"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            tensors[name] = arr
            object.__setattr__(self, name, arr)
        shape = tensors["queries"].shape
        if len(shape) != 3:
            raise RemapError("shape", f"expected [heads, n, head_dim], got {shape}")
        for name, arr in tensors.items():
            if arr.shape != shape:
                raise RemapError("shape", f"{name} shape {arr.shape} does not match {shape}")
            if not np.isfinite(arr).all():
                raise RemapError("invalid-input", f"{name} contains NaN or Inf")

    @property
    def heads(self) -> int:
        return self.queries.shape[0]

    @property
    def n(self) -> int:
        return self.queries.shape[1]

    @property
    def head_dim(self) -> int:
        return self.queries.shape[2]

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.head_dim)

    @classmethod
    def random(cls, heads: int, n: int, head_dim: int, seed: int) -> "AttentionBatch":
        rng = np.random.default_rng(seed)
        q, k, v = (rng.standard_normal((heads, n, head_dim)) for _ in range(3))
        return cls(q, k, v)


def _check_batch(batch: AttentionBatch, cfg: RopeConfig) -> None:
    if batch.head_dim != cfg.head_dim:
        raise RemapError(
            "shape", f"batch head dimension {batch.head_dim} does not match config {cfg.head_dim}"
        )
    for name in ("queries", "keys", "values"):
        if not np.isfinite(getattr(batch, name)).all():
            raise RemapError("invalid-input", f"{name} contains NaN or Inf")


def _scaled_logits(batch: AttentionBatch, cfg: RopeConfig, q_pos, k_pos) -> np.ndarray:
    q = rotate_at_positions(batch.queries, q_pos, cfg)
    k = rotate_at_positions(batch.keys, k_pos, cfg)
    return np.einsum("hid,hjd->hij", q, k) * batch.scale


def _causal_softmax_mix(logits: np.ndarray, values: np.ndarray) -> np.ndarray:
    n = logits.shape[-1]
    causal = np.tril(np.ones((n, n), dtype=bool))
    masked = np.where(causal, logits, -np.inf)
    masked = masked - masked.max(axis=-1, keepdims=True)
    weights = np.exp(masked)
    weights /= weights.sum(axis=-1, keepdims=True)
    return np.einsum("hij,hjd->hid", weights, values)


def vanilla_logits(batch: AttentionBatch, cfg: RopeConfig) -> np.ndarray:
    """Scaled pre-mask attention logits with exact positions."""
    _check_batch(batch, cfg)
    pos = np.arange(batch.n, dtype=np.int64)
    return _scaled_logits(batch, cfg, pos, pos)


def vanilla_attention(batch: AttentionBatch, cfg: RopeConfig) -> np.ndarray:
    """Causal softmax attention with queries/keys encoded at exact positions."""
    return _causal_softmax_mix(vanilla_logits(batch, cfg), batch.values)


def merged_logits(
    batch: AttentionBatch, cfg: RopeConfig, assignment: PositionAssignment
) -> np.ndarray:
    """Scaled logits with per-pair neighbor/grouped branch selection."""
    _check_batch(batch, cfg)
    if batch.n != assignment.n:
        raise RemapError(
            "shape", f"batch length {batch.n} does not match assignment length {assignment.n}"
        )
    assert _rotations_within_trained_range(assignment), (
        "effective relative position exceeds train_len-1 despite n within capacity"
    )
    n = batch.n
    pos = np.arange(n, dtype=np.int64)
    neighbor = _scaled_logits(batch, cfg, pos, pos)
    grouped = _scaled_logits(batch, cfg, assignment.query_pos, assignment.key_pos)
    in_window = (pos[:, None] - pos[None, :]) < assignment.window
    return np.where(in_window, neighbor, grouped)


def merged_attention(
    batch: AttentionBatch, cfg: RopeConfig, assignment: PositionAssignment
) -> np.ndarray:
    """Causal attention mixing neighbor (exact) and grouped position logits."""
    return _causal_softmax_mix(merged_logits(batch, cfg, assignment), batch.values)


def _rotations_within_trained_range(assignment: PositionAssignment) -> bool:
    # Debug-build self-check: inside capacity, no effective relative
    # position may exceed the trained range.
    n = assignment.n
    if n == 0:
        return True
    cap = max_context_length(assignment.train_len, assignment.window, assignment.map.source)
    if n > cap:
        return True
    largest = int(assignment.query_pos[-1] - assignment.key_pos[0]) if n - 1 >= assignment.window \
        else min(n - 1, max(assignment.window - 1, 0))
    return largest <= assignment.train_len - 1
