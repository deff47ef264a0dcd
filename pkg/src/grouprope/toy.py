"""Tiny seeded decoder for end-to-end checks of the position remapping.

Nothing here is trained: weights are drawn once from a seeded generator, so
identical (shape, seed) always gives identical weights, forward passes, and
negative log-likelihoods.  The model is a standard pre-norm decoder stack
whose attention is either the vanilla rotary kind or the merged
neighbor/grouped kind, which is the only thing under test.

Weights serialize to a flat binary file: a little-endian header
(magic ``SELF``, version u32, vocab u32, layers u32, heads u32,
head_dim u32, seed u64) followed by all matrices in declaration order as
little-endian float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .attention import AttentionBatch, RopeConfig, merged_attention, vanilla_attention
from .errors import RemapError
from .posmap import PositionAssignment

__all__ = [
    "LayerWeights",
    "ToyDecoderWeights",
    "toy_forward",
    "save_weights",
    "load_weights",
]

_MAGIC = b"SELF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIQ")

# Sequence scoring starts from this fixed id so position 0 has a prediction.
START_ID = 0


@dataclass(frozen=True)
class LayerWeights:
    """One decoder layer; field order is the serialization order."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


@dataclass(frozen=True)
class ToyDecoderWeights:
    """Seeded decoder weights; field order is the serialization order."""

    vocab: int
    layers: int
    heads: int
    head_dim: int
    seed: int
    embedding: np.ndarray
    layer_weights: tuple[LayerWeights, ...]
    output: np.ndarray

    @property
    def model_dim(self) -> int:
        return self.heads * self.head_dim

    @classmethod
    def generate(
        cls, vocab: int, layers: int, heads: int, head_dim: int, seed: int
    ) -> "ToyDecoderWeights":
        if vocab < 1 or layers < 1 or heads < 1 or head_dim < 2 or head_dim % 2 != 0:
            raise RemapError(
                "invalid-config",
                f"bad decoder shape vocab={vocab} layers={layers} heads={heads} head_dim={head_dim}",
            )
        if not 0 <= seed < 2**64:
            raise RemapError("invalid-config", f"seed {seed} outside u64 range")
        d = heads * head_dim
        rng = np.random.default_rng(seed)
        embedding = rng.standard_normal((vocab, d)) / np.sqrt(d)
        per_layer = []
        for _ in range(layers):
            per_layer.append(
                LayerWeights(
                    wq=rng.standard_normal((d, d)) / np.sqrt(d),
                    wk=rng.standard_normal((d, d)) / np.sqrt(d),
                    wv=rng.standard_normal((d, d)) / np.sqrt(d),
                    wo=rng.standard_normal((d, d)) / np.sqrt(d),
                    w1=rng.standard_normal((d, 4 * d)) / np.sqrt(d),
                    w2=rng.standard_normal((4 * d, d)) / np.sqrt(4 * d),
                )
            )
        output = rng.standard_normal((d, vocab)) / np.sqrt(d)
        return cls(vocab, layers, heads, head_dim, seed, embedding, tuple(per_layer), output)

    def matrices(self) -> list[np.ndarray]:
        mats = [self.embedding]
        for lw in self.layer_weights:
            mats.extend([lw.wq, lw.wk, lw.wv, lw.wo, lw.w1, lw.w2])
        mats.append(self.output)
        return mats


def save_weights(weights: ToyDecoderWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                _MAGIC,
                _VERSION,
                weights.vocab,
                weights.layers,
                weights.heads,
                weights.head_dim,
                weights.seed,
            )
        )
        for mat in weights.matrices():
            fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())


def load_weights(path) -> ToyDecoderWeights:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise RemapError("invalid-input", f"weights file too short ({len(blob)} bytes)")
    magic, version, vocab, layers, heads, head_dim, seed = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise RemapError("invalid-input", f"bad magic {magic!r} in weights file")
    if version != _VERSION:
        raise RemapError("invalid-input", f"unsupported weights version {version}")
    d = heads * head_dim
    shapes = [(vocab, d)]
    for _ in range(layers):
        shapes.extend([(d, d)] * 4 + [(d, 4 * d), (4 * d, d)])
    shapes.append((d, vocab))
    expected = _HEADER.size + sum(r * c for r, c in shapes) * 8
    if len(blob) != expected:
        raise RemapError(
            "invalid-input", f"weights file has {len(blob)} bytes, expected {expected}"
        )
    offset = _HEADER.size
    mats = []
    for rows, cols in shapes:
        count = rows * cols
        mats.append(
            np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            .reshape(rows, cols)
            .astype(np.float64)
        )
        offset += count * 8
    per_layer = tuple(
        LayerWeights(*mats[1 + 6 * i : 7 + 6 * i]) for i in range(layers)
    )
    return ToyDecoderWeights(
        vocab, layers, heads, head_dim, seed, mats[0], per_layer, mats[-1]
    )


def _rms_norm(x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + 1e-6)


def _split_heads(x: np.ndarray, heads: int, head_dim: int) -> np.ndarray:
    n = x.shape[0]
    return x.reshape(n, heads, head_dim).transpose(1, 0, 2)


def toy_forward(
    tokens,
    weights: ToyDecoderWeights,
    cfg: RopeConfig,
    assignment: PositionAssignment | None = None,
) -> np.ndarray:
    """Per-position negative log-likelihood of each token given its prefix.

    Token p is scored from the hidden state at input position p, whose input
    is the preceding token (START_ID for p = 0).  With an assignment the
    attention is merged neighbor/grouped; without, vanilla.
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim != 1:
        raise RemapError("shape", f"expected a 1-D token sequence, got shape {tokens.shape}")
    if tokens.size and (tokens.min() < 0 or tokens.max() >= weights.vocab):
        raise RemapError(
            "out-of-vocabulary",
            f"token ids must be in 0..{weights.vocab - 1}",
        )
    if cfg.head_dim != weights.head_dim:
        raise RemapError(
            "shape", f"rotary head dim {cfg.head_dim} does not match weights {weights.head_dim}"
        )
    n = tokens.size
    if assignment is not None and assignment.n != n:
        raise RemapError(
            "shape", f"assignment length {assignment.n} does not match sequence {n}"
        )
    if n == 0:
        return np.zeros(0, dtype=np.float64)

    inputs = np.concatenate([[START_ID], tokens[:-1]])
    x = weights.embedding[inputs]
    for lw in weights.layer_weights:
        h = _rms_norm(x)
        batch = AttentionBatch(
            _split_heads(h @ lw.wq, weights.heads, weights.head_dim),
            _split_heads(h @ lw.wk, weights.heads, weights.head_dim),
            _split_heads(h @ lw.wv, weights.heads, weights.head_dim),
        )
        if assignment is None:
            attn = vanilla_attention(batch, cfg)
        else:
            attn = merged_attention(batch, cfg, assignment)
        x = x + attn.transpose(1, 0, 2).reshape(n, weights.model_dim) @ lw.wo
        h = _rms_norm(x)
        x = x + np.maximum(h @ lw.w1, 0.0) @ lw.w2

    logits = _rms_norm(x) @ weights.output
    peak = logits.max(axis=-1, keepdims=True)
    log_norm = peak + np.log(np.exp(logits - peak).sum(axis=-1, keepdims=True))
    log_probs = logits - log_norm
    return -log_probs[np.arange(n), tokens]
