"""Patch rotary-attention models to use merged neighbor/grouped positions.

Patching replaces each attention module's ``forward`` with one that rotates
queries and keys twice (exact positions for the neighbor window, grouped
positions beyond it), selects per pair before a single softmax, and mixes
values.  Only full-sequence forward passes are supported; incremental
decoding with a populated KV cache is rejected because the grouped query
index of every position shifts as the sequence grows.

Supported model layout: a decoder stack exposing ``model.layers[*].self_attn``
with ``q_proj/k_proj/v_proj/o_proj`` and a model-level rotary embedding
module (Llama, Mistral, Qwen2, and friends).  Everything else raises
``unsupported-architecture``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import AdapterError
from .maps import assignment_arrays

__all__ = ["PatchSpec", "PatchedModel", "patch_model"]

SCHEMES = ("self", "se", "off")


@dataclass(frozen=True)
class PatchSpec:
    """What to apply: grouping scheme, its parameters, and run limits."""

    scheme: str
    capacity: int | None = None
    growth_rate: float | None = None
    group_size: int | None = None
    window: int = 1024
    model_id: str = ""
    max_len: int | None = None
    precision: str = "float32"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise AdapterError("invalid-config", f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.scheme == "self":
            if self.capacity is None or self.capacity < 1:
                raise AdapterError("invalid-config", "scheme 'self' needs capacity >= 1")
            if self.capacity > 1 and (self.growth_rate is None or self.growth_rate <= 0):
                raise AdapterError("invalid-config", "scheme 'self' needs a positive growth rate")
            if self.group_size is not None:
                raise AdapterError("invalid-config", "scheme 'self' does not take group_size")
        elif self.scheme == "se":
            if self.group_size is None or self.group_size < 1:
                raise AdapterError("invalid-config", "scheme 'se' needs group_size >= 1")
            if self.capacity is not None or self.growth_rate is not None:
                raise AdapterError("invalid-config", "scheme 'se' does not take capacity/growth_rate")
        if self.window < 0:
            raise AdapterError("invalid-config", f"window must be >= 0, got {self.window}")
        if self.precision not in ("float32", "float64"):
            raise AdapterError("invalid-config", f"unsupported precision {self.precision!r}")

    @property
    def spec_id(self) -> str:
        if self.scheme == "off":
            return "off"
        if self.scheme == "se":
            return f"se-G{self.group_size}-W{self.window}"
        return f"self-C{self.capacity}-r{self.growth_rate}-W{self.window}"

    def positions(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return assignment_arrays(
            n, self.window, self.scheme, self.capacity, self.growth_rate, self.group_size
        )


def _rotate_half(x: torch.Tensor) -> torch.Tensor:
    half = x.shape[-1] // 2
    return torch.cat((-x[..., half:], x[..., :half]), dim=-1)


def _repeat_kv(x: torch.Tensor, n_rep: int) -> torch.Tensor:
    if n_rep == 1:
        return x
    b, kv_heads, n, d = x.shape
    return x[:, :, None].expand(b, kv_heads, n_rep, n, d).reshape(b, kv_heads * n_rep, n, d)


def _resolve_stack(model):
    base = getattr(model, "model", model)
    layers = getattr(base, "layers", None)
    rotary = getattr(base, "rotary_emb", None)
    if layers is None or rotary is None:
        raise AdapterError(
            "unsupported-architecture",
            f"{type(model).__name__} does not expose a rotary decoder stack (model.layers + model.rotary_emb)",
        )
    attentions = []
    for layer in layers:
        attn = getattr(layer, "self_attn", None)
        if attn is None or not all(
            hasattr(attn, name) for name in ("q_proj", "k_proj", "v_proj", "o_proj")
        ):
            raise AdapterError(
                "unsupported-architecture",
                f"{type(layer).__name__} attention lacks separate q/k/v/o projections",
            )
        attentions.append(attn)
    return attentions, rotary


@dataclass
class PatchedModel:
    """Handle over a patched model; ``unpatch()`` restores it exactly."""

    model: object
    spec: PatchSpec
    _patched: list = field(default_factory=list)
    _position_cache: dict = field(default_factory=dict)

    def unpatch(self) -> None:
        for module in self._patched:
            del module.forward  # removes the instance override, re-exposing the class method
        self._patched.clear()

    def __enter__(self) -> "PatchedModel":
        return self

    def __exit__(self, *exc) -> None:
        self.unpatch()

    def _positions(self, n: int, device) -> tuple[torch.Tensor, torch.Tensor]:
        key = (n, str(device))
        if key not in self._position_cache:
            key_pos, query_pos = self.spec.positions(n)
            self._position_cache[key] = (
                torch.as_tensor(key_pos, device=device),
                torch.as_tensor(query_pos, device=device),
            )
        return self._position_cache[key]


def _merged_forward(handle: PatchedModel, module, rotary):
    spec = handle.spec

    def forward(
        hidden_states,
        position_embeddings=None,
        attention_mask=None,
        past_key_values=None,
        **kwargs,
    ):
        if past_key_values is not None and getattr(past_key_values, "get_seq_length", lambda: 0)():
            raise AdapterError(
                "unsupported",
                "incremental decoding with a populated KV cache is not supported; "
                "run full-sequence forward passes (use_cache=False)",
            )
        batch, n, _ = hidden_states.shape
        if spec.max_len is not None and n > spec.max_len:
            raise AdapterError("invalid-input", f"sequence length {n} exceeds max_len {spec.max_len}")
        shape = (batch, n, -1, module.head_dim)
        q = module.q_proj(hidden_states).view(shape).transpose(1, 2)
        k = module.k_proj(hidden_states).view(shape).transpose(1, 2)
        v = module.v_proj(hidden_states).view(shape).transpose(1, 2)

        device = hidden_states.device
        key_pos, query_pos = handle._positions(n, device)
        exact = torch.arange(n, device=device)
        cos_e, sin_e = rotary(v, exact[None])
        cos_k, sin_k = rotary(v, key_pos[None])
        cos_q, sin_q = rotary(v, query_pos[None])

        def rotate(x, cos, sin):
            return (x * cos.unsqueeze(1)) + (_rotate_half(x) * sin.unsqueeze(1))

        groups = module.num_key_value_groups
        neighbor_q, neighbor_k = rotate(q, cos_e, sin_e), rotate(k, cos_e, sin_e)
        grouped_q, grouped_k = rotate(q, cos_q, sin_q), rotate(k, cos_k, sin_k)
        neighbor_k = _repeat_kv(neighbor_k, groups)
        grouped_k = _repeat_kv(grouped_k, groups)
        values = _repeat_kv(v, groups)

        neighbor_scores = torch.matmul(neighbor_q, neighbor_k.transpose(2, 3)) * module.scaling
        grouped_scores = torch.matmul(grouped_q, grouped_k.transpose(2, 3)) * module.scaling
        dist = exact[:, None] - exact[None, :]
        scores = torch.where(dist < spec.window, neighbor_scores, grouped_scores)
        if attention_mask is not None:
            scores = scores + attention_mask[:, :, :, :n]
        else:
            scores = scores.masked_fill(dist < 0, torch.finfo(scores.dtype).min)

        weights = torch.softmax(scores, dim=-1, dtype=torch.float32).to(q.dtype)
        out = torch.matmul(weights, values).transpose(1, 2).reshape(batch, n, -1)
        return module.o_proj(out), weights

    return forward


def patch_model(model, spec: PatchSpec) -> PatchedModel:
    """Apply the spec to every attention layer; scheme 'off' patches nothing."""
    handle = PatchedModel(model=model, spec=spec)
    if spec.scheme == "off":
        return handle
    attentions, rotary = _resolve_stack(model)
    for module in attentions:
        module.forward = _merged_forward(handle, module, rotary)
        handle._patched.append(module)
    return handle
