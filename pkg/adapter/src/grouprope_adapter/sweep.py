"""Perplexity sweeps of patched models over long token streams, plus plots.

Rows follow the ``spec_id,length,perplexity`` CSV contract; a run that fails
(out of memory, sequence past the model's limits) leaves its perplexity cell
empty and the sweep continues.
"""

from __future__ import annotations

import math

import numpy as np
import torch

from .errors import AdapterError
from .patch import PatchSpec, patch_model

__all__ = [
    "sequence_perplexity",
    "perplexity_sweep",
    "window_sweep",
    "write_rows_csv",
    "plot_length_curves",
    "plot_window_curves",
]

CSV_HEADER = "spec_id,length,perplexity"


def sequence_perplexity(model, token_ids: torch.Tensor) -> float:
    """exp of the mean next-token NLL over one full-sequence forward."""
    if token_ids.ndim == 1:
        token_ids = token_ids[None]
    if token_ids.shape[1] < 2:
        raise AdapterError("invalid-input", "perplexity needs at least two tokens")
    with torch.no_grad():
        logits = model(token_ids, use_cache=False).logits
    log_probs = torch.log_softmax(logits[:, :-1].float(), dim=-1)
    targets = token_ids[:, 1:]
    nll = -log_probs.gather(-1, targets[..., None]).squeeze(-1)
    return float(torch.exp(nll.mean()))


def _sweep_one(model, spec: PatchSpec, tokens: np.ndarray, length: int) -> dict:
    row = {"spec_id": spec.spec_id, "length": length, "perplexity": None}
    if length > len(tokens):
        return row
    ids = torch.as_tensor(tokens[:length], dtype=torch.long)
    try:
        row["perplexity"] = sequence_perplexity(model, ids)
    except (RuntimeError, MemoryError, AdapterError):
        pass  # recorded as failed; the sweep continues
    return row


def perplexity_sweep(
    model, tokens: np.ndarray, specs: list[PatchSpec], lengths: list[int]
) -> list[dict]:
    """One row per (spec, length); patches are applied and reverted per spec."""
    rows: list[dict] = []
    for spec in specs:
        handle = patch_model(model, spec)
        try:
            for length in lengths:
                rows.append(_sweep_one(model, spec, tokens, length))
        finally:
            handle.unpatch()
    return rows


def window_sweep(
    model, tokens: np.ndarray, base_spec: PatchSpec, windows: list[int], length: int
) -> list[dict]:
    """Fix the grouping and the length; vary the neighbor window."""
    rows = []
    for window in windows:
        spec = PatchSpec(
            scheme=base_spec.scheme,
            capacity=base_spec.capacity,
            growth_rate=base_spec.growth_rate,
            group_size=base_spec.group_size,
            window=window,
            model_id=base_spec.model_id,
            max_len=base_spec.max_len,
            precision=base_spec.precision,
        )
        handle = patch_model(model, spec)
        try:
            rows.append(_sweep_one(model, spec, tokens, length))
        finally:
            handle.unpatch()
    return rows


def write_rows_csv(rows: list[dict], path) -> None:
    lines = [CSV_HEADER]
    for row in rows:
        ppl = "" if row["perplexity"] is None else repr(row["perplexity"])
        lines.append(f"{row['spec_id']},{row['length']},{ppl}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _plot(rows: list[dict], x_key: str, x_label: str, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_spec: dict[str, list[dict]] = {}
    for row in rows:
        by_spec.setdefault(row["spec_id"], []).append(row)
    for spec_id, spec_rows in by_spec.items():
        xs = [r[x_key] for r in spec_rows if r["perplexity"] is not None]
        ys = [r["perplexity"] for r in spec_rows if r["perplexity"] is not None]
        ax.plot(xs, ys, marker="o", label=spec_id)
    ax.set_xlabel(x_label)
    ax.set_ylabel("perplexity")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_length_curves(rows: list[dict], path) -> None:
    _plot(rows, "length", "sequence length (tokens)", path)


def plot_window_curves(rows: list[dict], path) -> None:
    for row in rows:
        row.setdefault("window", int(str(row["spec_id"]).rsplit("-W", 1)[-1]) if "-W" in str(row["spec_id"]) else 0)
    _plot(rows, "window", "neighbor window (tokens)", path)
