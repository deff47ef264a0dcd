"""Text renderings of the file formats the CLI and service emit.

All renderers are pure string builders so identical inputs give identical
bytes; floats are written with ``repr`` (shortest round-trip form).
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "render_json",
    "render_rel_pos_csv",
    "render_nll_csv",
    "render_dual_nll_csv",
    "render_capacity_csv",
]


def render_json(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def render_rel_pos_csv(matrix: np.ndarray) -> str:
    """Lower-triangular relative-position matrix; cells above the diagonal stay empty."""
    lines = []
    for i, row in enumerate(matrix):
        cells = [str(int(v)) for v in row[: i + 1]] + [""] * (len(row) - i - 1)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_nll_csv(nll: np.ndarray) -> str:
    lines = ["position,nll"]
    lines.extend(f"{p},{repr(float(v))}" for p, v in enumerate(nll))
    return "\n".join(lines) + "\n"


def render_dual_nll_csv(vanilla: np.ndarray, merged: np.ndarray) -> str:
    lines = ["position,vanilla_nll,merged_nll"]
    lines.extend(
        f"{p},{repr(float(a))},{repr(float(b))}" for p, (a, b) in enumerate(zip(vanilla, merged))
    )
    return "\n".join(lines) + "\n"


_CAPACITY_COLUMNS = (
    "variant",
    "capacity",
    "growth_rate",
    "size",
    "window",
    "train_len",
    "max_context_length",
    "formula_value",
    "difference",
)


def render_capacity_csv(rows: list[dict]) -> str:
    lines = [",".join(_CAPACITY_COLUMNS)]
    for row in rows:
        cells = []
        for col in _CAPACITY_COLUMNS:
            value = row.get(col)
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
