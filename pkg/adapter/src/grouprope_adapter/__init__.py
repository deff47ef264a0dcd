"""Grouped rotary position remapping for pretrained causal language models."""

from .errors import AdapterError
from .maps import (
    assignment_arrays,
    group_index_map,
    logistic_group_size,
    query_positions,
    read_assignment_json,
    read_map_json,
)
from .patch import PatchedModel, PatchSpec, patch_model
from .sweep import (
    perplexity_sweep,
    plot_length_curves,
    plot_window_curves,
    sequence_perplexity,
    window_sweep,
    write_rows_csv,
)
from .tiny import build_tiny_rotary_model

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "logistic_group_size",
    "group_index_map",
    "query_positions",
    "assignment_arrays",
    "read_map_json",
    "read_assignment_json",
    "PatchSpec",
    "PatchedModel",
    "patch_model",
    "sequence_perplexity",
    "perplexity_sweep",
    "window_sweep",
    "write_rows_csv",
    "plot_length_curves",
    "plot_window_curves",
    "build_tiny_rotary_model",
    "__version__",
]
