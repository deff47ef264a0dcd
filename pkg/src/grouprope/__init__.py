"""Grouped rotary position remapping for long-context attention."""

from .errors import RemapError
from .grouping import (
    ConstantSize,
    GroupIndexMap,
    GroupingFunction,
    LogisticGrowth,
    TabulatedSizes,
    build_map_parallel,
    build_map_sequential,
    grouping_from_json_dict,
    locate,
    logistic_growth,
)
from .posmap import (
    CapacityReport,
    PositionAssignment,
    assign_positions,
    capacity_report,
    max_context_length,
    rel_pos,
    rel_pos_matrix,
)
from .attention import (
    AttentionBatch,
    RopeConfig,
    merged_attention,
    merged_logits,
    rope_encode,
    rotate_at_positions,
    vanilla_attention,
    vanilla_logits,
)
from .compare import compare_schemes, scheme_summary
from .toy import ToyDecoderWeights, load_weights, save_weights, toy_forward

__version__ = "0.1.0"

__all__ = [
    "RemapError",
    "GroupingFunction",
    "LogisticGrowth",
    "ConstantSize",
    "TabulatedSizes",
    "logistic_growth",
    "GroupIndexMap",
    "build_map_sequential",
    "build_map_parallel",
    "locate",
    "grouping_from_json_dict",
    "PositionAssignment",
    "assign_positions",
    "rel_pos",
    "rel_pos_matrix",
    "max_context_length",
    "CapacityReport",
    "capacity_report",
    "RopeConfig",
    "rope_encode",
    "rotate_at_positions",
    "AttentionBatch",
    "vanilla_attention",
    "vanilla_logits",
    "merged_attention",
    "merged_logits",
    "compare_schemes",
    "scheme_summary",
    "ToyDecoderWeights",
    "toy_forward",
    "save_weights",
    "load_weights",
    "__version__",
]
