"""Request models for the position-remapping service.

``GroupingSpec`` mirrors the on-disk grouping JSON: a ``variant`` tag plus
the fields that variant needs.  Responses that carry one of the pinned file
formats (index map JSON, assignment JSON, CSV bodies) are emitted from the
core serializers rather than separate response models so the wire bytes
match the file formats exactly.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from ..errors import RemapError
from ..grouping import ConstantSize, GroupingFunction, TabulatedSizes, logistic_growth


class GroupingSpec(BaseModel):
    variant: Literal["logistic", "constant", "tabulated"]
    capacity: int | None = None
    growth_rate: float | None = None
    size: int | None = None
    sizes: list[int] | None = None

    @model_validator(mode="after")
    def _fields_match_variant(self) -> "GroupingSpec":
        required = {
            "logistic": ("capacity", "growth_rate"),
            "constant": ("size",),
            "tabulated": ("sizes",),
        }[self.variant]
        allowed = set(required)
        for name in ("capacity", "growth_rate", "size", "sizes"):
            value = getattr(self, name)
            if name in allowed:
                if value is None:
                    raise ValueError(f"{self.variant} grouping requires {name}")
            elif value is not None:
                raise ValueError(f"{self.variant} grouping does not take {name}")
        return self

    def build(self) -> GroupingFunction:
        if self.variant == "logistic":
            return logistic_growth(self.capacity, self.growth_rate)
        if self.variant == "constant":
            return ConstantSize(self.size)
        return TabulatedSizes(tuple(self.sizes))


class MapRequest(BaseModel):
    n: int = Field(ge=0)
    function: GroupingSpec


class RelPosRequest(BaseModel):
    n: int = Field(ge=0)
    window: int = Field(ge=0)
    train_len: int = Field(ge=1)
    function: GroupingSpec
    format: Literal["csv", "json"] = "csv"


class CapacityRequest(BaseModel):
    window: int = Field(ge=0)
    train_len: int = Field(ge=1)
    functions: list[GroupingSpec]
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def _nonempty(self) -> "CapacityRequest":
        if not self.functions:
            raise ValueError("at least one grouping spec is required")
        return self


class CompareRequest(BaseModel):
    n: int = Field(ge=0)
    window: int = Field(ge=0)
    train_len: int = Field(ge=1)
    constant_size: int = Field(ge=1)
    capacity: int = Field(ge=1)
    growth_rate: float = Field(gt=0)


class ToyNllRequest(BaseModel):
    tokens: list[int]
    vocab: int = Field(ge=1)
    layers: int = Field(ge=1)
    heads: int = Field(ge=1)
    head_dim: int = Field(ge=2)
    seed: int = Field(ge=0)
    window: int = Field(ge=0)
    train_len: int = Field(ge=1)
    function: GroupingSpec
    base: float = Field(default=10000.0, gt=0)


def build_grouping(spec: GroupingSpec) -> GroupingFunction:
    try:
        return spec.build()
    except RemapError:
        raise
    except (TypeError, ValueError) as exc:  # defensive: validator should catch these
        raise RemapError("invalid-config", str(exc))
