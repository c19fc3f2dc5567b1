"""
Pydantic schemas for mask files.

Example::

    {"dilation": "line", "field_d": 3,
     "coeffs": [{"k": "0", "p": "1/8+1/8*sqrt(3)"}, ...],
     "tiles": ["0", "1", "2"]}
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CoefficientEntry(BaseModel):
    """One mask coefficient p_k."""

    k: str = Field(..., description="Lattice element (text form, e.g. '3' or '1-2i')")
    p: str = Field(..., description="Exact scalar in grammar form (e.g. '1/8+1/8*sqrt(3)')")

    @field_validator("k", "p", mode="before")
    @classmethod
    def _stringify(cls, value):
        # JSON integers are accepted for convenience
        if isinstance(value, bool):
            raise ValueError("booleans are not lattice elements or scalars")
        if isinstance(value, int):
            return str(value)
        return value


class MaskFile(BaseModel):
    """On-disk mask description."""

    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = Field(None, description="Short identifier")
    description: Optional[str] = Field(None, description="Free text")
    dilation: Literal["line", "plane"] = Field(..., description="Dilation context")
    field_d: Optional[int] = Field(None, gt=1, description="Square-free d of Q(sqrt(d))")
    coeffs: List[CoefficientEntry] = Field(..., min_length=1, description="Mask coefficients")
    tiles: Optional[List[str]] = Field(
        None, description="Stored tile-translate order used for matrix indexing"
    )
    normalize: Literal["sum1", "first1", "unit"] = Field(
        "sum1", description="Default eigenvector normalization"
    )
