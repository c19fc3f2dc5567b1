"""Schemas package."""
from dilation.schemas.mask_schema import CoefficientEntry, MaskFile
from dilation.schemas.report_schema import CheckResult, MeasureDumpHeader, VerifyReport

__all__ = [
    "CoefficientEntry",
    "MaskFile",
    "CheckResult",
    "VerifyReport",
    "MeasureDumpHeader",
]
