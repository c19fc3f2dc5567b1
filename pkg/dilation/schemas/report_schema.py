"""
Pydantic schemas for machine-readable run reports.
"""
from typing import List, Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one verification rule."""

    rule_id: str
    name: str
    severity: str = Field("error", description="error, warning or info")
    status: str = Field(..., description="pass, fail or not_applicable")
    message: str = ""


class VerifyReport(BaseModel):
    """Full acceptance-suite report for one mask."""

    mask: str
    dilation: str
    n: int
    total_checks: int
    passed_checks: int
    failed_checks: int
    skipped_checks: int
    success_rate: float
    results: List[CheckResult] = Field(default_factory=list)
    seed: Optional[int] = None


class MeasureDumpHeader(BaseModel):
    """Sidecar of a measure dump; keeps lattice and scale when the CSV has no rows."""

    dilation: str
    scale: int = Field(..., ge=0)
    support_size: int = Field(..., ge=0)
