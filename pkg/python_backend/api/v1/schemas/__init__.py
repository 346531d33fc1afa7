"""API 스키마 패키지"""

from .bench import (
    CostRequest,
    CostResponse,
    DistillRequest,
    DistillResponse,
    ReportRequest,
    ReportResponse,
    ReportRowModel,
    RunRecord,
)
from .translation import ModelSizeResponse, TranslateRequest, TranslateResponse, TunerDumpResponse

__all__ = [
    "CostRequest",
    "CostResponse",
    "DistillRequest",
    "DistillResponse",
    "ReportRequest",
    "ReportResponse",
    "ReportRowModel",
    "RunRecord",
    "ModelSizeResponse",
    "TranslateRequest",
    "TranslateResponse",
    "TunerDumpResponse",
]
