"""비용 효율 / 리포트 / distillation API 스키마"""

from typing import List, Optional

from pydantic import BaseModel, Field


class CostRequest(BaseModel):
    tokens: int = Field(..., ge=0, description="소스 토큰 수")
    seconds: float = Field(..., gt=0, description="번역 시간 (초, 초기화 제외)")
    usd_per_hour: float = Field(..., gt=0, description="인스턴스 시간당 가격 (USD)")


class CostResponse(BaseModel):
    tokens_per_usd: float
    tokens_per_usd_millions: float


class RunRecord(BaseModel):
    """리포트에 넣을 실행 한 건"""
    system: str = Field(..., min_length=1)
    size_mib: float = Field(..., ge=0)
    seconds: float = Field(..., gt=0)
    tokens: int = Field(..., ge=0)
    beam: int = Field(default=1, ge=1)
    regime: str = Field(default="float32")
    quality: Optional[float] = None


class ReportRequest(BaseModel):
    runs: List[RunRecord] = Field(..., min_length=1)
    usd_per_hour: float = Field(..., gt=0)


class ReportRowModel(BaseModel):
    system: str
    size_mib: float
    time_s: float
    tokens: int
    beam: int
    regime: str
    tokens_per_usd_millions: float
    quality: Optional[float] = None
    frontier: bool


class ReportResponse(BaseModel):
    rows: List[ReportRowModel]
    csv: str


class DistillRequest(BaseModel):
    nbest: List[str] = Field(..., min_length=1, description="n-best 가설 (순위순)")
    reference: str = Field(..., min_length=1, description="원래 참조 번역")


class DistillResponse(BaseModel):
    index: int
    hypothesis: str
    score: float
