"""번역 / 모델 API 요청·응답 스키마"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class TranslateRequest(BaseModel):
    """번역 요청 모델"""
    sentences: List[str] = Field(..., min_length=1, description="공백 단위로 토큰화된 소스 문장 목록")
    beam: Optional[int] = Field(default=None, ge=1, description="beam 크기 (생략 시 BEAM_SIZE)")
    precision: Optional[str] = Field(default=None, pattern="^(float32|int16|int8|autotune)$",
                                     description="행렬곱 정밀도 (생략 시 PRECISION)")

    class Config:
        json_schema_extra = {
            "example": {"sentences": ["w3 w4 w5", "w6 w7"], "beam": 1, "precision": "int16"}
        }


class TranslateResponse(BaseModel):
    """번역 응답 모델"""
    translations: List[str] = Field(..., description="입력 순서대로의 번역")
    tokens: int = Field(..., description="소스 토큰 수")
    seconds: float = Field(..., description="디코딩 시간 (초)")
    kernel_counters: Dict[str, int] = Field(default_factory=dict, description="op별 커널 호출 수")


class TunerDumpResponse(BaseModel):
    """튜닝 테이블 덤프 ('key alt_id total_ms count chosen?')"""
    lines: List[str]


class ModelSizeResponse(BaseModel):
    """파라미터 개수 / 크기"""
    preset: Optional[str] = None
    parameters: int
    size_mib: float
