"""
Health Check Endpoint
서버 상태 확인을 위한 엔드포인트
"""

from dependency_injector.wiring import Provide, inject
from fastapi import APIRouter, Depends
from pydantic import BaseModel, Field

from core.config import get_settings
from core.container import Container
from services.translation_service import TranslationService

router = APIRouter()


class HealthResponse(BaseModel):
    """헬스체크 응답 모델"""
    status: str = Field(..., description="서버 상태", examples=["ok"])
    service: str = Field(..., description="서비스 이름", examples=["deskengine"])
    version: str = Field(..., description="API 버전")
    precision: str = Field(..., description="기본 행렬곱 정밀도")
    model_loaded: bool = Field(..., description="번역 모델 로드 여부")


@router.get("/health",
            response_model=HealthResponse,
            summary="서버 상태 확인",
            description="엔진 설정과 모델 로드 상태를 확인합니다.")
@inject
async def health_check(
    translation_service: TranslationService = Depends(Provide[Container.translation_service]),
) -> HealthResponse:
    settings = get_settings()
    return HealthResponse(
        status="ok",
        service="deskengine",
        version=settings.VERSION,
        precision=settings.PRECISION,
        model_loaded=translation_service.model is not None,
    )
