"""
번역 / 튜너 API 엔드포인트
- 의존성 주입 -> Depends + Provide
- 엔진 예외는 전역 핸들러가 JSON으로 변환
"""

from dependency_injector.wiring import Provide, inject
from fastapi import APIRouter, Depends
from fastapi.concurrency import run_in_threadpool

from core.config import get_settings
from core.container import Container
from engine.autotune import TunerState
from engine.transformer import Regime
from services.translation_service import DecodeOptions, TranslationService

from ..schemas.translation import TranslateRequest, TranslateResponse, TunerDumpResponse

router = APIRouter()


@router.post("/translate", response_model=TranslateResponse, summary="문장 번역")
@inject
async def translate(
    request: TranslateRequest,
    translation_service: TranslationService = Depends(Provide[Container.translation_service]),
) -> TranslateResponse:
    """토큰화된 문장 목록을 현재 모델로 번역 (디코딩 시간과 커널 호출 수 포함)"""
    regime = Regime(request.precision) if request.precision else None
    options = DecodeOptions.from_settings(get_settings(), beam=request.beam, regime=regime)
    result = await run_in_threadpool(translation_service.translate_lines, request.sentences, options)
    return TranslateResponse(
        translations=result.translations,
        tokens=result.tokens,
        seconds=result.seconds,
        kernel_counters=result.counters,
    )


@router.get("/tuner", response_model=TunerDumpResponse, summary="auto-tuner 테이블")
@inject
async def tuner_dump(tuner: TunerState = Depends(Provide[Container.tuner])) -> TunerDumpResponse:
    return TunerDumpResponse(lines=tuner.dump())
