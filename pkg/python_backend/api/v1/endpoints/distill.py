"""
Distillation API 엔드포인트
n-best 중 참조 대비 sentence-BLEU 최고 가설 선택
"""

from dependency_injector.wiring import Provide, inject
from fastapi import APIRouter, Depends

from core.container import Container
from services.distill_service import DistillService

from ..schemas.bench import DistillRequest, DistillResponse

router = APIRouter()


@router.post("/select", response_model=DistillResponse, summary="distillation 가설 선택")
@inject
async def select(
    request: DistillRequest,
    distill_service: DistillService = Depends(Provide[Container.distill_service]),
) -> DistillResponse:
    index, hypothesis, score = distill_service.select(request.nbest, request.reference)
    return DistillResponse(index=index, hypothesis=hypothesis, score=score)
