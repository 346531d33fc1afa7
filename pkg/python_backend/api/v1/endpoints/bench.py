"""
비용 효율 / 리포트 API 엔드포인트
"""

from dependency_injector.wiring import Provide, inject
from fastapi import APIRouter, Depends

from core.container import Container
from services.bench_service import BenchService, render_csv
from services.translation_service import BenchRun

from ..schemas.bench import CostRequest, CostResponse, ReportRequest, ReportResponse, ReportRowModel

router = APIRouter()


@router.post("/cost", response_model=CostResponse, summary="USD당 번역 토큰 수")
@inject
async def cost(
    request: CostRequest,
    bench_service: BenchService = Depends(Provide[Container.bench_service]),
) -> CostResponse:
    value = bench_service.cost(request.tokens, request.seconds, request.usd_per_hour)
    return CostResponse(tokens_per_usd=value, tokens_per_usd_millions=value / 1e6)


@router.post("/report", response_model=ReportResponse, summary="Pareto frontier 리포트")
@inject
async def report(
    request: ReportRequest,
    bench_service: BenchService = Depends(Provide[Container.bench_service]),
) -> ReportResponse:
    """실행 기록 목록 → 비용 효율 내림차순 행 + CSV 본문"""
    runs = [
        BenchRun(
            system=run.system,
            size_mib=run.size_mib,
            regime=run.regime,
            beam=run.beam,
            batch_words=0,
            shortlist=False,
            seconds=run.seconds,
            tokens=run.tokens,
            quality=run.quality,
        )
        for run in request.runs
    ]
    rows = bench_service.report(runs, request.usd_per_hour)
    return ReportResponse(
        rows=[
            ReportRowModel(
                system=row.system,
                size_mib=row.size_mib,
                time_s=row.time_s,
                tokens=row.tokens,
                beam=row.beam,
                regime=row.regime,
                tokens_per_usd_millions=row.tokens_per_usd / 1e6,
                quality=row.quality,
                frontier=row.frontier,
            )
            for row in rows
        ],
        csv=render_csv(rows),
    )
