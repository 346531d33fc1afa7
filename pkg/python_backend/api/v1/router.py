"""
Main API Router
모든 엔드포인트를 통합하는 메인 라우터
"""

from fastapi import APIRouter

from .endpoints import bench, distill, health, models, translate

# 메인 API 라우터 생성
api_router = APIRouter()

api_router.include_router(translate.router, tags=["translate"])
api_router.include_router(bench.router, prefix="/bench", tags=["bench"])
api_router.include_router(distill.router, prefix="/distill", tags=["distill"])
api_router.include_router(models.router, prefix="/models", tags=["models"])

# health는 루트 레벨 (main.py에서 prefix 없이 등록)
health_router = health.router
