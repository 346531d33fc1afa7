"""
1. fastapi 인스턴스 생성
2. 컨테이너 와이어링
3. 미들웨어 / 예외 핸들러 설정
4. 라우터 등록
5. uvicorn 실행

Desk Engine FastAPI Main Application
번역 추론 엔진과 비용 효율 벤치마크 API 엔트리포인트
"""

import logging

from fastapi import FastAPI

from api.v1.router import api_router, health_router
from core.config import get_settings
from core.container import Container
from core.exception_handlers import setup_exception_handlers
from core.middleware import setup_middleware

logger = logging.getLogger("deskengine")


def create_app() -> FastAPI:
    """FastAPI 애플리케이션 팩토리"""
    settings = get_settings()

    # 컨테이너 초기화
    container = Container()
    container.config.from_dict(settings.model_dump())

    container.wire(modules=[
        "api.v1.endpoints.health",
        "api.v1.endpoints.translate",
        "api.v1.endpoints.bench",
        "api.v1.endpoints.distill",
    ])

    app = FastAPI(
        title=settings.PROJECT_NAME,
        description=settings.DESCRIPTION,
        version=settings.VERSION,
        docs_url="/docs" if settings.DEBUG else None,
        redoc_url="/redoc" if settings.DEBUG else None,
    )

    # 컨테이너 연결
    app.container = container

    # 미들웨어 설정
    setup_middleware(app, settings)

    # 예외 핸들러 설정
    setup_exception_handlers(app)

    logger.info(f"PRECISION: {settings.PRECISION}, MEMOIZE: {settings.MEMOIZE}, DEBUG: {settings.DEBUG}")

    app.include_router(health_router, tags=["Health Check"])
    app.include_router(api_router, prefix="/api/v1")

    return app


app = create_app()

if __name__ == "__main__":
    import uvicorn
    settings = get_settings()
    uvicorn.run(
        "main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        access_log=settings.DEBUG
    )
