"""
FastAPI 예외 핸들러 설정
엔진 예외와 요청 검증 오류를 JSON 응답으로 변환
"""

import logging

from fastapi import FastAPI, HTTPException, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from core.exceptions import EngineError, ModelUnavailableError

logger = logging.getLogger(__name__)


def setup_exception_handlers(app: FastAPI):
    """예외 핸들러 설정"""

    @app.exception_handler(ModelUnavailableError)
    async def model_unavailable_handler(request: Request, exc: ModelUnavailableError):
        """모델 미설정 → 503"""
        logger.warning(f"Model unavailable for {request.url}: {exc.message}")
        return JSONResponse(
            status_code=503,
            content={"error": type(exc).__name__, "message": exc.message},
        )

    @app.exception_handler(EngineError)
    async def engine_exception_handler(request: Request, exc: EngineError):
        """엔진 입력 / 형식 오류 → 400"""
        logger.error(f"Engine error {type(exc).__name__}: {exc.message} for {request.url}")
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "message": exc.message},
        )

    @app.exception_handler(HTTPException)
    async def http_exception_handler(request: Request, exc: HTTPException):
        """HTTP 예외 핸들러"""
        logger.error(f"HTTP Exception: {exc.status_code} - {exc.detail} for {request.url}")
        return JSONResponse(
            status_code=exc.status_code,
            content={
                "error": exc.detail,
                "status_code": exc.status_code
            }
        )

    @app.exception_handler(RequestValidationError)
    async def validation_exception_handler(request: Request, exc: RequestValidationError):
        """요청 검증 예외 핸들러"""
        return JSONResponse(
            status_code=422,
            content={
                "error": "Validation Error",
                "details": jsonable_encoder(exc.errors())
            }
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(request: Request, exc: Exception):
        """일반 예외 핸들러"""
        logger.error(f"Unhandled exception: {str(exc)}")
        return JSONResponse(
            status_code=500,
            content={
                "error": "Internal Server Error",
                "message": "An unexpected error occurred"
            }
        )
