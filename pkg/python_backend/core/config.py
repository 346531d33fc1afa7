# python_backend/core/config.py
# BaseSettings + .env + @lru_cache
import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings

PRECISIONS = ("float32", "int16", "int8", "autotune")


class Settings(BaseSettings):
    ENVIRONMENT: str = "development"
    PROJECT_NAME: str = "Desk Engine API"
    DESCRIPTION: str = "저정밀 Transformer 번역 추론 엔진과 비용 효율 벤치마크"
    VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # 서버 설정
    HOST: str = "0.0.0.0"
    PORT: int = int(os.environ.get("PORT", 8080))

    # 행렬곱 정밀도 / 그래프
    PRECISION: str = "float32"
    MEMOIZE: bool = True
    TUNE_BUDGET: int = Field(default=100, ge=1)
    FORCE_ALT: Optional[str] = None
    TUNER_DUMP_PATH: Optional[Path] = None
    INT8_CLIP: float = Field(default=2.0, gt=0)

    # 디코딩
    BATCH_WORDS: int = Field(default=384, ge=1)
    BEAM_SIZE: int = Field(default=1, ge=1)
    MAX_LENGTH_FACTOR: float = Field(default=3.0, gt=0)
    LENGTH_PENALTY: float = Field(default=0.0, ge=0)
    SHORTLIST_FREQUENT: int = Field(default=100, ge=0)
    SHORTLIST_TRANSLATIONS: int = Field(default=100, ge=0)
    WORKERS: int = Field(default=1, ge=1)

    # 비용 계산 (USD / 시간)
    PRICE_PER_HOUR: float = Field(default=0.102, gt=0)

    # 모델 위치
    MODEL_PATH: Optional[Path] = None
    CONFIG_PATH: Optional[Path] = None
    VOCAB_PATH: Optional[Path] = None
    LEX_PATH: Optional[Path] = None
    FREQ_PATH: Optional[Path] = None

    @field_validator("PRECISION")
    @classmethod
    def _check_precision(cls, value: str) -> str:
        if value not in PRECISIONS:
            raise ValueError(f"PRECISION must be one of {PRECISIONS}")
        return value

    class Config:
        env_file = Path(__file__).resolve().parent.parent / ".env"  # python_backend/.env 참조
        case_sensitive = True
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
