# 서비스 클래스 패키지
from .base_service import BaseService
from .bench_service import BenchService
from .distill_service import DistillService
from .translation_service import TranslationService

__all__ = [
    "BaseService",
    "BenchService",
    "DistillService",
    "TranslationService",
]
