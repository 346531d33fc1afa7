"""
Dependency Injection Container
설정, 공유 auto-tuner, 서비스 싱글톤 구성
"""

from dependency_injector import containers, providers

from engine.autotune import TunerState
from services.bench_service import BenchService
from services.distill_service import DistillService
from services.translation_service import TranslationService

from .config import get_settings


class Container(containers.DeclarativeContainer):
    """의존성 주입 컨테이너"""

    # 설정
    config = providers.Configuration()

    # 설정 프로바이더
    settings = providers.Singleton(get_settings)

    # 여러 실행기가 공유하는 튜닝 테이블
    tuner = providers.Singleton(
        TunerState,
        budget=config.TUNE_BUDGET,
        force_alt=config.FORCE_ALT,
    )

    translation_service = providers.Singleton(
        TranslationService,
        settings=settings,
        tuner=tuner,
    )

    bench_service = providers.Singleton(BenchService)

    distill_service = providers.Singleton(DistillService)
