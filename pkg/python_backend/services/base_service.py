"""
기본 서비스 클래스
모든 서비스의 공통 기능(로깅, 구간 시간 측정)을 제공하는 베이스 클래스
"""

import logging
import time
from abc import ABC
from contextlib import contextmanager
from typing import Callable, Dict, Iterator


class BaseService(ABC):
    """Base class for all services"""

    def __init__(self, clock: Callable[[], float] = time.perf_counter):
        self.logger = logging.getLogger(f"deskengine.{self.__class__.__name__}")
        self.clock = clock

    def _log_error(self, message: str, exception: Exception = None):
        """Error logging helper method"""
        if exception:
            self.logger.error(f"{message}: {str(exception)}")
        else:
            self.logger.error(message)

    def _log_info(self, message: str):
        """Info logging helper method"""
        self.logger.info(message)

    def _log_debug(self, message: str):
        """Debug logging helper method"""
        self.logger.debug(message)

    @contextmanager
    def _timed(self, label: str, sink: Dict[str, float]) -> Iterator[None]:
        """블록 실행 시간(초)을 sink[label]에 누적"""
        start = self.clock()
        try:
            yield
        finally:
            elapsed = self.clock() - start
            sink[label] = sink.get(label, 0.0) + elapsed
            self._log_debug(f"{label}: {elapsed:.4f}s")
