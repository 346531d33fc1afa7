"""
Engine Exceptions
엔진 전역에서 사용하는 예외 계층
"""


class EngineError(Exception):
    """모든 엔진 오류의 기반 클래스"""

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


class DimensionError(EngineError):
    """텐서 shape / rank 불일치"""


class ParameterError(EngineError):
    """잘못된 인자 값 (음수 clip, 빈 alternative 목록 등)"""


class GraphError(EngineError):
    """계산 그래프 구성 오류"""


class FeedError(EngineError):
    """forward 시 input 노드 feed 누락"""


class VocabularyError(EngineError):
    """어휘 범위를 벗어난 token id"""


class StateError(EngineError):
    """디코더 상태와 모델 설정 불일치"""


class InputFormatError(EngineError):
    """입력 파일 형식 오류"""


class ConfigError(EngineError):
    """모델 설정 파일 오류"""


class ModelUnavailableError(EngineError):
    """모델이 로드되지 않은 상태에서 번역 요청"""
