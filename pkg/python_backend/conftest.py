"""
pytest 설정 파일 - 공통 픽스처와 설정
작은 무작위 모델, 토이 어휘 / 사전 파일, FastAPI 앱과 테스트 클라이언트
"""

import os

import numpy as np
import pytest
import pytest_asyncio
from fastapi.testclient import TestClient
from httpx import ASGITransport, AsyncClient

# 테스트 환경 변수 설정
os.environ["TESTING"] = "true"
os.environ["DEBUG"] = "false"

from decoding.shortlist import LexTable  # noqa: E402
from decoding.vocab import Vocab  # noqa: E402
from engine.autotune import TunerState  # noqa: E402
from engine.model import ModelConfig, init_params  # noqa: E402
from main import create_app  # noqa: E402
from services.translation_service import TranslationService  # noqa: E402

TOY_VOCAB_SIZE = 40


@pytest.fixture
def rng():
    """고정 시드 numpy 난수 생성기"""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """2층 self-attention 토이 모델"""
    return ModelConfig(emb_dim=16, ffn_dim=32, enc_layers=2, dec_layers=2, heads=2, vocab_size=TOY_VOCAB_SIZE)


@pytest.fixture
def tiny_aan_config():
    """2층 AAN 토이 모델"""
    return ModelConfig(emb_dim=16, ffn_dim=32, enc_layers=2, dec_layers=2, heads=2,
                       vocab_size=TOY_VOCAB_SIZE, decoder_variant="aan")


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config, seed=7)


@pytest.fixture
def tiny_aan_params(tiny_aan_config):
    return init_params(tiny_aan_config, seed=7)


@pytest.fixture
def toy_vocab():
    return Vocab.synthetic(TOY_VOCAB_SIZE)


@pytest.fixture
def toy_lex():
    """w3..w9 → 각 2개 번역, 빈도 상위 w10 / w11"""
    entries = []
    for i in range(3, 10):
        entries.append((f"w{i}", f"w{i + 10}", 0.6))
        entries.append((f"w{i}", f"w{i + 20}", 0.3))
    return LexTable.from_entries(entries, frequent=["w10", "w11"])


@pytest.fixture
def toy_files(tmp_path, toy_vocab):
    """어휘 / 사전 / 빈도 / 입력 파일을 tmp_path에 작성"""
    vocab_path = tmp_path / "vocab.txt"
    toy_vocab.save(vocab_path)

    lex_path = tmp_path / "lex.tsv"
    lex_path.write_text("".join(f"w{i}\tw{i + 10}\t0.6\nw{i}\tw{i + 20}\t0.3\n" for i in range(3, 10)), encoding="utf-8")

    freq_path = tmp_path / "freq.tsv"
    freq_path.write_text("w11\t50\nw10\t90\nw12\t5\n", encoding="utf-8")

    input_path = tmp_path / "input.txt"
    input_path.write_text("w3 w4 w5\nw6 w7\nw8 w9 w3 w4\n", encoding="utf-8")

    return {"vocab": vocab_path, "lex": lex_path, "freq": freq_path, "input": input_path, "dir": tmp_path}


@pytest.fixture
def fake_clock():
    """호출마다 정해진 간격만큼 증가하는 시계 (tick 값은 테스트에서 바꿀 수 있음)"""

    class FakeClock:
        def __init__(self):
            self.now = 0.0
            self.tick = 1.0

        def __call__(self):
            self.now += self.tick
            return self.now

    return FakeClock()


@pytest.fixture
def translation_service(tiny_config, toy_vocab, toy_lex):
    """무작위 토이 모델이 로드된 번역 서비스"""
    service = TranslationService(settings=None, tuner=TunerState(budget=2))
    service.load_random(tiny_config, seed=3, vocab=toy_vocab, lex=toy_lex)
    return service


@pytest.fixture
def app():
    """FastAPI 애플리케이션 픽스처"""
    application = create_app()
    yield application
    application.container.unwire()


@pytest.fixture
def loaded_app(app, translation_service):
    """번역 서비스 provider를 토이 모델로 교체한 앱 (튜너도 같은 인스턴스 공유)"""
    with app.container.translation_service.override(translation_service), \
            app.container.tuner.override(translation_service.tuner):
        yield app


@pytest.fixture
def client(app):
    """동기 테스트 클라이언트"""
    return TestClient(app)


@pytest_asyncio.fixture
async def async_client(app):
    """비동기 테스트 클라이언트"""
    transport = ASGITransport(app=app)
    async with AsyncClient(transport=transport, base_url="http://test") as ac:
        yield ac
