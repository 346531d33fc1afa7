"""
API 엔드포인트 테스트
"""

import pytest


@pytest.mark.api
class TestHealthEndpoint:
    """헬스체크 엔드포인트 테스트"""

    def test_health_without_model(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "ok"
        assert data["precision"] == "float32"
        assert data["model_loaded"] is False

    def test_health_with_model(self, loaded_app, client):
        assert client.get("/health").json()["model_loaded"] is True

    @pytest.mark.asyncio
    async def test_health_async(self, async_client):
        response = await async_client.get("/health")
        assert response.status_code == 200


@pytest.mark.api
class TestTranslateEndpoint:

    def test_translate_without_model_returns_503(self, client):
        response = client.post("/api/v1/translate", json={"sentences": ["w3 w4"]})
        assert response.status_code == 503
        assert response.json()["error"] == "ModelUnavailableError"

    def test_translate(self, loaded_app, client):
        # Given
        payload = {"sentences": ["w3 w4 w5", "w6 w7"], "precision": "int16"}

        # When
        response = client.post("/api/v1/translate", json=payload)

        # Then
        assert response.status_code == 200
        data = response.json()
        assert len(data["translations"]) == 2
        assert data["tokens"] == 5
        assert data["kernel_counters"]["gemm-i16"] > 0

    def test_translate_with_beam(self, loaded_app, client):
        response = client.post("/api/v1/translate", json={"sentences": ["w3 w4"], "beam": 2})
        assert response.status_code == 200

    def test_empty_sentence_list_rejected(self, client):
        response = client.post("/api/v1/translate", json={"sentences": []})
        assert response.status_code == 422

    def test_unknown_precision_rejected(self, client):
        response = client.post("/api/v1/translate", json={"sentences": ["w3"], "precision": "int4"})
        assert response.status_code == 422

    def test_blank_input_is_engine_error(self, loaded_app, client):
        response = client.post("/api/v1/translate", json={"sentences": [" "]})
        assert response.status_code == 400
        assert response.json()["error"] == "InputFormatError"

    def test_tuner_table_after_autotune(self, loaded_app, client):
        client.post("/api/v1/translate", json={"sentences": ["w3 w4 w5"], "precision": "autotune"})
        lines = client.get("/api/v1/tuner").json()["lines"]
        assert lines and all(line.split()[-1] in ("yes", "no") for line in lines)


@pytest.mark.api
class TestBenchEndpoints:

    def test_cost(self, client):
        response = client.post("/api/v1/bench/cost", json={"tokens": 62954, "seconds": 273.2, "usd_per_hour": 0.102})
        assert response.status_code == 200
        assert response.json()["tokens_per_usd_millions"] == pytest.approx(8.13, abs=0.005)

    def test_cost_rejects_zero_time(self, client):
        response = client.post("/api/v1/bench/cost", json={"tokens": 1, "seconds": 0, "usd_per_hour": 1.0})
        assert response.status_code == 422

    def test_report(self, client):
        payload = {
            "usd_per_hour": 1.0,
            "runs": [
                {"system": "slow", "size_mib": 238.0, "seconds": 20.0, "tokens": 1000, "quality": 25.0},
                {"system": "fast", "size_mib": 9.0, "seconds": 5.0, "tokens": 1000, "quality": 26.0},
            ],
        }
        response = client.post("/api/v1/bench/report", json=payload)
        assert response.status_code == 200
        data = response.json()
        assert [(r["system"], r["frontier"]) for r in data["rows"]] == [("fast", True), ("slow", False)]
        assert data["csv"].splitlines()[0].startswith("system,size_mib,time_s")


@pytest.mark.api
class TestDistillEndpoint:

    def test_select(self, client):
        payload = {"nbest": ["the cat", "the cat sat", "a dog"], "reference": "the cat sat"}
        response = client.post("/api/v1/distill/select", json=payload)
        assert response.status_code == 200
        data = response.json()
        assert data["index"] == 1 and data["hypothesis"] == "the cat sat"
        assert data["score"] == pytest.approx(1.0)


@pytest.mark.api
class TestModelSizeEndpoint:

    def test_base_preset(self, client):
        data = client.get("/api/v1/models/size", params={"preset": "base"}).json()
        assert data["parameters"] == 62570496
        assert data["size_mib"] == pytest.approx(238.69, abs=0.005)

    def test_explicit_widths(self, client):
        data = client.get("/api/v1/models/size", params={"emb_dim": 512, "ffn_dim": 2048}).json()
        assert data["parameters"] == 62570496

    def test_unknown_preset(self, client):
        response = client.get("/api/v1/models/size", params={"preset": "huge"})
        assert response.status_code == 400
