"""
모델 크기 API 엔드포인트
프리셋 또는 명시적 너비로 파라미터 수 / MiB 계산
"""

from typing import Optional

from fastapi import APIRouter, Query

from engine.model import DEFAULT_VOCAB_SIZE, ModelConfig, param_count, preset

from ..schemas.translation import ModelSizeResponse

router = APIRouter()


@router.get("/size", response_model=ModelSizeResponse, summary="모델 크기 계산")
async def model_size(
    preset_name: Optional[str] = Query(default=None, alias="preset", description="big, base, small, tiny-256, tiny-192"),
    vocab_size: int = Query(default=DEFAULT_VOCAB_SIZE, ge=3),
    emb_dim: Optional[int] = Query(default=None, ge=1),
    ffn_dim: Optional[int] = Query(default=None, ge=1),
    decoder_variant: str = Query(default="self-attention", pattern="^(self-attention|aan)$"),
    aan_ffn: bool = True,
    aan_gate: bool = True,
) -> ModelSizeResponse:
    overrides = dict(vocab_size=vocab_size, decoder_variant=decoder_variant,
                     aan_ffn_enabled=aan_ffn, aan_gate_enabled=aan_gate)
    if preset_name:
        config = preset(preset_name, **overrides)
    else:
        config = ModelConfig(emb_dim=emb_dim or 512, ffn_dim=ffn_dim or 2048, **overrides)
    parameters, size_mib = param_count(config)
    return ModelSizeResponse(preset=preset_name, parameters=parameters, size_mib=size_mib)
