"""
Model Configuration & Parameters
Transformer / AAN 학생 모델 설정, 프리셋, 파라미터 개수 계산, 초기화 및 저장 형식

파라미터 컨테이너는 numpy .npz (이름 → float32 배열), 설정 파일은 key=value 텍스트.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ConfigError, DimensionError, ParameterError, VocabularyError
from engine.tensor import gemm_f32, transpose2d

logger = logging.getLogger("deskengine")

# 어휘 파일의 예약 줄 번호
EOS_ID = 0
UNK_ID = 1
PAD_ID = 2
RESERVED_TOKENS = ("</s>", "<unk>", "<pad>")

DEFAULT_VOCAB_SIZE = 36000
MIB = 2 ** 20

Params = Dict[str, np.ndarray]


class DecoderVariant(str, Enum):
    """디코더 self-attention 변형"""
    SELF_ATTENTION = "self-attention"
    AAN = "aan"


@dataclass(frozen=True)
class ModelConfig:
    emb_dim: int
    ffn_dim: int
    enc_layers: int = 6
    dec_layers: int = 6
    heads: int = 8
    vocab_size: int = DEFAULT_VOCAB_SIZE
    decoder_variant: DecoderVariant = DecoderVariant.SELF_ATTENTION
    aan_ffn_enabled: bool = True
    aan_gate_enabled: bool = True
    aan_ffn_dim: Optional[int] = None
    positional: bool = True

    def __post_init__(self):
        object.__setattr__(self, "decoder_variant", DecoderVariant(self.decoder_variant))
        if self.aan_ffn_dim is None:
            object.__setattr__(self, "aan_ffn_dim", self.emb_dim)
        widths = {
            "emb_dim": self.emb_dim, "ffn_dim": self.ffn_dim, "enc_layers": self.enc_layers,
            "dec_layers": self.dec_layers, "heads": self.heads, "vocab_size": self.vocab_size,
            "aan_ffn_dim": self.aan_ffn_dim,
        }
        for name, value in widths.items():
            if int(value) < 1:
                raise ParameterError(f"{name} must be >= 1, got {value}")
        if self.emb_dim % self.heads:
            raise ParameterError(f"emb_dim {self.emb_dim} is not divisible by {self.heads} heads")
        if self.vocab_size <= PAD_ID:
            raise ParameterError(f"vocab_size must leave room for the reserved ids, got {self.vocab_size}")

    @property
    def is_aan(self) -> bool:
        return self.decoder_variant is DecoderVariant.AAN


PRESETS: Dict[str, ModelConfig] = {
    "big": ModelConfig(emb_dim=1024, ffn_dim=4096, heads=16),
    "base": ModelConfig(emb_dim=512, ffn_dim=2048, heads=8),
    "small": ModelConfig(emb_dim=256, ffn_dim=2048, heads=8),
    "tiny-256": ModelConfig(emb_dim=256, ffn_dim=1536, heads=8),
    "tiny-192": ModelConfig(emb_dim=192, ffn_dim=1536, heads=8),
}


def preset(name: str, **overrides) -> ModelConfig:
    """프리셋 설정에 필드 덮어쓰기 (예: decoder_variant="aan", aan_gate_enabled=False)"""
    if name not in PRESETS:
        raise ParameterError(f"unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


# ----------------------------------------------------------------------
# 파라미터 shape / 개수
# ----------------------------------------------------------------------

def _attention_shapes(prefix: str, emb: int) -> Dict[str, Tuple[int, ...]]:
    shapes = {}
    for proj in ("q", "k", "v", "o"):
        shapes[f"{prefix}.w{proj}"] = (emb, emb)
        shapes[f"{prefix}.b{proj}"] = (emb,)
    return shapes


def _ffn_shapes(prefix: str, emb: int, hidden: int) -> Dict[str, Tuple[int, ...]]:
    return {
        f"{prefix}.w1": (emb, hidden),
        f"{prefix}.b1": (hidden,),
        f"{prefix}.w2": (hidden, emb),
        f"{prefix}.b2": (emb,),
    }


def _norm_shapes(prefix: str, emb: int) -> Dict[str, Tuple[int, ...]]:
    return {f"{prefix}.gamma": (emb,), f"{prefix}.beta": (emb,)}


def param_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """파라미터 이름 → shape (출력층은 embedding과 공유)"""
    emb = config.emb_dim
    shapes: Dict[str, Tuple[int, ...]] = {"embedding": (config.vocab_size, emb)}

    for layer in range(config.enc_layers):
        prefix = f"enc.{layer}"
        shapes.update(_attention_shapes(f"{prefix}.self", emb))
        shapes.update(_norm_shapes(f"{prefix}.self_ln", emb))
        shapes.update(_ffn_shapes(f"{prefix}.ffn", emb, config.ffn_dim))
        shapes.update(_norm_shapes(f"{prefix}.ffn_ln", emb))

    for layer in range(config.dec_layers):
        prefix = f"dec.{layer}"
        if config.is_aan:
            if config.aan_ffn_enabled:
                shapes.update(_ffn_shapes(f"{prefix}.aan.ffn", emb, config.aan_ffn_dim))
            if config.aan_gate_enabled:
                shapes[f"{prefix}.aan.gate.w"] = (2 * emb, 2 * emb)
                shapes[f"{prefix}.aan.gate.b"] = (2 * emb,)
        else:
            shapes.update(_attention_shapes(f"{prefix}.self", emb))
        shapes.update(_norm_shapes(f"{prefix}.self_ln", emb))
        shapes.update(_attention_shapes(f"{prefix}.ctx", emb))
        shapes.update(_norm_shapes(f"{prefix}.ctx_ln", emb))
        shapes.update(_ffn_shapes(f"{prefix}.ffn", emb, config.ffn_dim))
        shapes.update(_norm_shapes(f"{prefix}.ffn_ln", emb))
    return shapes


def param_count(config: ModelConfig) -> Tuple[int, float]:
    """(파라미터 수, float32 기준 MiB)"""
    count = sum(math.prod(shape) for shape in param_shapes(config).values())
    return count, count * 4 / MIB


# ----------------------------------------------------------------------
# 초기화 / 검증
# ----------------------------------------------------------------------

def init_params(config: ModelConfig, seed: int = 0) -> Params:
    """
    학습 없이 파이프라인을 돌리기 위한 무작위 파라미터

    행렬은 N(0, 1/fan_in), bias는 작은 잡음, layer norm gain은 1 / bias는 0.
    """
    rng = np.random.default_rng(seed)
    params: Params = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".gamma"):
            value = np.ones(shape)
        elif name.endswith(".beta"):
            value = np.zeros(shape)
        elif len(shape) == 1:
            value = rng.normal(0.0, 0.02, size=shape)
        else:
            value = rng.normal(0.0, 1.0 / math.sqrt(shape[-1] if name == "embedding" else shape[0]), size=shape)
        params[name] = value.astype(np.float32)
    return params


def check_params(config: ModelConfig, params: Params) -> None:
    expected = param_shapes(config)
    missing = sorted(set(expected) - set(params))
    if missing:
        raise ConfigError(f"parameter container is missing {len(missing)} entries, e.g. {missing[0]}")
    for name, shape in expected.items():
        value = params[name]
        if tuple(value.shape) != shape:
            raise DimensionError(f"parameter {name} has shape {tuple(value.shape)}, expected {shape}")
        if value.dtype != np.float32:
            raise ParameterError(f"parameter {name} must be float32, got {value.dtype}")


# ----------------------------------------------------------------------
# 출력층
# ----------------------------------------------------------------------

def output_logits(dec_out: np.ndarray, tied_embedding: np.ndarray, shortlist: Optional[Sequence[int]] = None) -> np.ndarray:
    """logit[j] = dot(dec_out, embedding[id_j]); shortlist가 없으면 전체 어휘"""
    vocab_size = tied_embedding.shape[0]
    if shortlist is None:
        rows = tied_embedding
    else:
        ids = np.asarray(shortlist, dtype=np.int64)
        if ids.ndim != 1 or ids.size == 0:
            raise VocabularyError("shortlist must be a non-empty id list")
        if ids.min() < 0 or ids.max() >= vocab_size:
            raise VocabularyError(f"shortlist ids outside [0, {vocab_size})")
        rows = tied_embedding[ids]
    single = dec_out.ndim == 1
    logits = gemm_f32(dec_out.reshape(1, -1) if single else dec_out, transpose2d(rows))
    return logits[0] if single else logits


def positional_encoding(positions: int, emb_dim: int) -> np.ndarray:
    """sinusoidal positional encoding [positions, emb_dim]"""
    pos = np.arange(positions, dtype=np.float64)[:, None]
    index = np.arange(emb_dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(index / 2.0) / emb_dim)
    encoding = np.where(index % 2 == 0, np.sin(angle), np.cos(angle))
    return encoding.astype(np.float32)


# ----------------------------------------------------------------------
# 저장 형식
# ----------------------------------------------------------------------

def save_params(params: Params, path: Path) -> None:
    with open(path, "wb") as handle:
        np.savez(handle, **params)


def load_params(path: Path) -> Params:
    try:
        with np.load(path, allow_pickle=False) as archive:
            params = {name: archive[name] for name in archive.files}
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read parameter container {path}: {e}") from e
    logger.info(f"loaded {len(params)} parameter arrays from {path}")
    return params


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def write_config(config: ModelConfig, path: Path) -> None:
    lines = []
    for key, value in asdict(config).items():
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_config(path: Path) -> ModelConfig:
    """
    key=value 설정 파일 파싱

    'layers'는 enc_layers / dec_layers를 함께 설정하고, 'aan_ffn' / 'aan_gate'는 *_enabled의 별칭이다.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read model config {path}: {e}") from e

    aliases = {"aan_ffn": "aan_ffn_enabled", "aan_gate": "aan_gate_enabled"}
    known = {f.name for f in fields(ModelConfig)}
    values: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value, got '{raw}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "layers":
            values["enc_layers"] = values["dec_layers"] = _parse_int(path, number, value)
            continue
        key = aliases.get(key, key)
        if key not in known:
            raise ConfigError(f"{path}:{number}: unknown config key '{key}'")
        if key == "decoder_variant":
            values[key] = value
        elif key in ("aan_ffn_enabled", "aan_gate_enabled", "positional"):
            if value.lower() not in _BOOL_WORDS:
                raise ConfigError(f"{path}:{number}: '{value}' is not a boolean")
            values[key] = _BOOL_WORDS[value.lower()]
        elif key == "aan_ffn_dim" and value.lower() in ("", "none"):
            values[key] = None
        else:
            values[key] = _parse_int(path, number, value)

    for required in ("emb_dim", "ffn_dim"):
        if required not in values:
            raise ConfigError(f"{path}: missing required key '{required}'")
    try:
        return ModelConfig(**values)
    except (ParameterError, ValueError) as e:
        raise ConfigError(f"{path}: invalid model config: {e}") from e


def _parse_int(path, number: int, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{path}:{number}: '{value}' is not an integer") from None
