"""
Quantization & Integer GEMM
int16 / int8 양자화 스킴과 float 행렬곱을 대체하는 정수 행렬곱 커널

- int16: 2^10 고정소수점, 32-bit wrapping 누적
- int8: [-c, c] clip 후 [-127, 127] 선형 스케일, 인접 pair 단위 16-bit 포화 누적
- 두 정수 GEMM 모두 두 번째 피연산자를 전치된 형태(B^T, [n, k])로 받는다.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from core.exceptions import DimensionError, ParameterError

INT16_SCALE = 1024.0
INT16_LIMIT = 32767
INT8_LIMIT = 127
DEFAULT_INT8_CLIP = 2.0

_I16_MIN, _I16_MAX = -32768, 32767


@dataclass(frozen=True)
class Int16Scheme:
    """2^10 배율 고정소수점 스킴"""

    scale: float = INT16_SCALE

    def __post_init__(self):
        if self.scale != INT16_SCALE:
            raise ParameterError(f"int16 scheme scale is fixed at {INT16_SCALE}, got {self.scale}")

    @property
    def product_scale(self) -> float:
        return self.scale * self.scale

    @property
    def limit(self) -> int:
        return INT16_LIMIT


@dataclass(frozen=True)
class Int8Scheme:
    """clip-and-scale 스킴: [-clip, clip] → [-127, 127]"""

    clip: float = DEFAULT_INT8_CLIP

    def __post_init__(self):
        if not self.clip > 0:
            raise ParameterError(f"int8 clip must be positive, got {self.clip}")

    @property
    def scale(self) -> float:
        return INT8_LIMIT / self.clip

    @property
    def limit(self) -> int:
        return INT8_LIMIT


QuantScheme = Union[Int16Scheme, Int8Scheme]


@dataclass(frozen=True, eq=False)
class QuantizedTensor:
    """정수 코드와 해석에 필요한 스킴 메타데이터 (생성 후 불변)"""

    data: np.ndarray
    scheme: QuantScheme

    def __post_init__(self):
        expected = np.int16 if isinstance(self.scheme, Int16Scheme) else np.int8
        if self.data.dtype != expected:
            raise ParameterError(f"quantized buffer must be {np.dtype(expected)}, got {self.data.dtype}")
        if self.data.size and int(np.abs(self.data.astype(np.int32)).max()) > self.scheme.limit:
            raise ParameterError("quantized codes outside the scheme's representable range")
        self.data.setflags(write=False)

    @property
    def shape(self):
        return self.data.shape


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def clip(a: np.ndarray, c: float) -> np.ndarray:
    """out = min(c, max(-c, a))"""
    if not c > 0:
        raise ParameterError(f"clip range must be positive, got {c}")
    bound = np.float32(c)
    return np.minimum(bound, np.maximum(-bound, a.astype(np.float32, copy=False)))


def quantize_i16(a: np.ndarray) -> QuantizedTensor:
    """
    int16 양자화: saturate(round(a * 1024))

    ±32767 포화는 조용히 일어난다 (|a| > 32 근처). round-half-away-from-zero.
    """
    if a.dtype != np.float32:
        raise ParameterError(f"quantize_i16 expects float32, got {a.dtype}")
    scaled = _round_half_away(a.astype(np.float64) * INT16_SCALE)
    codes = np.clip(scaled, -INT16_LIMIT, INT16_LIMIT).astype(np.int16)
    return QuantizedTensor(codes, Int16Scheme())


def quantize_i8(a: np.ndarray, scheme: Int8Scheme = Int8Scheme()) -> QuantizedTensor:
    """int8 양자화: round(clip(a, c) * 127 / c)"""
    if a.dtype != np.float32:
        raise ParameterError(f"quantize_i8 expects float32, got {a.dtype}")
    clipped = clip(a, scheme.clip).astype(np.float64)
    scaled = _round_half_away(clipped * scheme.scale)
    codes = np.clip(scaled, -INT8_LIMIT, INT8_LIMIT).astype(np.int8)
    return QuantizedTensor(codes, scheme)


def dequantize(q: QuantizedTensor) -> np.ndarray:
    codes = q.data.astype(np.float64)
    if isinstance(q.scheme, Int16Scheme):
        return (codes / q.scheme.scale).astype(np.float32)
    return (codes * q.scheme.clip / INT8_LIMIT).astype(np.float32)


def _check_operands(aq: QuantizedTensor, bqt: QuantizedTensor, scheme_type, op: str):
    if not isinstance(aq.scheme, scheme_type) or not isinstance(bqt.scheme, scheme_type):
        raise ParameterError(f"{op}: both operands must use {scheme_type.__name__}")
    if aq.data.ndim != 2 or bqt.data.ndim != 2:
        raise DimensionError(f"{op}: operands must be rank 2, got {aq.shape} and {bqt.shape}")
    if aq.shape[1] != bqt.shape[1]:
        raise DimensionError(f"{op}: inner dimensions differ ({aq.shape} x {bqt.shape}^T)")


def wrap_int32(values: np.ndarray) -> np.ndarray:
    """int64 값을 2의 보수 32-bit로 wrap"""
    return ((values + 2**31) % 2**32 - 2**31).astype(np.int32)


def gemm_i16(aq: QuantizedTensor, bqt: QuantizedTensor) -> np.ndarray:
    """
    int16 행렬곱 A·(B^T)^T

    곱과 합은 32-bit 정수, 누적은 포화 없이 wrap (32-bit 포화 덧셈 명령이 없는 하드웨어 동작).
    큰 모델에서 누적기가 넘치면 결과는 의미가 없다. 최종 1/2^20 배는 float32.
    """
    _check_operands(aq, bqt, Int16Scheme, "gemm_i16")
    acc = aq.data.astype(np.int64) @ bqt.data.astype(np.int64).T
    return wrap_int32(acc).astype(np.float32) * np.float32(1.0 / aq.scheme.product_scale)


def gemm_i8(aq: QuantizedTensor, bqt: QuantizedTensor) -> np.ndarray:
    """
    int8 행렬곱, 16-bit 포화 누적

    k를 인접 pair로 묶어 p_j = sat16(a_2j*b_2j + a_2j+1*b_2j+1)을 만들고,
    acc = sat16(acc + p_j)를 j 오름차순으로 누적한다. 홀수 k는 0 열로 패딩.
    """
    _check_operands(aq, bqt, Int8Scheme, "gemm_i8")
    if aq.scheme != bqt.scheme:
        raise ParameterError(f"gemm_i8: operand schemes differ ({aq.scheme} vs {bqt.scheme})")

    a = aq.data.astype(np.int32)
    b = bqt.data.astype(np.int32)
    if a.shape[1] % 2:
        a = np.pad(a, ((0, 0), (0, 1)))
        b = np.pad(b, ((0, 0), (0, 1)))
    m, k = a.shape
    n = b.shape[0]

    pair_sums = np.einsum("ipc,jpc->ijp", a.reshape(m, k // 2, 2), b.reshape(n, k // 2, 2))
    pair_sums = np.clip(pair_sums, _I16_MIN, _I16_MAX)

    acc = np.zeros((m, n), dtype=np.int32)
    for j in range(k // 2):
        acc = np.clip(acc + pair_sums[:, :, j], _I16_MIN, _I16_MAX)

    unit = (aq.scheme.clip / INT8_LIMIT) ** 2
    return (acc.astype(np.float64) * unit).astype(np.float32)


def gemm_i8_wide(aq: QuantizedTensor, bqt: QuantizedTensor) -> np.ndarray:
    """gemm_i8와 같은 코드를 32-bit로 누적 (포화 영향 비교용)"""
    _check_operands(aq, bqt, Int8Scheme, "gemm_i8_wide")
    acc = aq.data.astype(np.int64) @ bqt.data.astype(np.int64).T
    unit = (aq.scheme.clip / INT8_LIMIT) ** 2
    return (acc.astype(np.float64) * unit).astype(np.float32)
