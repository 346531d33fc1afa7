"""
Tensor Core
row-major dense 텐서, float 기준 행렬곱, elementwise / 정규화 primitive

텐서는 numpy ndarray 그대로 사용하고, 이 모듈은 shape / dtype 계약만 강제한다.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from core.exceptions import DimensionError, ParameterError

Shape = Tuple[int, ...]

SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.int32), np.dtype(np.int16), np.dtype(np.int8))

LAYER_NORM_EPS = 1e-6


def make_shape(dims: Sequence[int]) -> Shape:
    """extent 검증 후 shape 튜플 반환"""
    shape = tuple(int(d) for d in dims)
    if not shape or any(d < 1 for d in shape):
        raise DimensionError(f"invalid shape {tuple(dims)}: every extent must be >= 1")
    return shape


def element_count(shape: Shape) -> int:
    return math.prod(shape)


def as_tensor(data, dtype=np.float32) -> np.ndarray:
    """리스트/배열을 지원 dtype의 연속 메모리 텐서로 변환"""
    array = np.ascontiguousarray(np.asarray(data, dtype=dtype))
    if array.dtype not in SUPPORTED_DTYPES:
        raise ParameterError(f"unsupported dtype {array.dtype}")
    make_shape(array.shape)
    return array


def _require_rank(a: np.ndarray, rank: int, op: str) -> None:
    if a.ndim != rank:
        raise DimensionError(f"{op}: expected rank {rank}, got shape {a.shape}")


def _require_float(a: np.ndarray, op: str) -> None:
    if a.dtype != np.float32:
        raise ParameterError(f"{op}: expected float32, got {a.dtype}")


def gemm_f32(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    float32 기준 행렬곱 C = A·B

    k 오름차순으로 외적을 누적하므로 C[i,j]는 항상 같은 순서로 합산된다
    (BLAS 결과와는 비트 단위로 다를 수 있음).
    """
    _require_rank(a, 2, "gemm_f32")
    _require_rank(b, 2, "gemm_f32")
    _require_float(a, "gemm_f32")
    _require_float(b, "gemm_f32")
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise DimensionError(f"gemm_f32: inner dimensions differ ({a.shape} x {b.shape})")

    out = np.zeros((m, n), dtype=np.float32)
    for kk in range(k):
        out += np.multiply.outer(a[:, kk], b[kk, :])
    return out


def transpose2d(a: np.ndarray) -> np.ndarray:
    _require_rank(a, 2, "transpose2d")
    return np.ascontiguousarray(a.T)


def softmax_rows(a: np.ndarray) -> np.ndarray:
    """행 단위 softmax (max-subtraction)"""
    _require_rank(a, 2, "softmax_rows")
    _require_float(a, "softmax_rows")
    return softmax_last_axis(a)


def softmax_last_axis(x: np.ndarray) -> np.ndarray:
    shifted = x.astype(np.float64) - x.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return (weights / weights.sum(axis=-1, keepdims=True)).astype(np.float32)


def log_softmax_rows(a: np.ndarray) -> np.ndarray:
    """beam 점수 누적용 log-softmax (float64 반환)"""
    _require_rank(a, 2, "log_softmax_rows")
    x = a.astype(np.float64)
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x.astype(np.float64))).astype(np.float32)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = LAYER_NORM_EPS) -> np.ndarray:
    """마지막 축 기준 layer normalization"""
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise DimensionError(f"layer_norm: gain/bias {gamma.shape} do not match width {x.shape[-1]}")
    values = x.astype(np.float64)
    mean = values.mean(axis=-1, keepdims=True)
    var = ((values - mean) ** 2).mean(axis=-1, keepdims=True)
    normed = (values - mean) / np.sqrt(var + eps)
    return (normed * gamma + beta).astype(np.float32)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """동일 shape 덧셈, 또는 마지막 축 bias 벡터 덧셈"""
    if a.shape != b.shape and not (b.ndim == 1 and b.shape[0] == a.shape[-1]):
        raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")
    return (a + b).astype(np.float32, copy=False)


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    return a * b


def scalar_mul(a: np.ndarray, scalar: float) -> np.ndarray:
    return (a * np.float32(scalar)).astype(np.float32, copy=False)


def attention(q: np.ndarray, k: np.ndarray, v: np.ndarray, heads: int, mask: np.ndarray = None) -> np.ndarray:
    """
    multi-head scaled dot-product attention

    q: [R, Tq, d], k / v: [R, Tk, d], mask: additive [R, 1, Tk] 또는 [R, Tq, Tk] (0 / -inf)
    """
    if q.ndim != 3 or k.shape != v.shape or k.ndim != 3 or q.shape[0] != k.shape[0] or q.shape[2] != k.shape[2]:
        raise DimensionError(f"attention: incompatible q {q.shape}, k {k.shape}, v {v.shape}")
    rows, tq, width = q.shape
    tk = k.shape[1]
    if heads < 1 or width % heads:
        raise ParameterError(f"attention: width {width} is not divisible by {heads} heads")
    head_dim = width // heads

    def split(x, steps):
        return x.astype(np.float64).reshape(rows, steps, heads, head_dim).transpose(0, 2, 1, 3)

    scores = split(q, tq) @ split(k, tk).transpose(0, 1, 3, 2) / math.sqrt(head_dim)
    if mask is not None:
        if mask.ndim != 3 or mask.shape[0] != rows or mask.shape[2] != tk or mask.shape[1] not in (1, tq):
            raise DimensionError(f"attention: mask {mask.shape} does not fit scores [{rows}, {tq}, {tk}]")
        scores = scores + mask.astype(np.float64)[:, None, :, :]
    scores = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=-1, keepdims=True)
    context = weights @ split(v, tk)
    return context.transpose(0, 2, 1, 3).reshape(rows, tq, width).astype(np.float32)
