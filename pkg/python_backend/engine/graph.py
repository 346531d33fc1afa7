"""
Computation Graph
append-only 동적 계산 그래프: 상수 노드 전파와 메모이제이션

- param / constant-literal 노드는 상수, input 노드는 비상수
- 자식이 모두 상수인 노드는 상수이며, 첫 forward에서 한 번만 계산되어 memo에 저장된다
- 커널 호출 수(op별, 노드별)와 scope별 multiply-accumulate 수를 기록한다
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionError, FeedError, GraphError, ParameterError, VocabularyError
from engine import tensor
from engine.autotune import TunerState, tune_key, tuned_execute
from engine.quant import (
    Int8Scheme,
    Int16Scheme,
    QuantScheme,
    clip,
    gemm_i8,
    gemm_i16,
    quantize_i8,
    quantize_i16,
)
from engine.tensor import Shape, element_count, make_shape

logger = logging.getLogger(__name__)


class Op(str, Enum):
    """노드 연산 태그"""
    PARAM = "param"
    INPUT = "input"
    LITERAL = "constant-literal"
    TRANSPOSE = "transpose"
    QUANTIZE_I16 = "quantize-i16"
    QUANTIZE_I8 = "quantize-i8"
    CLIP = "clip"
    GEMM_F32 = "gemm-f32"
    GEMM_I16 = "gemm-i16"
    GEMM_I8 = "gemm-i8"
    TUNED_GEMM = "tuned-gemm"
    ADD = "add"
    MUL = "mul"
    RELU = "relu"
    SIGMOID = "sigmoid"
    LAYER_NORM = "layer-norm"
    SOFTMAX = "softmax"
    CONCAT = "concat"
    SLICE = "slice"
    SCALAR_MUL = "scalar-mul"
    GATHER = "gather"
    RESHAPE = "reshape"
    ATTENTION = "attention"


class Precision(str, Enum):
    """정수 행렬곱 정밀도"""
    I16 = "i16"
    I8 = "i8"


_QUANTIZE_OPS = {Precision.I16: Op.QUANTIZE_I16, Precision.I8: Op.QUANTIZE_I8}
_GEMM_OPS = {Precision.I16: Op.GEMM_I16, Precision.I8: Op.GEMM_I8}

TUNED_ALTERNATIVES = ("f32", "i16")


@dataclass(eq=False)
class Node:
    id: int
    op: Op
    children: Tuple[int, ...]
    payload: Dict[str, Any]
    shape: Shape
    is_constant: bool = False
    scope: Optional[str] = None
    memo: Any = None
    # tuned-gemm 전용: (alternative id, 준비된 보조 노드 id들)
    alternatives: Tuple[Tuple[str, Tuple[int, ...]], ...] = field(default_factory=tuple)


def mark_constness(graph: "Graph", node: Node) -> bool:
    """param / literal은 상수, input은 비상수, 그 외에는 자식이 모두 상수일 때만 상수"""
    if node.op in (Op.PARAM, Op.LITERAL):
        return True
    if node.op is Op.INPUT:
        return False
    return all(graph.node(c).is_constant for c in node.children)


class Graph:
    """
    inference 전용 계산 그래프

    노드 id는 단조 증가하며 자식은 항상 부모보다 작은 id를 가진다 (DAG).
    rollback()은 체크포인트 이후 노드를 버리는 수명 관리용이며 이미 채워진 memo는 건드리지 않는다.
    """

    def __init__(self, memoize: bool = True, tuner: Optional[TunerState] = None, name: str = "graph"):
        self.name = name
        self.mode = "inference"
        self.memoize = memoize
        self.tuner = tuner if tuner is not None else TunerState()
        self.nodes: Dict[int, Node] = {}
        self.kernel_counters: Counter = Counter()
        self.node_counters: Counter = Counter()
        self.mac_counters: Counter = Counter()
        self.prepared: Dict[Tuple[Any, ...], int] = {}
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise GraphError(f"unknown node id {node_id} in {self.name}") from None

    def shape_of(self, node_id: int) -> Shape:
        return self.node(node_id).shape

    # ------------------------------------------------------------------
    # 구성
    # ------------------------------------------------------------------

    def add_node(self,
                 op: Op,
                 children: Sequence[int] = (),
                 payload: Optional[Mapping[str, Any]] = None,
                 scope: Optional[str] = None,
                 alternatives: Sequence[Tuple[str, Tuple[int, ...]]] = ()) -> int:
        """노드 추가 후 새 id 반환 (shape 추론과 상수성 판정은 생성 시점에 수행)"""
        op = Op(op)
        children = tuple(int(c) for c in children)
        for child in children:
            self.node(child)
        payload = dict(payload or {})

        node = Node(
            id=self._next_id,
            op=op,
            children=children,
            payload=payload,
            shape=_infer_shape(self, op, children, payload),
            scope=scope,
            alternatives=tuple(alternatives),
        )
        node.is_constant = mark_constness(self, node)
        self.nodes[node.id] = node
        self._next_id += 1
        return node.id

    def param(self, value: np.ndarray, name: str = "") -> int:
        return self.add_node(Op.PARAM, payload={"value": value, "name": name})

    def literal(self, value: np.ndarray) -> int:
        return self.add_node(Op.LITERAL, payload={"value": value})

    def input(self, shape: Sequence[int], name: str = "") -> int:
        return self.add_node(Op.INPUT, payload={"shape": shape, "name": name})

    def checkpoint(self) -> int:
        return self._next_id

    def rollback(self, mark: int) -> None:
        """mark 이후에 추가된 노드 제거"""
        dropped = [i for i in self.nodes if i >= mark]
        for node_id in dropped:
            del self.nodes[node_id]
        logger.debug(f"{self.name}: rolled back {len(dropped)} nodes to {mark}")
        self.prepared = {k: v for k, v in self.prepared.items() if v < mark and k[0] < mark}

    # ------------------------------------------------------------------
    # 실행
    # ------------------------------------------------------------------

    def forward(self,
                feeds: Optional[Mapping[int, np.ndarray]] = None,
                outputs: Optional[Iterable[int]] = None) -> Dict[int, Any]:
        """
        필요한 노드를 위상 순서로 평가해 {node id: value} 반환

        outputs가 없으면 모든 노드를 평가한다. memo가 채워진 상수 노드는 다시 계산하지 않는다.
        """
        feeds = dict(feeds or {})
        targets = list(self.nodes) if outputs is None else [int(o) for o in outputs]
        values: Dict[int, Any] = {}
        self._evaluate(targets, feeds, values)
        return {node_id: values[node_id] for node_id in targets}

    def _cached(self, node: Node) -> Any:
        if self.memoize and node.is_constant:
            return node.memo
        return None

    def _evaluate(self, targets: Sequence[int], feeds: Dict[int, Any], values: Dict[int, Any]) -> None:
        needed = set()
        stack = list(targets)
        while stack:
            node_id = stack.pop()
            if node_id in needed or node_id in values:
                continue
            node = self.node(node_id)
            needed.add(node_id)
            if self._cached(node) is None:
                stack.extend(node.children)

        for node_id in sorted(needed):
            node = self.nodes[node_id]
            cached = self._cached(node)
            if cached is not None:
                values[node_id] = cached
                continue
            values[node_id] = self._run(node, feeds, values)
            if node.is_constant and self.memoize:
                node.memo = values[node_id]

    def _run(self, node: Node, feeds: Dict[int, Any], values: Dict[int, Any]) -> Any:
        if node.op is Op.INPUT:
            if node.id not in feeds:
                raise FeedError(f"missing feed for input node {node.id} ({node.payload.get('name', '')})")
            value = np.asarray(feeds[node.id], dtype=np.float32)
            if value.shape != node.shape:
                raise DimensionError(f"feed for node {node.id} has shape {value.shape}, expected {node.shape}")
            return value

        args = [values[c] for c in node.children]
        if node.op is Op.TUNED_GEMM:
            result = self._tuned_gemm(node, args, feeds, values)
        else:
            result = _KERNELS[node.op](node, args)
        self.kernel_counters[node.op.value] += 1
        self.node_counters[node.id] += 1
        if node.scope:
            self.mac_counters[node.scope] += _mac_cost(node, args)
        return result

    def _count(self, op: Op) -> None:
        self.kernel_counters[op.value] += 1

    def _tuned_gemm(self, node: Node, args: List[Any], feeds: Dict[int, Any], values: Dict[int, Any]) -> np.ndarray:
        a, b = args
        key = tune_key([a.shape, b.shape], [alt_id for alt_id, _ in node.alternatives])
        alternatives = [
            (alt_id, partial(self._run_alternative, alt_id, a, b, extra, feeds, values))
            for alt_id, extra in node.alternatives
        ]
        return tuned_execute(self.tuner, key, alternatives)

    def _run_alternative(self, alt_id: str, a: np.ndarray, b: np.ndarray, extra: Tuple[int, ...],
                         feeds: Dict[int, Any], values: Dict[int, Any]) -> np.ndarray:
        if alt_id == "f32":
            self._count(Op.GEMM_F32)
            return tensor.gemm_f32(a, b)
        # 준비된 B^T 양자화 노드는 memo를 거쳐 지연 평가되므로 memo가 꺼져 있으면 측정 시간에 포함된다
        self._evaluate(list(extra), feeds, values)
        rhs = values[extra[0]]
        if alt_id == "i16":
            self._count(Op.QUANTIZE_I16)
            self._count(Op.GEMM_I16)
            return gemm_i16(quantize_i16(a), rhs)
        if alt_id == "i8":
            self._count(Op.QUANTIZE_I8)
            self._count(Op.GEMM_I8)
            return gemm_i8(quantize_i8(a, rhs.scheme), rhs)
        raise ParameterError(f"unknown tuned-gemm alternative '{alt_id}'")


# ----------------------------------------------------------------------
# shape 추론
# ----------------------------------------------------------------------

def _require_rank(op: Op, shape: Shape, rank: int) -> None:
    if len(shape) != rank:
        raise DimensionError(f"{op.value}: expected rank {rank}, got {shape}")


def _infer_shape(graph: Graph, op: Op, children: Tuple[int, ...], payload: Dict[str, Any]) -> Shape:
    shapes = [graph.node(c).shape for c in children]

    if op in (Op.PARAM, Op.LITERAL):
        if "value" not in payload:
            raise GraphError(f"{op.value} node needs a value")
        return make_shape(np.shape(payload["value"]))
    if op is Op.INPUT:
        return make_shape(payload["shape"])

    arity = {
        Op.TRANSPOSE: 1, Op.QUANTIZE_I16: 1, Op.QUANTIZE_I8: 1, Op.CLIP: 1, Op.RELU: 1, Op.SIGMOID: 1,
        Op.SOFTMAX: 1, Op.SCALAR_MUL: 1, Op.GATHER: 1, Op.RESHAPE: 1, Op.SLICE: 1,
        Op.GEMM_F32: 2, Op.GEMM_I16: 2, Op.GEMM_I8: 2, Op.TUNED_GEMM: 2, Op.ADD: 2, Op.MUL: 2,
        Op.LAYER_NORM: 3,
    }
    if op in arity and len(children) != arity[op]:
        raise GraphError(f"{op.value} takes {arity[op]} children, got {len(children)}")

    if op is Op.TRANSPOSE:
        _require_rank(op, shapes[0], 2)
        return shapes[0][::-1]
    if op is Op.CLIP:
        if not payload.get("c", 0) > 0:
            raise ParameterError(f"clip range must be positive, got {payload.get('c')}")
        return shapes[0]
    if op is Op.QUANTIZE_I8:
        payload.setdefault("scheme", Int8Scheme())
        return shapes[0]
    if op in (Op.QUANTIZE_I16, Op.RELU, Op.SIGMOID, Op.SOFTMAX):
        return shapes[0]
    if op is Op.SCALAR_MUL:
        payload["scalar"] = float(payload.get("scalar", 1.0))
        return shapes[0]
    if op in (Op.GEMM_F32, Op.TUNED_GEMM):
        _require_rank(op, shapes[0], 2)
        _require_rank(op, shapes[1], 2)
        if shapes[0][1] != shapes[1][0]:
            raise DimensionError(f"{op.value}: inner dimensions differ ({shapes[0]} x {shapes[1]})")
        return (shapes[0][0], shapes[1][1])
    if op in (Op.GEMM_I16, Op.GEMM_I8):
        expected = Op.QUANTIZE_I16 if op is Op.GEMM_I16 else Op.QUANTIZE_I8
        if any(graph.node(c).op is not expected for c in children):
            raise GraphError(f"{op.value} operands must be {expected.value} nodes")
        if shapes[0][1] != shapes[1][1]:
            raise DimensionError(f"{op.value}: inner dimensions differ ({shapes[0]} x {shapes[1]}^T)")
        return (shapes[0][0], shapes[1][0])
    if op is Op.ADD:
        a, b = shapes
        if a != b and not (len(b) == 1 and b[0] == a[-1]):
            raise DimensionError(f"add: incompatible shapes {a} and {b}")
        return a
    if op is Op.MUL:
        if shapes[0] != shapes[1]:
            raise DimensionError(f"mul: incompatible shapes {shapes[0]} and {shapes[1]}")
        return shapes[0]
    if op is Op.LAYER_NORM:
        width = shapes[0][-1]
        if shapes[1] != (width,) or shapes[2] != (width,):
            raise DimensionError(f"layer-norm: gain/bias {shapes[1]} do not match width {width}")
        return shapes[0]
    if op is Op.CONCAT:
        if not children:
            raise GraphError("concat needs at least one child")
        axis = int(payload.get("axis", 0))
        base = list(shapes[0])
        for shape in shapes[1:]:
            if len(shape) != len(base) or any(s != t for i, (s, t) in enumerate(zip(shape, base)) if i != axis):
                raise DimensionError(f"concat: shapes {shapes} disagree off axis {axis}")
        base[axis] = sum(s[axis] for s in shapes)
        payload["axis"] = axis
        return tuple(base)
    if op is Op.SLICE:
        axis, start, stop = int(payload["axis"]), int(payload["start"]), int(payload["stop"])
        if not 0 <= start < stop <= shapes[0][axis]:
            raise DimensionError(f"slice [{start}:{stop}] out of range for axis {axis} of {shapes[0]}")
        sliced = list(shapes[0])
        sliced[axis] = stop - start
        payload.update(axis=axis, start=start, stop=stop)
        return tuple(sliced)
    if op is Op.GATHER:
        _require_rank(op, shapes[0], 2)
        ids = np.asarray(payload["ids"], dtype=np.int64)
        if ids.ndim != 1 or ids.size == 0:
            raise DimensionError("gather ids must be a non-empty vector")
        if ids.min() < 0 or ids.max() >= shapes[0][0]:
            raise VocabularyError(f"gather ids outside [0, {shapes[0][0]})")
        payload["ids"] = ids
        return (int(ids.size), shapes[0][1])
    if op is Op.RESHAPE:
        target = make_shape(payload["shape"])
        if element_count(target) != element_count(shapes[0]):
            raise DimensionError(f"reshape: cannot view {shapes[0]} as {target}")
        payload["shape"] = target
        return target
    if op is Op.ATTENTION:
        if len(children) not in (3, 4):
            raise GraphError("attention takes q, k, v and an optional mask")
        q, k, v = shapes[:3]
        if len(q) != 3 or k != v or len(k) != 3 or q[0] != k[0] or q[2] != k[2]:
            raise DimensionError(f"attention: incompatible q {q}, k {k}, v {v}")
        heads = int(payload.get("heads", 1))
        if heads < 1 or q[2] % heads:
            raise ParameterError(f"attention: width {q[2]} is not divisible by {heads} heads")
        if len(children) == 4:
            mask = shapes[3]
            if len(mask) != 3 or mask[0] != q[0] or mask[2] != k[1] or mask[1] not in (1, q[1]):
                raise DimensionError(f"attention: mask {mask} does not fit scores {(q[0], q[1], k[1])}")
        payload["heads"] = heads
        return q
    raise GraphError(f"no shape rule for {op.value}")


# ----------------------------------------------------------------------
# 커널
# ----------------------------------------------------------------------

def _slice(node: Node, args: List[Any]) -> np.ndarray:
    index = [slice(None)] * args[0].ndim
    index[node.payload["axis"]] = slice(node.payload["start"], node.payload["stop"])
    return np.ascontiguousarray(args[0][tuple(index)])


def _softmax(node: Node, args: List[Any]) -> np.ndarray:
    if args[0].ndim == 2:
        return tensor.softmax_rows(args[0])
    return tensor.softmax_last_axis(args[0])


_KERNELS: Dict[Op, Callable[[Node, List[Any]], Any]] = {
    Op.PARAM: lambda node, args: node.payload["value"],
    Op.LITERAL: lambda node, args: node.payload["value"],
    Op.TRANSPOSE: lambda node, args: tensor.transpose2d(args[0]),
    Op.QUANTIZE_I16: lambda node, args: quantize_i16(args[0]),
    Op.QUANTIZE_I8: lambda node, args: quantize_i8(args[0], node.payload["scheme"]),
    Op.CLIP: lambda node, args: clip(args[0], node.payload["c"]),
    Op.GEMM_F32: lambda node, args: tensor.gemm_f32(args[0], args[1]),
    Op.GEMM_I16: lambda node, args: gemm_i16(args[0], args[1]),
    Op.GEMM_I8: lambda node, args: gemm_i8(args[0], args[1]),
    Op.ADD: lambda node, args: tensor.add(args[0], args[1]),
    Op.MUL: lambda node, args: tensor.multiply(args[0], args[1]),
    Op.RELU: lambda node, args: tensor.relu(args[0]),
    Op.SIGMOID: lambda node, args: tensor.sigmoid(args[0]),
    Op.LAYER_NORM: lambda node, args: tensor.layer_norm(args[0], args[1], args[2]),
    Op.SOFTMAX: _softmax,
    Op.CONCAT: lambda node, args: np.concatenate(args, axis=node.payload["axis"]),
    Op.SLICE: _slice,
    Op.SCALAR_MUL: lambda node, args: tensor.scalar_mul(args[0], node.payload["scalar"]),
    Op.GATHER: lambda node, args: np.ascontiguousarray(args[0][node.payload["ids"]]),
    Op.RESHAPE: lambda node, args: args[0].reshape(node.payload["shape"]),
    Op.ATTENTION: lambda node, args: tensor.attention(
        args[0], args[1], args[2], node.payload["heads"], args[3] if len(args) == 4 else None),
}


def _mac_cost(node: Node, args: List[Any]) -> int:
    """scope 회계용 multiply-accumulate 수"""
    if node.op in (Op.GEMM_F32, Op.TUNED_GEMM):
        m, k = args[0].shape
        return m * k * args[1].shape[1]
    if node.op in (Op.GEMM_I16, Op.GEMM_I8):
        m, k = args[0].shape
        return m * k * args[1].shape[0]
    if node.op is Op.ATTENTION:
        rows, tq, width = args[0].shape
        return 2 * rows * tq * args[1].shape[1] * width
    return element_count(node.shape)


# ----------------------------------------------------------------------
# 정수 행렬곱 서브그래프
# ----------------------------------------------------------------------

def _scheme_for(precision: Precision, scheme: Optional[QuantScheme]) -> QuantScheme:
    if precision is Precision.I16:
        return Int16Scheme()
    if scheme is None:
        return Int8Scheme()
    if not isinstance(scheme, Int8Scheme):
        raise ParameterError(f"i8 precision needs an Int8Scheme, got {scheme}")
    return scheme


def prepare_operand(graph: Graph, b: int, precision: Precision, scheme: Optional[QuantScheme] = None) -> int:
    """
    quantize(transpose(B)) 노드 반환

    B가 상수면 같은 (B, precision, scheme)에 대해 이미 만든 노드를 재사용한다.
    """
    precision = Precision(precision)
    scheme = _scheme_for(precision, scheme)
    key = (b, precision.value, scheme)
    if key in graph.prepared:
        return graph.prepared[key]

    transposed = graph.add_node(Op.TRANSPOSE, [b])
    payload = {"scheme": scheme} if precision is Precision.I8 else {}
    quantized = graph.add_node(_QUANTIZE_OPS[precision], [transposed], payload)
    if graph.node(b).is_constant:
        graph.prepared[key] = quantized
    return quantized


def dot_int(graph: Graph, a: int, b: int, precision: Precision, scheme: Optional[QuantScheme] = None) -> int:
    """A[m,k]·B[k,n]을 dot_int(quantize(A), quantize(transpose(B)))로 대체하는 서브그래프"""
    precision = Precision(precision)
    a_shape, b_shape = graph.shape_of(a), graph.shape_of(b)
    if len(a_shape) != 2 or len(b_shape) != 2 or a_shape[1] != b_shape[0]:
        raise GraphError(f"dot_int: cannot multiply {a_shape} by {b_shape}")
    scheme = _scheme_for(precision, scheme)

    rhs = prepare_operand(graph, b, precision, scheme)
    payload = {"scheme": scheme} if precision is Precision.I8 else {}
    lhs = graph.add_node(_QUANTIZE_OPS[precision], [a], payload)
    return graph.add_node(_GEMM_OPS[precision], [lhs, rhs])


def tuned_gemm(graph: Graph, a: int, b: int, alternatives: Sequence[str] = TUNED_ALTERNATIVES,
               scheme: Optional[Int8Scheme] = None, scope: Optional[str] = None) -> int:
    """실행 시점에 auto-tuner가 float / 정수 커널 중 하나를 고르는 행렬곱 노드"""
    if not alternatives:
        raise ParameterError("tuned_gemm needs at least one alternative")
    resolved = []
    for alt_id in alternatives:
        if alt_id == "f32":
            resolved.append((alt_id, ()))
        elif alt_id in (Precision.I16.value, Precision.I8.value):
            resolved.append((alt_id, (prepare_operand(graph, b, Precision(alt_id), scheme),)))
        else:
            raise ParameterError(f"unknown tuned-gemm alternative '{alt_id}'")
    return graph.add_node(Op.TUNED_GEMM, [a, b], scope=scope, alternatives=resolved)
