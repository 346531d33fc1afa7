"""
Transformer Executor
계산 그래프 위에서 동작하는 encoder / 증분 decoder (self-attention 또는 AAN)

- 파라미터 노드와 가중치 전처리(transpose, quantize) 노드는 그래프 앞부분에 한 번 만들어 memo로 재사용
- 스텝마다 만드는 노드는 체크포인트 이후에 쌓였다가 다음 스텝 전에 rollback
- 배치는 행(row) 차원으로 접어서 [R * T, emb] 2차원 행렬곱으로 계산
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import DimensionError, StateError, VocabularyError
from engine.autotune import TunerState
from engine.graph import Graph, Op, Precision, dot_int, prepare_operand, tuned_gemm
from engine.model import (
    DecoderVariant,
    ModelConfig,
    PAD_ID,
    Params,
    check_params,
    positional_encoding,
)
from engine.quant import DEFAULT_INT8_CLIP, Int8Scheme

logger = logging.getLogger("deskengine")

NEG_INF = np.float32(-np.inf)


class Regime(str, Enum):
    """행렬곱 정밀도 모드"""
    FLOAT32 = "float32"
    INT16 = "int16"
    INT8 = "int8"
    AUTOTUNE = "autotune"


# ----------------------------------------------------------------------
# 디코더 상태
# ----------------------------------------------------------------------

@dataclass
class SelfAttnState:
    """레이어별 key / value 캐시 [R, t, emb] (t에 비례해 증가)"""

    rows: int
    keys: List[Optional[np.ndarray]]
    values: List[Optional[np.ndarray]]
    t: int = 0
    variant: DecoderVariant = field(default=DecoderVariant.SELF_ATTENTION, init=False)

    def size(self) -> int:
        return sum(c.size for c in self.keys + self.values if c is not None)

    def select_rows(self, rows: Sequence[int]) -> "SelfAttnState":
        index = np.asarray(rows, dtype=np.int64)
        return SelfAttnState(
            rows=len(index),
            keys=[None if c is None else c[index] for c in self.keys],
            values=[None if c is None else c[index] for c in self.values],
            t=self.t,
        )


@dataclass
class AANState:
    """레이어별 running sum [R, emb] (t와 무관한 고정 크기)"""

    rows: int
    running_sum: List[np.ndarray]
    t: int = 0
    variant: DecoderVariant = field(default=DecoderVariant.AAN, init=False)

    def size(self) -> int:
        return sum(s.size for s in self.running_sum)

    def select_rows(self, rows: Sequence[int]) -> "AANState":
        index = np.asarray(rows, dtype=np.int64)
        return AANState(rows=len(index), running_sum=[s[index] for s in self.running_sum], t=self.t)


DecoderState = Union[SelfAttnState, AANState]


def initial_state(config: ModelConfig, rows: int = 1) -> DecoderState:
    if config.is_aan:
        sums = [np.zeros((rows, config.emb_dim), dtype=np.float32) for _ in range(config.dec_layers)]
        return AANState(rows=rows, running_sum=sums)
    return SelfAttnState(rows=rows, keys=[None] * config.dec_layers, values=[None] * config.dec_layers)


@dataclass
class EncodedSource:
    """encoder 출력과 디코더 레이어별 cross-attention key / value"""

    output: np.ndarray
    mask: np.ndarray
    keys: List[np.ndarray]
    values: List[np.ndarray]
    lengths: List[int]

    @property
    def rows(self) -> int:
        return self.output.shape[0]

    def select_rows(self, rows: Sequence[int]) -> "EncodedSource":
        index = np.asarray(rows, dtype=np.int64)
        return EncodedSource(
            output=self.output[index],
            mask=self.mask[index],
            keys=[k[index] for k in self.keys],
            values=[v[index] for v in self.values],
            lengths=[self.lengths[i] for i in index],
        )


@dataclass
class StepResult:
    logits: np.ndarray
    state: DecoderState
    hidden: np.ndarray
    block_outputs: List[np.ndarray]


def average_matrix(steps: int) -> np.ndarray:
    """행 t가 앞 t개 위치에 1/t를 갖는 하삼각 누적 평균 행렬"""
    weights = np.tril(np.ones((steps, steps), dtype=np.float64))
    return (weights / np.arange(1, steps + 1, dtype=np.float64)[:, None]).astype(np.float32)


def causal_mask(rows: int, steps: int) -> np.ndarray:
    upper = np.triu(np.ones((steps, steps), dtype=bool), k=1)
    mask = np.where(upper, NEG_INF, np.float32(0.0)).astype(np.float32)
    return np.broadcast_to(mask, (rows, steps, steps)).copy()


class Transformer:
    """
    그래프 기반 Transformer 실행기

    실행기 하나는 한 작업자(worker)에만 묶인다. 파라미터 배열과 TunerState는 여러 실행기가 공유할 수 있다.
    """

    def __init__(self,
                 config: ModelConfig,
                 params: Params,
                 regime: Regime = Regime.FLOAT32,
                 memoize: bool = True,
                 tuner: Optional[TunerState] = None,
                 int8_clip: float = DEFAULT_INT8_CLIP,
                 name: str = "transformer"):
        check_params(config, params)
        self.config = config
        self.params = params
        self.regime = Regime(regime)
        self.scheme = Int8Scheme(int8_clip)
        self.graph = Graph(memoize=memoize, tuner=tuner, name=name)
        self._positions = positional_encoding(1, config.emb_dim)

        self._nodes: Dict[str, int] = {key: self.graph.param(value, key) for key, value in params.items()}
        for key, value in params.items():
            if value.ndim == 2 and key != "embedding":
                self._prepare(self._nodes[key])
        self._embedding_t = self.graph.add_node(Op.TRANSPOSE, [self._nodes["embedding"]])
        self._prepare(self._embedding_t)

        self._base = self.graph.checkpoint()
        self._output_key: Optional[Tuple[int, ...]] = None
        self._output_node = self._embedding_t
        self._step_mark = self._base

    # ------------------------------------------------------------------
    # 그래프 구성 요소
    # ------------------------------------------------------------------

    def _prepare(self, weight: int) -> None:
        if self.regime is Regime.INT16:
            prepare_operand(self.graph, weight, Precision.I16)
        elif self.regime is Regime.INT8:
            prepare_operand(self.graph, weight, Precision.I8, self.scheme)
        elif self.regime is Regime.AUTOTUNE:
            prepare_operand(self.graph, weight, Precision.I16)

    def _product(self, x: int, weight: int, scope: Optional[str] = None) -> int:
        g = self.graph
        if self.regime is Regime.INT16:
            return dot_int(g, x, weight, Precision.I16)
        if self.regime is Regime.INT8:
            return dot_int(g, x, weight, Precision.I8, self.scheme)
        if self.regime is Regime.AUTOTUNE:
            return tuned_gemm(g, x, weight, scope=scope)
        return g.add_node(Op.GEMM_F32, [x, weight], scope=scope)

    def _affine(self, x: int, weight: str, bias: str) -> int:
        product = self._product(x, self._nodes[weight])
        return self.graph.add_node(Op.ADD, [product, self._nodes[bias]])

    def _reshape(self, x: int, shape: Sequence[int]) -> int:
        return self.graph.add_node(Op.RESHAPE, [x], {"shape": shape})

    def _norm(self, residual: int, sublayer: int, prefix: str) -> int:
        g = self.graph
        total = g.add_node(Op.ADD, [residual, sublayer])
        return g.add_node(Op.LAYER_NORM, [total, self._nodes[f"{prefix}.gamma"], self._nodes[f"{prefix}.beta"]])

    def _ffn(self, x: int, prefix: str) -> int:
        hidden = self.graph.add_node(Op.RELU, [self._affine(x, f"{prefix}.w1", f"{prefix}.b1")])
        return self._affine(hidden, f"{prefix}.w2", f"{prefix}.b2")

    def _project_kv(self, prefix: str, x: int, rows: int, steps: int) -> Tuple[int, int]:
        shape = (rows, steps, self.config.emb_dim)
        keys = self._reshape(self._affine(x, f"{prefix}.wk", f"{prefix}.bk"), shape)
        values = self._reshape(self._affine(x, f"{prefix}.wv", f"{prefix}.bv"), shape)
        return keys, values

    def _attention(self, prefix: str, queries: int, keys: int, values: int, rows: int, steps: int,
                   mask: Optional[int] = None, scope: Optional[str] = None) -> int:
        emb = self.config.emb_dim
        q = self._reshape(self._affine(queries, f"{prefix}.wq", f"{prefix}.bq"), (rows, steps, emb))
        children = [q, keys, values] + ([mask] if mask is not None else [])
        context = self.graph.add_node(Op.ATTENTION, children, {"heads": self.config.heads}, scope=scope)
        return self._affine(self._reshape(context, (rows * steps, emb)), f"{prefix}.wo", f"{prefix}.bo")

    def _aan_tail(self, y: int, average: int, prefix: str) -> int:
        """평균 뒤의 FFN / gate / residual + layer norm"""
        g = self.graph
        emb = self.config.emb_dim
        out = average
        if self.config.aan_ffn_enabled:
            out = self._ffn(out, f"{prefix}.aan.ffn")
        if self.config.aan_gate_enabled:
            joined = g.add_node(Op.CONCAT, [y, out], {"axis": 1})
            gates = self._affine(joined, f"{prefix}.aan.gate.w", f"{prefix}.aan.gate.b")
            input_gate = g.add_node(Op.SIGMOID, [g.add_node(Op.SLICE, [gates], {"axis": 1, "start": 0, "stop": emb})])
            forget_gate = g.add_node(Op.SIGMOID, [g.add_node(Op.SLICE, [gates], {"axis": 1, "start": emb, "stop": 2 * emb})])
            out = g.add_node(Op.ADD, [g.add_node(Op.MUL, [input_gate, y]), g.add_node(Op.MUL, [forget_gate, out])])
        return self._norm(y, out, f"{prefix}.self_ln")

    def _select_output(self, shortlist: Optional[Sequence[int]]) -> None:
        """출력층 노드를 shortlist에 맞추고 스텝 영역을 비운다"""
        key = None if shortlist is None else tuple(int(i) for i in shortlist)
        if key == self._output_key:
            self.graph.rollback(self._step_mark)
            return

        self.graph.rollback(self._base)
        if key is None:
            self._output_node = self._embedding_t
        else:
            if not key:
                raise VocabularyError("shortlist must contain at least one id")
            gathered = self.graph.add_node(Op.GATHER, [self._nodes["embedding"]], {"ids": key})
            self._output_node = self.graph.add_node(Op.TRANSPOSE, [gathered])
            self._prepare(self._output_node)
        self._output_key = key
        self._step_mark = self.graph.checkpoint()

    # ------------------------------------------------------------------
    # 입력 임베딩
    # ------------------------------------------------------------------

    def _position_table(self, steps: int) -> np.ndarray:
        if self._positions.shape[0] < steps:
            self._positions = positional_encoding(max(steps, 2 * self._positions.shape[0]), self.config.emb_dim)
        return self._positions[:steps]

    def embed(self, ids: np.ndarray, start: int = 0) -> np.ndarray:
        """ids [R, T] → √emb 배율 임베딩 + 위치 인코딩 [R, T, emb]"""
        ids = np.asarray(ids, dtype=np.int64)
        vocab_size = self.config.vocab_size
        if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
            raise VocabularyError(f"token id outside [0, {vocab_size})")
        vectors = self.params["embedding"][ids].astype(np.float64) * math.sqrt(self.config.emb_dim)
        if self.config.positional:
            vectors = vectors + self._position_table(start + ids.shape[1])[start:start + ids.shape[1]]
        return vectors.astype(np.float32)

    def start_input(self, rows: int) -> np.ndarray:
        """첫 디코더 입력: 0 임베딩 + 위치 0"""
        start = np.zeros((rows, self.config.emb_dim), dtype=np.float32)
        if self.config.positional:
            start = start + self._position_table(1)[0]
        return start.astype(np.float32)

    def decoder_inputs(self, previous: Optional[Sequence[int]], state: DecoderState) -> np.ndarray:
        if state.t == 0 or previous is None:
            return self.start_input(state.rows)
        return self.embed(np.asarray(previous, dtype=np.int64)[:, None], start=state.t)[:, 0, :]

    # ------------------------------------------------------------------
    # encoder
    # ------------------------------------------------------------------

    def encode(self, sentences: Sequence[Sequence[int]]) -> EncodedSource:
        """토큰 id 문장들을 PAD로 맞춰 한 번에 인코딩"""
        if not sentences or any(len(s) == 0 for s in sentences):
            raise DimensionError("encode needs at least one non-empty sentence")
        rows = len(sentences)
        steps = max(len(s) for s in sentences)
        emb = self.config.emb_dim
        ids = np.full((rows, steps), PAD_ID, dtype=np.int64)
        mask = np.zeros((rows, 1, steps), dtype=np.float32)
        for row, sentence in enumerate(sentences):
            ids[row, :len(sentence)] = sentence
            mask[row, 0, len(sentence):] = NEG_INF
        return self.encode_embedded(self.embed(ids), mask, [len(s) for s in sentences])

    def encode_embedded(self, embedded: np.ndarray, mask: np.ndarray, lengths: List[int]) -> EncodedSource:
        g = self.graph
        self._select_output(self._output_key)
        rows, steps, emb = embedded.shape

        x_in = g.input((rows * steps, emb), "source")
        mask_in = g.input((rows, 1, steps), "source-mask")
        h = x_in
        for layer in range(self.config.enc_layers):
            prefix = f"enc.{layer}"
            keys, values = self._project_kv(f"{prefix}.self", h, rows, steps)
            h = self._norm(h, self._attention(f"{prefix}.self", h, keys, values, rows, steps, mask_in), f"{prefix}.self_ln")
            h = self._norm(h, self._ffn(h, f"{prefix}.ffn"), f"{prefix}.ffn_ln")

        cross = [self._project_kv(f"dec.{layer}.ctx", h, rows, steps) for layer in range(self.config.dec_layers)]
        outputs = [h] + [node for pair in cross for node in pair]
        values = g.forward({x_in: embedded.reshape(rows * steps, emb), mask_in: mask}, outputs)
        return EncodedSource(
            output=values[h].reshape(rows, steps, emb),
            mask=mask,
            keys=[values[k] for k, _ in cross],
            values=[values[v] for _, v in cross],
            lengths=list(lengths),
        )

    def encoded_from_output(self, output: np.ndarray, mask: Optional[np.ndarray] = None) -> EncodedSource:
        """외부에서 받은 encoder 출력 [R, S, emb]에 대해 cross-attention key / value 계산"""
        g = self.graph
        self._select_output(self._output_key)
        rows, steps, emb = output.shape
        if mask is None:
            mask = np.zeros((rows, 1, steps), dtype=np.float32)
        h = g.input((rows * steps, emb), "encoder-output")
        cross = [self._project_kv(f"dec.{layer}.ctx", h, rows, steps) for layer in range(self.config.dec_layers)]
        values = g.forward({h: output.reshape(rows * steps, emb)}, [n for pair in cross for n in pair])
        return EncodedSource(
            output=output,
            mask=mask,
            keys=[values[k] for k, _ in cross],
            values=[values[v] for _, v in cross],
            lengths=[steps] * rows,
        )

    # ------------------------------------------------------------------
    # 증분 decoder
    # ------------------------------------------------------------------

    def step(self, previous: Optional[Sequence[int]], state: DecoderState, encoded: EncodedSource,
             shortlist: Optional[Sequence[int]] = None) -> StepResult:
        """직전 토큰(첫 스텝은 None)으로 한 스텝 디코딩"""
        return self.step_embedded(self.decoder_inputs(previous, state), state, encoded, shortlist)

    def step_embedded(self, y: np.ndarray, state: DecoderState, encoded: EncodedSource,
                      shortlist: Optional[Sequence[int]] = None) -> StepResult:
        if state.variant is not self.config.decoder_variant:
            raise StateError(f"{state.variant.value} state given to a {self.config.decoder_variant.value} decoder")
        rows, emb, t = state.rows, self.config.emb_dim, state.t
        if y.shape != (rows, emb) or encoded.rows != rows:
            raise DimensionError(f"step input {y.shape} / encoded rows {encoded.rows} do not match state rows {rows}")

        g = self.graph
        self._select_output(shortlist)
        steps = encoded.output.shape[1]
        y_in = g.input((rows, emb), "target")
        mask_in = g.input((rows, 1, steps), "source-mask")
        feeds = {y_in: y, mask_in: encoded.mask}

        h = y_in
        state_nodes: List[Tuple[int, ...]] = []
        block_nodes: List[int] = []
        for layer in range(self.config.dec_layers):
            prefix = f"dec.{layer}"
            if self.config.is_aan:
                running = g.input((rows, emb), f"{prefix}.running-sum")
                feeds[running] = state.running_sum[layer]
                total = g.add_node(Op.ADD, [running, h])
                average = g.add_node(Op.SCALAR_MUL, [total], {"scalar": 1.0 / (t + 1)}, scope="aan-average")
                h = self._aan_tail(h, average, prefix)
                state_nodes.append((total,))
            else:
                new_keys, new_values = self._project_kv(f"{prefix}.self", h, rows, 1)
                if t > 0:
                    cached_keys = g.input((rows, t, emb), f"{prefix}.keys")
                    cached_values = g.input((rows, t, emb), f"{prefix}.values")
                    feeds[cached_keys] = state.keys[layer]
                    feeds[cached_values] = state.values[layer]
                    new_keys = g.add_node(Op.CONCAT, [cached_keys, new_keys], {"axis": 1})
                    new_values = g.add_node(Op.CONCAT, [cached_values, new_values], {"axis": 1})
                attended = self._attention(f"{prefix}.self", h, new_keys, new_values, rows, 1, scope="self-attention")
                h = self._norm(h, attended, f"{prefix}.self_ln")
                state_nodes.append((new_keys, new_values))
            block_nodes.append(h)

            ctx_keys = g.input((rows, steps, emb), f"{prefix}.ctx-keys")
            ctx_values = g.input((rows, steps, emb), f"{prefix}.ctx-values")
            feeds[ctx_keys] = encoded.keys[layer]
            feeds[ctx_values] = encoded.values[layer]
            h = self._norm(h, self._attention(f"{prefix}.ctx", h, ctx_keys, ctx_values, rows, 1, mask_in), f"{prefix}.ctx_ln")
            h = self._norm(h, self._ffn(h, f"{prefix}.ffn"), f"{prefix}.ffn_ln")

        logits = self._product(h, self._output_node, scope="output")
        wanted = [logits, h] + block_nodes + [n for nodes in state_nodes for n in nodes]
        values = g.forward(feeds, wanted)

        if self.config.is_aan:
            new_state: DecoderState = AANState(rows=rows, running_sum=[values[n[0]] for n in state_nodes], t=t + 1)
        else:
            new_state = SelfAttnState(
                rows=rows,
                keys=[values[n[0]] for n in state_nodes],
                values=[values[n[1]] for n in state_nodes],
                t=t + 1,
            )
        return StepResult(
            logits=values[logits],
            state=new_state,
            hidden=values[h],
            block_outputs=[values[n] for n in block_nodes],
        )

    # ------------------------------------------------------------------
    # 병렬 decoder (증분 디코딩 검증용)
    # ------------------------------------------------------------------

    def decode_parallel(self, targets: np.ndarray, encoded: EncodedSource,
                        shortlist: Optional[Sequence[int]] = None) -> StepResult:
        """
        임베딩된 디코더 입력 전체 [R, T, emb]를 한 번에 처리

        self-attention은 causal mask, AAN은 누적 평균 행렬을 쓴다. 결과 배열은 [R, T, ...].
        """
        g = self.graph
        self._select_output(shortlist)
        rows, steps, emb = targets.shape
        src_steps = encoded.output.shape[1]
        y_in = g.input((rows * steps, emb), "target")
        mask_in = g.input((rows, 1, src_steps), "source-mask")
        feeds = {y_in: targets.reshape(rows * steps, emb), mask_in: encoded.mask}
        if self.config.is_aan:
            averaging = g.literal(np.kron(np.eye(rows, dtype=np.float32), average_matrix(steps)).astype(np.float32))
        else:
            causal = g.literal(causal_mask(rows, steps))

        h = y_in
        block_nodes: List[int] = []
        for layer in range(self.config.dec_layers):
            prefix = f"dec.{layer}"
            if self.config.is_aan:
                average = g.add_node(Op.GEMM_F32, [averaging, h])
                h = self._aan_tail(h, average, prefix)
            else:
                keys, values = self._project_kv(f"{prefix}.self", h, rows, steps)
                h = self._norm(h, self._attention(f"{prefix}.self", h, keys, values, rows, steps, causal), f"{prefix}.self_ln")
            block_nodes.append(h)

            ctx_keys = g.input((rows, src_steps, emb), f"{prefix}.ctx-keys")
            ctx_values = g.input((rows, src_steps, emb), f"{prefix}.ctx-values")
            feeds[ctx_keys] = encoded.keys[layer]
            feeds[ctx_values] = encoded.values[layer]
            h = self._norm(h, self._attention(f"{prefix}.ctx", h, ctx_keys, ctx_values, rows, steps, mask_in), f"{prefix}.ctx_ln")
            h = self._norm(h, self._ffn(h, f"{prefix}.ffn"), f"{prefix}.ffn_ln")

        logits = self._product(h, self._output_node)
        values = g.forward(feeds, [logits, h] + block_nodes)
        return StepResult(
            logits=values[logits].reshape(rows, steps, -1),
            state=initial_state(self.config, rows),
            hidden=values[h].reshape(rows, steps, emb),
            block_outputs=[values[n].reshape(rows, steps, emb) for n in block_nodes],
        )

    def aan_block_parallel(self, y: np.ndarray, layer: int = 0, core_only: bool = False) -> np.ndarray:
        """AAN 블록 하나를 [T, emb] 시퀀스 전체에 적용"""
        if not self.config.is_aan:
            raise StateError("aan_block_parallel needs an aan decoder")
        g = self.graph
        self._select_output(self._output_key)
        steps, emb = y.shape
        y_in = g.input((steps, emb), "aan-input")
        average = g.add_node(Op.GEMM_F32, [g.literal(average_matrix(steps)), y_in], scope="aan-average")
        out = average if core_only else self._aan_tail(y_in, average, f"dec.{layer}")
        return g.forward({y_in: y}, [out])[out]

    def counters(self) -> Dict[str, int]:
        return dict(self.graph.kernel_counters)


# ----------------------------------------------------------------------
# 함수형 진입점
# ----------------------------------------------------------------------

def encoder_forward(config: ModelConfig, params: Params, source_ids: Sequence[int]) -> np.ndarray:
    """한 문장 인코딩 → [src_len, emb]"""
    return Transformer(config, params).encode([list(source_ids)]).output[0]


def decoder_step(config: ModelConfig, params: Params, state: DecoderState, y_t: np.ndarray,
                 enc_out: np.ndarray, shortlist: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, DecoderState]:
    """임베딩된 입력 y_t [emb] 한 스텝 → (logits, 갱신된 상태)"""
    executor = Transformer(config, params)
    encoded = executor.encoded_from_output(enc_out[None, :, :])
    result = executor.step_embedded(np.asarray(y_t, dtype=np.float32).reshape(1, -1), state, encoded, shortlist)
    return result.logits[0], result.state


def aan_parallel(config: ModelConfig, params: Params, y: np.ndarray, layer: int = 0, core_only: bool = False) -> np.ndarray:
    return Transformer(config, params).aan_block_parallel(np.asarray(y, dtype=np.float32), layer, core_only)
