"""
Search
greedy(argmax) 디코딩과 beam search

- beam 1은 softmax 없이 raw logit의 argmax를 고른다 (동률은 가장 작은 id)
- beam search는 shortlist logit의 log-softmax 누적 점수로 상위 b개를 유지한다
- PAD는 후보에서 항상 제외된다
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from core.exceptions import ParameterError
from engine.model import EOS_ID, PAD_ID
from engine.tensor import log_softmax_rows
from engine.transformer import DecoderState, EncodedSource, Transformer, initial_state

logger = logging.getLogger("deskengine")


@dataclass
class Hypothesis:
    tokens: List[int] = field(default_factory=list)
    score: float = 0.0
    finished: bool = False

    def normalized_score(self, length_penalty: float = 0.0) -> float:
        """length_penalty > 0이면 (길이 + EOS)^lp로 나눈 점수"""
        if length_penalty <= 0.0:
            return self.score
        return self.score / float(len(self.tokens) + 1) ** length_penalty


def candidate_ids(model: Transformer, shortlist: Optional[Sequence[int]]) -> np.ndarray:
    if shortlist is None:
        return np.arange(model.config.vocab_size, dtype=np.int64)
    return np.asarray(shortlist, dtype=np.int64)


def _mask_pad(logits: np.ndarray, ids: np.ndarray) -> np.ndarray:
    if PAD_ID in ids:
        logits = logits.copy()
        logits[:, ids == PAD_ID] = -np.inf
    return logits


def greedy_decode(model: Transformer,
                  state: Optional[DecoderState],
                  encoded: EncodedSource,
                  shortlist: Optional[Sequence[int]],
                  max_len: Union[int, Sequence[int]]) -> List[List[int]]:
    """
    배치 행을 lockstep으로 argmax 디코딩

    EOS를 낸 행이나 max_len에 도달한 행은 이후 스텝에서 패딩으로만 계산되고 토큰을 내지 않는다.
    반환값은 행별 토큰 목록 (EOS 제외).
    """
    rows = encoded.rows
    limits = [int(max_len)] * rows if np.isscalar(max_len) else [int(m) for m in max_len]
    if len(limits) != rows or min(limits) < 1:
        raise ParameterError(f"max_len must be >= 1 for each of {rows} rows, got {max_len}")
    if state is None:
        state = initial_state(model.config, rows)

    ids = candidate_ids(model, shortlist)
    outputs: List[List[int]] = [[] for _ in range(rows)]
    active = [True] * rows
    previous: Optional[List[int]] = None
    for step in range(max(limits)):
        result = model.step(previous, state, encoded, shortlist)
        choice = ids[np.argmax(_mask_pad(result.logits, ids), axis=1)]
        state = result.state
        for row in range(rows):
            if not active[row]:
                continue
            token = int(choice[row])
            if token == EOS_ID:
                active[row] = False
                continue
            outputs[row].append(token)
            if len(outputs[row]) >= limits[row]:
                active[row] = False
        if not any(active):
            break
        previous = [int(c) if active[r] else EOS_ID for r, c in enumerate(choice)]
    return outputs


def beam_search(model: Transformer,
                encoded: EncodedSource,
                beam_size: int,
                shortlist: Optional[Sequence[int]],
                max_len: int,
                length_penalty: float = 0.0) -> List[Hypothesis]:
    """
    단일 문장 beam search → 점수 내림차순 n-best

    살아있는 beam 폭은 beam_size - 완료 가설 수. EOS로 끝난 가설은 따로 보관하고,
    max_len에 도달하면 남은 가설을 완료로 처리한다.
    """
    if beam_size < 1:
        raise ParameterError(f"beam size must be >= 1, got {beam_size}")
    if max_len < 1:
        raise ParameterError(f"max_len must be >= 1, got {max_len}")
    if encoded.rows != 1:
        raise ParameterError(f"beam_search decodes one sentence at a time, got {encoded.rows} rows")

    ids = candidate_ids(model, shortlist)
    width = len(ids)
    live = [Hypothesis()]
    finished: List[Hypothesis] = []
    state = initial_state(model.config, 1)
    previous: Optional[List[int]] = None

    for step in range(max_len):
        result = model.step(previous, state, encoded.select_rows([0] * len(live)), shortlist)
        log_probs = log_softmax_rows(_mask_pad(result.logits, ids))
        totals = np.asarray([h.score for h in live], dtype=np.float64)[:, None] + log_probs
        flat = totals.ravel()
        order = np.argsort(-flat, kind="stable")

        room = beam_size - len(finished)
        survivors: List[Hypothesis] = []
        source_rows: List[int] = []
        for flat_index in order[:room]:
            score = float(flat[flat_index])
            if not np.isfinite(score):
                break
            row, column = divmod(int(flat_index), width)
            token = int(ids[column])
            if token == EOS_ID:
                finished.append(Hypothesis(list(live[row].tokens), score, finished=True))
            else:
                survivors.append(Hypothesis(live[row].tokens + [token], score))
                source_rows.append(row)

        live = survivors
        if not live or len(finished) >= beam_size:
            break
        state = result.state.select_rows(source_rows)
        previous = [h.tokens[-1] for h in live]

    if len(finished) < beam_size:
        for hypothesis in live:
            hypothesis.finished = True
            finished.append(hypothesis)

    ranked = sorted(finished, key=lambda h: -h.normalized_score(length_penalty))
    return ranked[:beam_size]
