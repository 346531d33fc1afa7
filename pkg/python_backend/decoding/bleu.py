"""
Sentence BLEU & Distillation Selection
n-best 목록에서 참조 문장 대비 sentence-level BLEU가 가장 높은 가설 선택

n = 1..4, 2 이상 차수는 분자 / 분모에 1을 더하는 smoothing, brevity penalty exp(1 - r/c).
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Hashable, List, Sequence, Tuple

from core.exceptions import ParameterError

MAX_ORDER = 4


def _ngrams(tokens: Sequence[Hashable], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(hypothesis: Sequence[Hashable], reference: Sequence[Hashable], max_order: int = MAX_ORDER) -> float:
    """smoothed sentence BLEU ∈ [0, 1] (빈 가설은 0)"""
    if not reference:
        raise ParameterError("sentence_bleu needs a non-empty reference")
    if not hypothesis:
        return 0.0

    log_precision = 0.0
    for n in range(1, max_order + 1):
        hyp_counts = _ngrams(hypothesis, n)
        ref_counts = _ngrams(reference, n)
        overlap = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        total = sum(hyp_counts.values())
        if n >= 2:
            overlap += 1
            total += 1
        if overlap == 0:
            return 0.0
        log_precision += math.log(overlap / total)

    c, r = len(hypothesis), len(reference)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_precision / max_order)


def select_distill(nbest: Sequence[Sequence[Hashable]], reference: Sequence[Hashable]) -> Tuple[int, Sequence[Hashable]]:
    """BLEU 최대 가설의 (index, 가설); 동률은 앞 순위"""
    if not nbest:
        raise ParameterError("select_distill needs at least one hypothesis")
    scores = score_all(nbest, reference)
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return best, nbest[best]


def score_all(nbest: Sequence[Sequence[Hashable]], reference: Sequence[Hashable]) -> List[float]:
    return [sentence_bleu(hypothesis, reference) for hypothesis in nbest]
