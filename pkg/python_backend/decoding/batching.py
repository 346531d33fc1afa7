"""
Word-Budget Batching
소스 길이로 안정 정렬한 뒤 단어 수 예산을 넘기 직전까지 채우는 배치 분할
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from core.exceptions import ParameterError


@dataclass(frozen=True)
class Batch:
    """길이가 비슷한 문장 묶음 (배치 내부는 원래 순서)"""

    indices: List[int]
    sentences: List[List[int]]

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


def make_batches(sentences: Sequence[Sequence[int]], word_budget: int) -> List[Batch]:
    """
    길이 오름차순 greedy fill

    다음 문장을 넣으면 예산을 넘는 순간 배치를 닫는다. 예산보다 긴 문장은 단독 배치가 된다.
    """
    if word_budget < 1:
        raise ParameterError(f"word budget must be >= 1, got {word_budget}")

    order = sorted(range(len(sentences)), key=lambda i: len(sentences[i]))
    groups: List[List[int]] = []
    current: List[int] = []
    words = 0
    for index in order:
        length = len(sentences[index])
        if current and words + length > word_budget:
            groups.append(current)
            current, words = [], 0
        current.append(index)
        words += length
    if current:
        groups.append(current)

    batches = []
    for group in groups:
        group = sorted(group)
        batches.append(Batch(indices=group, sentences=[list(sentences[i]) for i in group]))
    return batches
