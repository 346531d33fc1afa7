"""
Distillation Service
n-best 파일과 참조 파일에서 문장별 sentence-BLEU 최고 가설을 골라 학생 학습 데이터로 기록

n-best 줄 형식: "sentence_index ||| hypothesis" (같은 문장의 가설은 연속, index는 0부터 빈틈 없이)
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Tuple

from core.exceptions import InputFormatError
from decoding.bleu import select_distill, sentence_bleu
from services.base_service import BaseService

SEPARATOR = "|||"


def parse_nbest(lines: List[str]) -> List[List[str]]:
    """n-best 줄 → 문장별 가설 목록"""
    groups: List[List[str]] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if SEPARATOR not in line:
            raise InputFormatError(f"n-best line {number}: expected 'index ||| hypothesis'")
        raw_index, hypothesis = line.split(SEPARATOR, 1)
        try:
            index = int(raw_index.strip())
        except ValueError:
            raise InputFormatError(f"n-best line {number}: '{raw_index.strip()}' is not a sentence index") from None
        if index == len(groups) - 1:
            groups[-1].append(hypothesis.strip())
        elif index == len(groups):
            groups.append([hypothesis.strip()])
        else:
            raise InputFormatError(f"n-best line {number}: sentence index {index} after {len(groups) - 1} (gap or reordering)")
    return groups


class DistillService(BaseService):
    """sequence-level knowledge distillation용 가설 선택"""

    def select(self, nbest: List[str], reference: str) -> Tuple[int, str, float]:
        tokens = [h.split() for h in nbest]
        reference_tokens = reference.split()
        index, _ = select_distill(tokens, reference_tokens)
        return index, nbest[index], sentence_bleu(tokens[index], reference_tokens)

    def run_distill(self, nbest_path: Path, reference_path: Path, output_path: Optional[Path] = None) -> List[str]:
        try:
            nbest_lines = Path(nbest_path).read_text(encoding="utf-8").splitlines()
            references = Path(reference_path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise InputFormatError(f"cannot read distillation input: {e}") from e

        groups = parse_nbest(nbest_lines)
        if len(groups) != len(references):
            raise InputFormatError(
                f"n-best file covers {len(groups)} sentences but the reference has {len(references)} lines"
            )

        selected = [self.select(group, reference)[1] for group, reference in zip(groups, references)]
        if output_path is not None:
            Path(output_path).write_text("".join(s + "\n" for s in selected), encoding="utf-8")
        self._log_info(f"selected {len(selected)} distillation targets from {nbest_path}")
        return selected
