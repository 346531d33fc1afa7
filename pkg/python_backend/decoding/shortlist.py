"""
Lexical Shortlist
배치마다 출력 어휘를 "전역 빈도 상위 N개 ∪ 소스 토큰별 번역 확률 상위 M개"로 제한

- 어휘 사전 파일: source<TAB>target<TAB>probability
- 빈도 파일: token<TAB>count
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from core.exceptions import InputFormatError
from decoding.vocab import Vocab
from engine.model import EOS_ID, PAD_ID, UNK_ID

logger = logging.getLogger("deskengine")

DEFAULT_FREQUENT = 100
DEFAULT_TRANSLATIONS = 100


@dataclass(frozen=True)
class LexTable:
    """source 토큰 → (target, 확률) 목록 (확률 내림차순), 전역 target 빈도 순위"""

    translations: Dict[str, Tuple[Tuple[str, float], ...]]
    frequent: Tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_entries(cls, entries: Iterable[Tuple[str, str, float]], frequent: Sequence[str] = ()) -> "LexTable":
        grouped: Dict[str, List[Tuple[str, float]]] = {}
        for source, target, probability in entries:
            if not 0.0 <= probability <= 1.0:
                raise InputFormatError(f"probability {probability} for {source}->{target} is outside [0, 1]")
            grouped.setdefault(source, []).append((target, float(probability)))
        # 확률이 같으면 파일 순서 유지
        translations = {
            source: tuple(sorted(pairs, key=lambda pair: -pair[1]))
            for source, pairs in grouped.items()
        }
        return cls(translations=translations, frequent=tuple(frequent))

    def top_translations(self, source: str, limit: int) -> Tuple[Tuple[str, float], ...]:
        return self.translations.get(source, ())[:limit]


def _read_lines(path: Path, what: str) -> List[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputFormatError(f"cannot read {what} {path}: {e}") from e


def load_lex(path: Path, frequency_path: Optional[Path] = None) -> LexTable:
    entries = []
    for number, line in enumerate(_read_lines(path, "lexical table"), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise InputFormatError(f"{path}:{number}: expected source<TAB>target<TAB>probability")
        try:
            probability = float(parts[2])
        except ValueError:
            raise InputFormatError(f"{path}:{number}: '{parts[2]}' is not a probability") from None
        entries.append((parts[0], parts[1], probability))

    frequent = load_frequencies(frequency_path) if frequency_path else ()
    table = LexTable.from_entries(entries, frequent)
    logger.info(f"loaded lexical table with {len(table.translations)} source tokens from {path}")
    return table


def load_frequencies(path: Path) -> Tuple[str, ...]:
    """빈도 파일 → count 내림차순 토큰 목록 (동률은 파일 순서)"""
    counts = []
    for number, line in enumerate(_read_lines(path, "frequency file"), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise InputFormatError(f"{path}:{number}: expected token<TAB>count")
        try:
            counts.append((parts[0], int(parts[1])))
        except ValueError:
            raise InputFormatError(f"{path}:{number}: '{parts[1]}' is not a count") from None
    return tuple(token for token, _ in sorted(counts, key=lambda item: -item[1]))


@dataclass(frozen=True)
class Shortlist:
    """한 미니배치의 출력 후보 id (오름차순, 중복 없음, EOS / UNK 포함, PAD 제외)"""

    ids: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, token_id: int) -> bool:
        return token_id in set(self.ids)


def build_shortlist(sentences: Sequence[Sequence[int]],
                    lex: LexTable,
                    vocab: Vocab,
                    frequent: int = DEFAULT_FREQUENT,
                    translations: int = DEFAULT_TRANSLATIONS) -> Shortlist:
    """배치의 소스 토큰으로 shortlist 생성 (사전에 없는 토큰은 무시)"""
    selected = {EOS_ID, UNK_ID}
    for token in lex.frequent[:frequent]:
        if token in vocab:
            selected.add(vocab.lookup(token))

    distinct_sources = {vocab.token(i) for sentence in sentences for i in sentence}
    for source in distinct_sources:
        for target, _ in lex.top_translations(source, translations):
            if target in vocab:
                selected.add(vocab.lookup(target))

    selected.discard(PAD_ID)
    return Shortlist(ids=tuple(sorted(selected)))
