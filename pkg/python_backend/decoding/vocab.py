"""
Vocabulary
한 줄에 토큰 하나, 줄 번호가 id인 공유(tied) 어휘
0 / 1 / 2번 줄은 EOS / UNK / PAD 예약
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from core.exceptions import VocabularyError
from engine.model import EOS_ID, PAD_ID, RESERVED_TOKENS, UNK_ID


class Vocab:
    """토큰 ↔ id 양방향 조회 (생성 후 불변)"""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if len(tokens) <= PAD_ID:
            raise VocabularyError(f"vocabulary needs at least {PAD_ID + 1} reserved lines, got {len(tokens)}")
        index: Dict[str, int] = {}
        for position, token in enumerate(tokens):
            if token in index:
                raise VocabularyError(f"duplicate token '{token}' on lines {index[token]} and {position}")
            index[token] = position
        self._tokens = tuple(tokens)
        self._index = index

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def eos_id(self) -> int:
        return EOS_ID

    @property
    def unk_id(self) -> int:
        return UNK_ID

    @property
    def pad_id(self) -> int:
        return PAD_ID

    def lookup(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._tokens):
            raise VocabularyError(f"token id {token_id} outside [0, {len(self._tokens)})")
        return self._tokens[token_id]

    def encode(self, line: str, add_eos: bool = False) -> List[int]:
        """공백 단위 토큰화 문장 → id 목록 (미등록 토큰은 UNK)"""
        ids = [self.lookup(token) for token in line.split()]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        """id 목록 → 문장 (EOS / PAD는 출력하지 않음)"""
        return " ".join(self.token(i) for i in ids if i not in (EOS_ID, PAD_ID))

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise VocabularyError(f"cannot read vocabulary {path}: {e}") from e
        # 줄 번호가 곧 id
        tokens = [line.strip() for line in lines]
        for number, token in enumerate(tokens, start=1):
            if not token:
                raise VocabularyError(f"{path}:{number}: blank vocabulary line (id {number - 1} would be lost)")
        return cls(tokens)

    @classmethod
    def synthetic(cls, size: int) -> "Vocab":
        """무작위 모델용 어휘: 예약 토큰 + w3, w4, ..."""
        if size <= PAD_ID:
            raise VocabularyError(f"synthetic vocabulary needs more than {PAD_ID + 1} entries")
        return cls(list(RESERVED_TOKENS) + [f"w{i}" for i in range(len(RESERVED_TOKENS), size)])

    def save(self, path: Path) -> None:
        Path(path).write_text("\n".join(self._tokens) + "\n", encoding="utf-8")
