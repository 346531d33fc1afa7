"""
Runtime Kernel Auto-Tuner
shape별로 교체 가능한 커널들을 실제 실행 시간으로 비교해 하나를 고정하는 튜너

측정 단계: alternative를 round-robin으로 실행하며 각각 budget(기본 100)회씩 시간 누적
고정 단계: 누적 시간이 가장 짧은 alternative만 실행 (이후 측정 없음)
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from core.exceptions import ParameterError

logger = logging.getLogger("deskengine")

DEFAULT_BUDGET = 100

Alternative = Tuple[str, Callable[[], Any]]


@dataclass(frozen=True)
class TuneKey:
    """(operand shapes, alternative ids) 다이제스트"""

    digest: str
    label: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.digest


@dataclass
class Measurement:
    alt_id: str
    total_time: float = 0.0
    count: int = 0


@dataclass
class TuneEntry:
    measurements: List[Measurement]
    chosen: Optional[str] = None

    def alt_ids(self) -> List[str]:
        return [m.alt_id for m in self.measurements]


def tune_key(shapes: Sequence[Sequence[int]], alt_ids: Sequence[str]) -> TuneKey:
    """shape와 알고리즘 ID를 해시한 튜닝 키 (프로세스 간 안정적)"""
    if not alt_ids:
        raise ParameterError("tune_key needs at least one alternative id")
    key_data = {
        "shapes": [[int(d) for d in shape] for shape in shapes],
        "alternatives": [str(a) for a in alt_ids],
    }
    digest = hashlib.md5(json.dumps(key_data).encode()).hexdigest()
    label = "|".join("x".join(str(d) for d in s) for s in key_data["shapes"]) + ":" + ",".join(key_data["alternatives"])
    return TuneKey(digest=digest, label=label)


class TunerState:
    """키별 측정 장부와 선택된 alternative. 여러 그래프가 공유할 수 있다."""

    def __init__(self,
                 budget: int = DEFAULT_BUDGET,
                 clock: Callable[[], float] = time.perf_counter,
                 force_alt: Optional[str] = None):
        if budget < 1:
            raise ParameterError(f"tuning budget must be >= 1, got {budget}")
        self.budget = budget
        self.clock = clock
        self.force_alt = force_alt or None
        self.table: Dict[TuneKey, TuneEntry] = {}
        self._lock = threading.Lock()

    def chosen(self, key: TuneKey) -> Optional[str]:
        entry = self.table.get(key)
        return entry.chosen if entry else None

    def measurements(self, key: TuneKey) -> List[Measurement]:
        entry = self.table.get(key)
        return list(entry.measurements) if entry else []

    def dump(self) -> List[str]:
        """'key alt_id total_ms count chosen?' 형식의 텍스트 라인"""
        with self._lock:
            lines = []
            for key, entry in self.table.items():
                for m in entry.measurements:
                    chosen = "yes" if entry.chosen == m.alt_id else "no"
                    lines.append(f"{key.digest} {m.alt_id} {m.total_time * 1000.0:.3f} {m.count} {chosen}")
            return lines

    def write_dump(self, path: Path) -> None:
        Path(path).write_text("\n".join(self.dump()) + "\n", encoding="utf-8")

    def _entry_for(self, key: TuneKey, alt_ids: List[str]) -> TuneEntry:
        entry = self.table.get(key)
        if entry is None:
            entry = TuneEntry([Measurement(alt_id) for alt_id in alt_ids])
            self.table[key] = entry
        elif entry.alt_ids() != alt_ids:
            raise ParameterError(f"alternatives {alt_ids} do not match tuning key {key.label or key.digest}")
        return entry

    def _record(self, key: TuneKey, entry: TuneEntry, index: int, elapsed: float) -> None:
        measurement = entry.measurements[index]
        if entry.chosen is not None or measurement.count >= self.budget:
            return
        measurement.total_time += max(elapsed, 0.0)
        measurement.count += 1
        if all(m.count >= self.budget for m in entry.measurements):
            best = min(range(len(entry.measurements)), key=lambda i: (entry.measurements[i].total_time, i))
            entry.chosen = entry.measurements[best].alt_id
            logger.info(f"auto-tuner committed {entry.chosen} for {key.label or key.digest}")


def tuned_execute(state: TunerState, key: TuneKey, alternatives: Sequence[Alternative]) -> Any:
    """
    튜닝 상태에 따라 alternative 하나를 실행하고 그 결과를 반환

    alternative가 예외를 던지면 그대로 전파되고 해당 측정은 버린다.
    """
    if not alternatives:
        raise ParameterError("tuned_execute needs at least one alternative")
    alt_ids = [alt_id for alt_id, _ in alternatives]

    if state.force_alt is not None:
        for alt_id, kernel in alternatives:
            if alt_id == state.force_alt:
                return kernel()
        raise ParameterError(f"forced alternative '{state.force_alt}' is not one of {alt_ids}")

    with state._lock:
        entry = state._entry_for(key, alt_ids)
        chosen = entry.chosen
        if chosen is None:
            index = min(range(len(alt_ids)), key=lambda i: (entry.measurements[i].count, i))

    if chosen is not None:
        return alternatives[alt_ids.index(chosen)][1]()

    start = state.clock()
    result = alternatives[index][1]()
    elapsed = state.clock() - start

    with state._lock:
        state._record(key, entry, index, elapsed)
    return result
