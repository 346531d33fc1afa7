"""
Bench Service
비용 효율(USD당 소스 토큰 수) 계산과 Pareto frontier CSV 리포트

cost = tokens / seconds * 3600 / usd_per_hour
frontier: 비용 효율과 품질이 모두 더 높은 다른 실행이 없으면 frontier
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Union

from core.exceptions import InputFormatError, ParameterError
from services.base_service import BaseService
from services.translation_service import BenchRun

SECONDS_PER_HOUR = 3600.0

REPORT_HEADER = [
    "system", "size_mib", "time_s", "tokens", "beam", "regime",
    "tokens_per_usd_millions", "quality", "frontier",
]


def cost_effectiveness(tokens: int, seconds: float, usd_per_hour: float) -> float:
    """USD 1달러당 번역되는 소스 토큰 수"""
    if not seconds > 0:
        raise ParameterError(f"seconds must be positive, got {seconds}")
    if not usd_per_hour > 0:
        raise ParameterError(f"instance price must be positive, got {usd_per_hour}")
    if tokens < 0:
        raise ParameterError(f"token count must be >= 0, got {tokens}")
    return tokens / seconds * SECONDS_PER_HOUR / usd_per_hour


@dataclass
class ReportRow:
    system: str
    size_mib: float
    time_s: float
    tokens: int
    beam: int
    regime: str
    tokens_per_usd: float
    quality: Optional[float] = None
    frontier: bool = False

    @classmethod
    def from_run(cls, run: BenchRun, usd_per_hour: float) -> "ReportRow":
        return cls(
            system=run.system,
            size_mib=run.size_mib,
            time_s=run.seconds,
            tokens=run.tokens,
            beam=run.beam,
            regime=run.regime,
            tokens_per_usd=cost_effectiveness(run.tokens, run.seconds, usd_per_hour),
            quality=run.quality,
        )

    def as_csv(self) -> List[str]:
        return [
            self.system,
            f"{self.size_mib:.0f}",
            f"{self.time_s:.1f}",
            str(self.tokens),
            str(self.beam),
            self.regime,
            f"{self.tokens_per_usd / 1e6:.2f}",
            "" if self.quality is None else f"{self.quality:g}",
            "true" if self.frontier else "false",
        ]


def _quality_key(quality: Optional[float]) -> float:
    return -math.inf if quality is None else quality


def mark_frontier(rows: Sequence[ReportRow]) -> List[bool]:
    """다른 행이 비용 효율과 품질 모두에서 엄격히 앞서면 frontier 아님"""
    flags = []
    for row in rows:
        dominated = any(
            other.tokens_per_usd > row.tokens_per_usd and _quality_key(other.quality) > _quality_key(row.quality)
            for other in rows
            if other is not row
        )
        flags.append(not dominated)
    return flags


def build_report(rows: Sequence[ReportRow]) -> List[ReportRow]:
    if not rows:
        raise ParameterError("a report needs at least one run")
    for row, flag in zip(rows, mark_frontier(rows)):
        row.frontier = flag
    return sorted(rows, key=lambda r: -r.tokens_per_usd)


def render_csv(rows: Sequence[ReportRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
    return buffer.getvalue()


def read_report(path: Path) -> List[ReportRow]:
    """기존 리포트 CSV를 행 목록으로 읽기 (비용 효율 값은 파일 값 유지)"""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or [f for f in reader.fieldnames if f != "frontier"] != REPORT_HEADER[:-1]:
                raise InputFormatError(f"{path}: unexpected report header {reader.fieldnames}")
            rows = []
            for record in reader:
                rows.append(ReportRow(
                    system=record["system"],
                    size_mib=float(record["size_mib"]),
                    time_s=float(record["time_s"]),
                    tokens=int(record["tokens"]),
                    beam=int(record["beam"]),
                    regime=record["regime"],
                    tokens_per_usd=float(record["tokens_per_usd_millions"]) * 1e6,
                    quality=float(record["quality"]) if record["quality"] else None,
                ))
            return rows
    except OSError as e:
        raise InputFormatError(f"cannot read report {path}: {e}") from e
    except (KeyError, ValueError) as e:
        raise InputFormatError(f"{path}: malformed report row: {e}") from e


def emit_report(runs: Sequence[BenchRun],
                prices: Union[float, Mapping[str, float]],
                path: Optional[Path] = None,
                existing: Sequence[ReportRow] = ()) -> List[ReportRow]:
    """실행 목록을 리포트 행으로 변환, frontier 표시 후 비용 효율 내림차순 정렬 (path가 있으면 CSV 기록)"""
    if not runs and not existing:
        raise ParameterError("a report needs at least one run")
    rows = list(existing)
    for run in runs:
        price = prices if isinstance(prices, (int, float)) else prices[run.system]
        rows.append(ReportRow.from_run(run, price))
    report = build_report(rows)
    if path is not None:
        Path(path).write_text(render_csv(report), encoding="utf-8")
    return report


class BenchService(BaseService):
    """비용 효율 / 리포트 서비스"""

    def cost(self, tokens: int, seconds: float, usd_per_hour: float) -> float:
        return cost_effectiveness(tokens, seconds, usd_per_hour)

    def report(self, runs: Sequence[BenchRun], usd_per_hour: float, path: Optional[Path] = None,
               merge: bool = True) -> List[ReportRow]:
        """path에 기존 리포트가 있고 merge면 그 행들과 합쳐 frontier를 다시 계산"""
        existing: List[ReportRow] = []
        if path is not None and merge and Path(path).exists():
            existing = read_report(path)
            self._log_info(f"merging {len(runs)} runs into {len(existing)} existing rows of {path}")
        report = emit_report(runs, usd_per_hour, path, existing)
        frontier = [r.system for r in report if r.frontier]
        self._log_info(f"report with {len(report)} rows, frontier: {', '.join(frontier)}")
        return report
