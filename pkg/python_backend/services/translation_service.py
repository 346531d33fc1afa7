"""
Translation Service
모델 로드, 배치 디코딩, 번역 시간 측정 (모델 로드 / 어휘 파싱은 측정에서 제외)
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from core.exceptions import InputFormatError, ModelUnavailableError
from decoding.batching import Batch, make_batches
from decoding.search import beam_search, greedy_decode
from decoding.shortlist import DEFAULT_FREQUENT, DEFAULT_TRANSLATIONS, LexTable, build_shortlist, load_lex
from decoding.vocab import Vocab
from engine.autotune import TunerState
from engine.graph import Op
from engine.model import ModelConfig, Params, check_params, init_params, load_params, param_count, read_config
from engine.quant import DEFAULT_INT8_CLIP
from engine.transformer import Regime, Transformer
from services.base_service import BaseService

PARAM_QUANTIZE_OPS = (Op.QUANTIZE_I16, Op.QUANTIZE_I8)


@dataclass
class LoadedModel:
    config: ModelConfig
    params: Params
    vocab: Vocab
    lex: Optional[LexTable] = None
    name: str = "model"

    @property
    def size_mib(self) -> float:
        return param_count(self.config)[1]


@dataclass
class DecodeOptions:
    regime: Regime = Regime.FLOAT32
    beam: int = 1
    batch_words: int = 384
    memoize: bool = True
    use_shortlist: bool = True
    max_length_factor: float = 3.0
    length_penalty: float = 0.0
    shortlist_frequent: int = DEFAULT_FREQUENT
    shortlist_translations: int = DEFAULT_TRANSLATIONS
    workers: int = 1
    int8_clip: float = DEFAULT_INT8_CLIP

    @classmethod
    def from_settings(cls, settings, **overrides) -> "DecodeOptions":
        values = dict(
            regime=Regime(settings.PRECISION),
            beam=settings.BEAM_SIZE,
            batch_words=settings.BATCH_WORDS,
            memoize=settings.MEMOIZE,
            max_length_factor=settings.MAX_LENGTH_FACTOR,
            length_penalty=settings.LENGTH_PENALTY,
            shortlist_frequent=settings.SHORTLIST_FREQUENT,
            shortlist_translations=settings.SHORTLIST_TRANSLATIONS,
            workers=settings.WORKERS,
            int8_clip=settings.INT8_CLIP,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class TranslationResult:
    translations: List[str]
    tokens: int
    seconds: float
    counters: Dict[str, int] = field(default_factory=dict)


@dataclass
class BenchRun:
    """한 번의 벤치마크 실행 기록"""

    system: str
    size_mib: float
    regime: str
    beam: int
    batch_words: int
    shortlist: bool
    seconds: float
    tokens: int
    quality: Optional[float] = None
    counters: Dict[str, int] = field(default_factory=dict)


def count_tokens(lines: Sequence[str]) -> int:
    return sum(len(line.split()) for line in lines)


def max_length(source_length: int, factor: float) -> int:
    return max(1, math.ceil(factor * source_length))


class TranslationService(BaseService):
    """모델 하나를 들고 문장 목록 / 입력 파일을 번역"""

    def __init__(self, settings=None, tuner: Optional[TunerState] = None, **kwargs):
        super().__init__(**kwargs)
        self.settings = settings
        self.tuner = tuner if tuner is not None else TunerState()
        self.model: Optional[LoadedModel] = None

    # ------------------------------------------------------------------
    # 모델 로드
    # ------------------------------------------------------------------

    def load(self,
             model_path: Path,
             config_path: Path,
             vocab_path: Optional[Path] = None,
             lex_path: Optional[Path] = None,
             freq_path: Optional[Path] = None) -> LoadedModel:
        config = read_config(config_path)
        params = load_params(model_path)
        check_params(config, params)
        vocab = Vocab.load(vocab_path) if vocab_path else Vocab.synthetic(config.vocab_size)
        if len(vocab) != config.vocab_size:
            raise InputFormatError(f"vocabulary has {len(vocab)} tokens but the model expects {config.vocab_size}")
        lex = load_lex(lex_path, freq_path) if lex_path else None
        self.model = LoadedModel(config, params, vocab, lex, name=Path(model_path).stem)
        self._log_info(f"model loaded: {self.model.name} ({self.model.size_mib:.1f} MiB, vocab {len(vocab)})")
        return self.model

    def load_random(self, config: ModelConfig, seed: int = 0, vocab: Optional[Vocab] = None,
                    lex: Optional[LexTable] = None) -> LoadedModel:
        """학습된 가중치 없이 무작위 파라미터로 모델 구성"""
        vocab = vocab or Vocab.synthetic(config.vocab_size)
        self.model = LoadedModel(config, init_params(config, seed), vocab, lex, name=f"random-{seed}")
        self._log_info(f"random model initialised with seed {seed} ({self.model.size_mib:.1f} MiB)")
        return self.model

    def load_from_settings(self) -> Optional[LoadedModel]:
        s = self.settings
        if s is None or not s.MODEL_PATH or not s.CONFIG_PATH:
            return None
        return self.load(s.MODEL_PATH, s.CONFIG_PATH, s.VOCAB_PATH, s.LEX_PATH, s.FREQ_PATH)

    def require_model(self) -> LoadedModel:
        if self.model is None and self.load_from_settings() is None:
            raise ModelUnavailableError("no model is configured (set MODEL_PATH and CONFIG_PATH)")
        return self.model

    # ------------------------------------------------------------------
    # 디코딩
    # ------------------------------------------------------------------

    def _executor(self, model: LoadedModel, options: DecodeOptions, index: int) -> Transformer:
        return Transformer(
            model.config,
            model.params,
            regime=options.regime,
            memoize=options.memoize,
            tuner=self.tuner,
            int8_clip=options.int8_clip,
            name=f"worker-{index}",
        )

    def _decode_batch(self, executor: Transformer, model: LoadedModel, batch: Batch,
                      options: DecodeOptions) -> List[List[int]]:
        shortlist = None
        if options.use_shortlist and model.lex is not None:
            shortlist = build_shortlist(batch.sentences, model.lex, model.vocab,
                                        options.shortlist_frequent, options.shortlist_translations).ids
        encoded = executor.encode(batch.sentences)
        limits = [max_length(len(s), options.max_length_factor) for s in batch.sentences]
        if options.beam == 1:
            return greedy_decode(executor, None, encoded, shortlist, limits)
        outputs = []
        for row, limit in enumerate(limits):
            nbest = beam_search(executor, encoded.select_rows([row]), options.beam, shortlist, limit,
                                options.length_penalty)
            outputs.append(nbest[0].tokens if nbest else [])
        return outputs

    def _run_worker(self, index: int, model: LoadedModel, batches: List[Batch],
                    options: DecodeOptions) -> tuple:
        executor = self._executor(model, options, index)
        decoded: Dict[int, List[int]] = {}
        for batch in batches:
            for sentence_index, tokens in zip(batch.indices, self._decode_batch(executor, model, batch, options)):
                decoded[sentence_index] = tokens
            self._log_debug(f"worker-{index}: batch of {len(batch)} sentences / {batch.word_count} words done")
        return decoded, executor

    @staticmethod
    def _executor_counters(executor: Transformer) -> Counter:
        graph = executor.graph
        counters = Counter(graph.kernel_counters)
        counters["param-quantizations"] = sum(
            graph.node_counters[node.id]
            for node in graph.nodes.values()
            if node.is_constant and node.op in PARAM_QUANTIZE_OPS
        )
        counters["nodes"] = len(graph)
        return counters

    def translate_lines(self, lines: Sequence[str], options: DecodeOptions) -> TranslationResult:
        """문장 목록 번역; 시간은 디코딩 구간만 측정"""
        model = self.require_model()
        tokens = count_tokens(lines)
        if tokens == 0:
            raise InputFormatError("input contains no tokens")

        sources = [model.vocab.encode(line, add_eos=True) for line in lines]
        batches = make_batches(sources, options.batch_words)
        workers = max(1, min(options.workers, len(batches)))
        shares = [batches[i::workers] for i in range(workers)]

        timings: Dict[str, float] = {}
        with self._timed("decode", timings):
            if workers == 1:
                results = [self._run_worker(0, model, shares[0], options)]
            else:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    futures = [pool.submit(self._run_worker, i, model, shares[i], options) for i in range(workers)]
                    results = [f.result() for f in futures]

        decoded: Dict[int, List[int]] = {}
        counters: Counter = Counter()
        for worker_decoded, executor in results:
            decoded.update(worker_decoded)
            counters.update(self._executor_counters(executor))

        translations = [model.vocab.decode(decoded[i]) for i in range(len(lines))]
        self._log_info(
            f"translated {len(lines)} sentences ({tokens} tokens) in {len(batches)} batches, "
            f"{timings['decode']:.2f}s, regime={options.regime.value}, workers={workers}"
        )
        return TranslationResult(translations, tokens, timings["decode"], dict(counters))

    def time_translation(self,
                         input_path: Path,
                         options: DecodeOptions,
                         output_path: Optional[Path] = None,
                         system: Optional[str] = None,
                         quality: Optional[float] = None) -> BenchRun:
        """입력 파일 전체를 번역하고 BenchRun 기록 반환"""
        model = self.require_model()
        try:
            lines = Path(input_path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise InputFormatError(f"cannot read input {input_path}: {e}") from e

        result = self.translate_lines(lines, options)
        if output_path:
            Path(output_path).write_text("".join(t + "\n" for t in result.translations), encoding="utf-8")

        dump_path = getattr(self.settings, "TUNER_DUMP_PATH", None) if self.settings else None
        if dump_path and options.regime is Regime.AUTOTUNE:
            self.tuner.write_dump(dump_path)

        return BenchRun(
            system=system or model.name,
            size_mib=model.size_mib,
            regime=options.regime.value,
            beam=options.beam,
            batch_words=options.batch_words,
            shortlist=options.use_shortlist and model.lex is not None,
            seconds=result.seconds,
            tokens=result.tokens,
            quality=quality,
            counters=result.counters,
        )
