"""End-to-end orchestration: audio in, transcript + uncertainty mask out.

The chain is read -> resample -> frame probabilities -> binarize -> smooth ->
cut & merge (or uniform chunking) -> optional chunk filtering -> per-chunk
recognition on a worker pool -> transcript concatenation -> optional
uncertainty estimation.  Given scripted backends the whole run is
deterministic, independent of the worker count.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field, fields
from pathlib import Path
from statistics import mean, median

from .alignment import align, drop_script_mismatch_diffs, lm_validate, refine
from .audio import PIPELINE_SAMPLE_RATE, read_wav, resample_to, stretch
from .backends import BackendError, parse_backend
from .filtering import DEFAULT_SPEECH_LABELS, DEFAULT_SPEECH_THRESHOLD, filter_chunks
from .metrics import evaluate_transcript, uncertainty_report, word_error_targets
from .recognition import Transcription, merge_transcriptions, recognize
from .segmentation import (
    DEFAULT_MAX_CHUNK_S,
    DEFAULT_MERGE_GAP_S,
    DEFAULT_MIN_OFF_S,
    DEFAULT_MIN_ON_S,
    DEFAULT_OFFSET,
    DEFAULT_ONSET,
    Chunk,
    binarize,
    cut_and_merge,
    frame_probs,
    smooth,
    uniform_chunks,
)
from .uncertainty import (
    ensemble_masks,
    mask_from_disagreement,
    mask_from_scores,
    mask_from_tta,
    other_only_word_count,
)

CHUNKING_MODES = ("smart", "uniform")
UNCERTAINTY_MODES = ("none", "scores", "disagreement", "tta", "ensemble")

ENV_ENDPOINT_VARS = {
    "vad": "LONGSCRIBE_VAD_BACKEND",
    "ast": "LONGSCRIBE_AST_BACKEND",
    "asr": "LONGSCRIBE_ASR_BACKEND",
    "asr_extra": "LONGSCRIBE_ASR_EXTRA_BACKEND",
    "asr_tta": "LONGSCRIBE_ASR_TTA_BACKEND",
    "lm": "LONGSCRIBE_LM_BACKEND",
}


class PipelineStageError(RuntimeError):
    """A stage failed; carries the stage name so runs never fail anonymously."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    chunking: str = "smart"
    ast_filter: bool = True
    uncertainty: str = "none"
    score_threshold: float = -1.0
    stretch_up: int = 4
    stretch_down: int = 3
    workers: int = 1
    reduction: str = "min"
    max_chunk_s: float = DEFAULT_MAX_CHUNK_S
    merge_gap_s: float = DEFAULT_MERGE_GAP_S
    onset: float = DEFAULT_ONSET
    offset: float = DEFAULT_OFFSET
    min_on_s: float = DEFAULT_MIN_ON_S
    min_off_s: float = DEFAULT_MIN_OFF_S
    ast_threshold: float = DEFAULT_SPEECH_THRESHOLD
    speech_labels: tuple = tuple(sorted(DEFAULT_SPEECH_LABELS))
    lm_lookahead: int = 3
    lm_group_max: int = 4
    flag_deletes: bool = True
    tta_refine: bool = False
    endpoints: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.chunking not in CHUNKING_MODES:
            raise ValueError(f"chunking must be one of {CHUNKING_MODES}, got {self.chunking!r}")
        if self.uncertainty not in UNCERTAINTY_MODES:
            raise ValueError(
                f"uncertainty must be one of {UNCERTAINTY_MODES}, got {self.uncertainty!r}"
            )
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.stretch_up < 1 or self.stretch_down < 1:
            raise ValueError("stretch factors must be >= 1")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


@dataclass
class PipelineBackends:
    vad: object | None = None
    ast: object | None = None
    asr: object | None = None
    asr_extra: object | None = None
    asr_tta: object | None = None
    lm: object | None = None

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "PipelineBackends":
        """Instantiate backends from endpoint strings; environment wins."""
        kwargs = {}
        for role, env_var in ENV_ENDPOINT_VARS.items():
            endpoint = os.environ.get(env_var) or config.endpoints.get(role)
            if endpoint:
                parse_role = "asr" if role.startswith("asr") else role
                kwargs[role] = parse_backend(parse_role, endpoint)
        return cls(**kwargs)

    def close(self):
        for role in ("vad", "ast", "asr", "asr_extra", "asr_tta", "lm"):
            backend = getattr(self, role)
            if backend is not None and hasattr(backend, "close"):
                backend.close()


@dataclass(frozen=True)
class TimingReport:
    stage_seconds: dict
    total_seconds: float

    def __post_init__(self):
        if any(v < 0 for v in self.stage_seconds.values()) or self.total_seconds < 0:
            raise ValueError("timings cannot be negative")
        if self.stage_seconds and self.total_seconds < max(self.stage_seconds.values()) - 1e-9:
            raise ValueError("total must cover the longest stage")


@dataclass(frozen=True)
class PipelineResult:
    transcription: Transcription
    mask: object  # UncertaintyMask | None
    timing: TimingReport
    chunks: tuple
    rejected_chunks: tuple
    extra_transcription: Transcription | None = None
    other_only_words: int = 0


class _StageClock:
    def __init__(self):
        self.stage_seconds = {}
        self._t0 = time.perf_counter()

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except (BackendError, ValueError, OSError) as exc:
            raise PipelineStageError(name, exc) from exc
        finally:
            self.stage_seconds[name] = self.stage_seconds.get(name, 0.0) + (
                time.perf_counter() - start
            )

    def report(self) -> TimingReport:
        return TimingReport(dict(self.stage_seconds), time.perf_counter() - self._t0)


def _backend_guard(backend):
    """Serial backends get a per-object lock; parallel-safe ones run free."""
    if getattr(backend, "parallel_safe", True):
        return nullcontext()
    lock = getattr(backend, "_serial_lock", None)
    if lock is None:
        lock = threading.Lock()
        try:
            backend._serial_lock = lock
        except AttributeError:
            return nullcontext()
    return lock


def _recognize_chunks(buffer, chunks, backend, reduction, workers):
    guard = _backend_guard(backend)

    def work(indexed):
        i, chunk = indexed
        with guard:
            return recognize(buffer, chunk, backend, reduction, chunk_id=i)

    indexed = list(enumerate(chunks))
    if workers == 1 or len(chunks) <= 1:
        return [work(pair) for pair in indexed]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, indexed))


def run_pipeline(audio, config: PipelineConfig, backends: PipelineBackends) -> PipelineResult:
    """Transcribe one audio file (or in-memory buffer) under `config`."""
    clock = _StageClock()

    with clock.stage("read"):
        buffer = read_wav(audio) if isinstance(audio, (str, Path)) else audio
    with clock.stage("resample"):
        buffer = resample_to(buffer, PIPELINE_SAMPLE_RATE)

    with clock.stage("segmentation"):
        if config.chunking == "uniform":
            chunks = uniform_chunks(buffer.duration_s, config.max_chunk_s) if len(buffer.samples) else []
        else:
            if backends.vad is None:
                raise BackendError("smart chunking needs a vad backend (endpoint 'vad')")
            series = frame_probs(buffer, backends.vad)
            segments = smooth(
                binarize(series, config.onset, config.offset),
                config.min_on_s,
                config.min_off_s,
            )
            chunks = cut_and_merge(segments, series, config.max_chunk_s, config.merge_gap_s)

    rejected = []
    if config.ast_filter and chunks:
        with clock.stage("filter"):
            if backends.ast is None:
                raise BackendError("chunk filtering needs an ast backend (endpoint 'ast')")
            chunks, rejected = filter_chunks(
                chunks,
                buffer,
                backends.ast,
                speech_labels=frozenset(config.speech_labels),
                threshold=config.ast_threshold,
            )

    with clock.stage("recognize"):
        if backends.asr is None:
            raise BackendError("recognition needs an asr backend (endpoint 'asr')")
        parts = _recognize_chunks(buffer, chunks, backends.asr, config.reduction, config.workers)
        transcription = merge_transcriptions(parts)

    mask = None
    extra = None
    other_only = 0
    if config.uncertainty != "none":
        with clock.stage("uncertainty"):
            mask, extra, other_only = _estimate_uncertainty(
                buffer, chunks, transcription, config, backends
            )

    return PipelineResult(
        transcription=transcription,
        mask=mask,
        timing=clock.report(),
        chunks=tuple(chunks),
        rejected_chunks=tuple(rejected),
        extra_transcription=extra,
        other_only_words=other_only,
    )


def _disagreement_mask(buffer, chunks, transcription, config, backends):
    if backends.asr_extra is None:
        raise BackendError(
            "disagreement uncertainty needs an additional recognizer (endpoint 'asr_extra')"
        )
    parts = _recognize_chunks(
        buffer, chunks, backends.asr_extra, config.reduction, config.workers
    )
    extra = merge_transcriptions(parts)
    base_words = transcription.word_texts()
    other_words = extra.word_texts()
    script = align(base_words, other_words)
    script = refine(script, base_words, other_words)
    script = drop_script_mismatch_diffs(script, base_words, other_words)
    if backends.lm is not None:
        script = lm_validate(
            script,
            base_words,
            other_words,
            backends.lm,
            lookahead=config.lm_lookahead,
            lookahead_group_max=config.lm_group_max,
        )
    mask = mask_from_disagreement(script, len(base_words), flag_deletes=config.flag_deletes)
    return mask, extra, other_only_word_count(script)


def _tta_mask(buffer, chunks, transcription, config, backends):
    stretched = stretch(buffer, config.stretch_up, config.stretch_down)
    ratio = config.stretch_up / config.stretch_down
    scaled = []
    for c in chunks:
        start = c.start_s * ratio
        end = min(c.end_s * ratio, stretched.duration_s)
        if end > start:
            scaled.append(Chunk(start, end, c.source_segment_ids))
    backend = backends.asr_tta or backends.asr
    parts = _recognize_chunks(stretched, scaled, backend, config.reduction, config.workers)
    stretched_t = merge_transcriptions(parts)
    return mask_from_tta(transcription, stretched_t, refine_first=config.tta_refine), stretched_t


def _estimate_uncertainty(buffer, chunks, transcription, config, backends):
    mode = config.uncertainty
    if mode == "scores":
        return mask_from_scores(transcription, config.score_threshold), None, 0
    if mode == "disagreement":
        return _disagreement_mask(buffer, chunks, transcription, config, backends)
    if mode == "tta":
        mask, stretched_t = _tta_mask(buffer, chunks, transcription, config, backends)
        return mask, stretched_t, 0
    if mode == "ensemble":
        score_mask = mask_from_scores(transcription, config.score_threshold)
        dis_mask, extra, other_only = _disagreement_mask(
            buffer, chunks, transcription, config, backends
        )
        return ensemble_masks([score_mask, dis_mask]), extra, other_only
    raise ValueError(f"unknown uncertainty mode {mode!r}")


# ---------------------------------------------------------------------------
# Corpus evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FileEvaluation:
    audio: str
    report: object  # EvalReport
    point: object  # UncertaintyPoint | None
    total_seconds: float
    semantic_score: float | None = None


@dataclass(frozen=True)
class EvaluationResult:
    files: tuple
    mean_wer: float
    timing_max: float
    timing_average: float
    timing_median: float
    mean_semantic_score: float | None = None


def evaluate_corpus(
    items,
    config: PipelineConfig,
    backends: PipelineBackends,
    semantic_scorer=None,
) -> EvaluationResult:
    """Run the pipeline over (audio_path, ref_words) pairs and aggregate.

    Timing statistics follow the per-file totals: max, average and median.
    `semantic_scorer` is an optional external hook with
    ``similarity(ref_text, hyp_text) -> float`` (e.g. an embedding-based
    scorer); its output is recorded per file and averaged, nothing more.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to evaluate")
    results = []
    for audio_path, ref_words in items:
        outcome = run_pipeline(audio_path, config, backends)
        hyp_words = outcome.transcription.word_texts()
        report = evaluate_transcript(ref_words, hyp_words)
        point = None
        if outcome.mask is not None:
            targets = word_error_targets(ref_words, hyp_words)
            point = uncertainty_report(outcome.mask, targets)
        semantic = None
        if semantic_scorer is not None:
            semantic = float(
                semantic_scorer.similarity(" ".join(ref_words), " ".join(hyp_words))
            )
        results.append(
            FileEvaluation(
                audio=str(audio_path),
                report=report,
                point=point,
                total_seconds=outcome.timing.total_seconds,
                semantic_score=semantic,
            )
        )
    totals = [r.total_seconds for r in results]
    semantic_scores = [r.semantic_score for r in results if r.semantic_score is not None]
    return EvaluationResult(
        files=tuple(results),
        mean_wer=mean(r.report.wer for r in results),
        timing_max=max(totals),
        timing_average=mean(totals),
        timing_median=median(totals),
        mean_semantic_score=mean(semantic_scores) if semantic_scores else None,
    )
