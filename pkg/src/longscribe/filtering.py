"""Chunk-level false-positive filtering via a segment classifier backend."""

from __future__ import annotations

from dataclasses import dataclass

from .audio import AudioBuffer
from .backends import BackendError
from .segmentation import Chunk

# Audioset-style labels counted as speech; the classifier may emit any label set.
DEFAULT_SPEECH_LABELS = frozenset(
    {
        "Speech",
        "Male speech, man speaking",
        "Female speech, woman speaking",
        "Narration, monologue",
    }
)
DEFAULT_SPEECH_THRESHOLD = 0.3


@dataclass(frozen=True)
class SegmentLabelScores:
    """Classifier scores per label, each in [0, 1]."""

    scores: dict

    def __post_init__(self):
        if not self.scores:
            raise ValueError("at least one label is required")
        for label, value in self.scores.items():
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"score for {label!r} outside [0, 1]: {value}")
        object.__setattr__(self, "scores", dict(self.scores))

    def best_speech_score(self, speech_labels) -> float:
        return max((self.scores.get(label, 0.0) for label in speech_labels), default=0.0)


def classify_chunk(buffer: AudioBuffer, chunk: Chunk, backend) -> SegmentLabelScores:
    """Classify the chunk's slice of audio, validating the backend's answer."""
    if chunk.start_s < 0 or chunk.end_s > buffer.duration_s + 1e-6:
        raise ValueError(f"chunk ({chunk.start_s}, {chunk.end_s}) outside the buffer span")
    piece = buffer.slice_seconds(chunk.start_s, chunk.end_s)
    try:
        raw = backend.classify_segment(piece, chunk.start_s, chunk.end_s)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"segment classifier {type(backend).__name__} failed: {exc}") from exc
    return SegmentLabelScores(raw)


def filter_chunks(
    chunks,
    buffer: AudioBuffer,
    backend,
    speech_labels=DEFAULT_SPEECH_LABELS,
    threshold: float = DEFAULT_SPEECH_THRESHOLD,
):
    """Split chunks into (kept, rejected) by their best speech-label score.

    A chunk is kept iff max over speech_labels of its score >= threshold.
    Input order is preserved on both sides.
    """
    if not speech_labels:
        raise ValueError("speech_labels must not be empty")
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    kept, rejected = [], []
    for chunk in chunks:
        scores = classify_chunk(buffer, chunk, backend)
        if scores.best_speech_score(speech_labels) >= threshold:
            kept.append(chunk)
        else:
            rejected.append(chunk)
    return kept, rejected
