"""Speech segmentation: frame probabilities -> segments -> recognition chunks.

The frame classifier backend supplies a per-frame speech probability;
hysteresis binarization, smoothing and a cut-&-merge pass turn it into
chunks short enough for a recognizer while never dropping covered speech.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .audio import AudioBuffer
from .backends import BackendError, frame_count

DEFAULT_ONSET = 0.5
DEFAULT_OFFSET = 0.35
DEFAULT_MIN_ON_S = 0.25
DEFAULT_MIN_OFF_S = 0.2
DEFAULT_MAX_CHUNK_S = 30.0
DEFAULT_MERGE_GAP_S = 1.0


@dataclass(frozen=True)
class FrameProbSeries:
    """Per-frame speech probabilities at a fixed hop."""

    probs: np.ndarray
    frame_hop_s: float

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if self.frame_hop_s <= 0:
            raise ValueError(f"frame_hop_s must be positive, got {self.frame_hop_s}")
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError("probabilities outside [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def duration_s(self) -> float:
        return len(self.probs) * self.frame_hop_s


@dataclass(frozen=True)
class SpeechSegment:
    start_s: float
    end_s: float

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise ValueError(f"bad segment bounds ({self.start_s}, {self.end_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Chunk:
    start_s: float
    end_s: float
    source_segment_ids: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError(f"bad chunk bounds ({self.start_s}, {self.end_s})")
        object.__setattr__(self, "source_segment_ids", tuple(self.source_segment_ids))

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def binarize(series: FrameProbSeries, onset: float = DEFAULT_ONSET, offset: float = DEFAULT_OFFSET):
    """Hysteresis thresholding of a probability series into speech segments.

    A segment opens at the first frame with prob >= onset and closes at the
    first later frame with prob < offset; boundaries land on frame edges.
    """
    if not (0 < offset <= onset < 1):
        raise ValueError(f"need 0 < offset <= onset < 1, got onset={onset} offset={offset}")
    if len(series.probs) == 0:
        return []
    starts, ends = _kernels.hysteresis_bounds(series.probs, onset, offset)
    hop = series.frame_hop_s
    return [SpeechSegment(int(s) * hop, int(e) * hop) for s, e in zip(starts, ends)]


def smooth(segments, min_on_s: float = DEFAULT_MIN_ON_S, min_off_s: float = DEFAULT_MIN_OFF_S):
    """Fill sub-threshold gaps, then drop sub-threshold segments, in that order."""
    if min_on_s < 0 or min_off_s < 0:
        raise ValueError("minimum durations must be non-negative")
    _check_sorted_disjoint(segments)
    if not segments:
        return []
    merged = [segments[0]]
    for seg in segments[1:]:
        if seg.start_s - merged[-1].end_s < min_off_s:
            merged[-1] = SpeechSegment(merged[-1].start_s, seg.end_s)
        else:
            merged.append(seg)
    return [seg for seg in merged if seg.duration_s >= min_on_s]


def cut_and_merge(
    segments,
    series: FrameProbSeries,
    max_chunk_s: float = DEFAULT_MAX_CHUNK_S,
    merge_gap_s: float = DEFAULT_MERGE_GAP_S,
):
    """Cut over-long segments at low-probability frames, then merge short neighbors.

    Cuts are chosen inside the central 50% of the over-long segment (never
    creating slivers) at the frame of minimum speech probability, recursively
    until every piece fits; a degenerate cut window falls back to the
    midpoint.  Adjacent pieces merge when their gap is at most merge_gap_s
    and the merged span still fits max_chunk_s.
    """
    if max_chunk_s <= 0:
        raise ValueError("max_chunk_s must be positive")
    _check_sorted_disjoint(segments)
    span = series.duration_s
    for seg in segments:
        if seg.end_s > span + series.frame_hop_s:
            raise ValueError(f"segment ({seg.start_s}, {seg.end_s}) outside the {span:.3f}s series")

    pieces = []  # (start_s, end_s, source_segment_id)
    for sid, seg in enumerate(segments):
        stack = [(seg.start_s, seg.end_s)]
        while stack:
            lo, hi = stack.pop()
            if hi - lo <= max_chunk_s:
                pieces.append((lo, hi, sid))
                continue
            cut = _cut_time(lo, hi, series)
            stack.append((cut, hi))
            stack.append((lo, cut))

    chunks = []
    for lo, hi, sid in pieces:
        if chunks:
            last = chunks[-1]
            if lo - last.end_s <= merge_gap_s and hi - last.start_s <= max_chunk_s:
                chunks[-1] = Chunk(
                    last.start_s,
                    hi,
                    last.source_segment_ids + ((sid,) if sid not in last.source_segment_ids else ()),
                )
                continue
        chunks.append(Chunk(lo, hi, (sid,)))
    return chunks


def _cut_time(lo: float, hi: float, series: FrameProbSeries) -> float:
    hop = series.frame_hop_s
    length = hi - lo
    win_lo = lo + 0.25 * length
    win_hi = lo + 0.75 * length
    i_lo = max(int(math.ceil(win_lo / hop - 1e-9)), int(math.floor(lo / hop + 1e-9)) + 1)
    i_hi = min(int(math.floor(win_hi / hop + 1e-9)), int(math.ceil(hi / hop - 1e-9)) - 1)
    i_hi = min(i_hi, len(series.probs) - 1)
    if i_lo > i_hi:
        return (lo + hi) / 2.0
    window = series.probs[i_lo : i_hi + 1]
    return (i_lo + int(np.argmin(window))) * hop


def uniform_chunks(total_duration_s: float, chunk_s: float = DEFAULT_MAX_CHUNK_S):
    """Back-to-back fixed-size chunks partitioning [0, total_duration_s]."""
    if total_duration_s <= 0:
        raise ValueError(f"duration must be positive, got {total_duration_s}")
    if chunk_s <= 0:
        raise ValueError(f"chunk size must be positive, got {chunk_s}")
    n = int(math.ceil(total_duration_s / chunk_s - 1e-9))
    return [
        Chunk(i * chunk_s, min((i + 1) * chunk_s, total_duration_s)) for i in range(n)
    ]


def frame_probs(buffer: AudioBuffer, backend) -> FrameProbSeries:
    """Run the frame classifier and validate its output shape and range."""
    try:
        probs = backend.classify_frames(buffer)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"frame classifier {type(backend).__name__} failed: {exc}") from exc
    hop = backend.frame_hop_s
    probs = np.asarray(probs, dtype=np.float64)
    expected = frame_count(len(buffer.samples), buffer.sample_rate, hop)
    if len(probs) != expected:
        raise BackendError(
            f"frame classifier returned {len(probs)} probabilities for "
            f"{buffer.duration_s:.3f}s of audio at hop {hop}s (expected {expected})"
        )
    return FrameProbSeries(probs, hop)


def _check_sorted_disjoint(segments):
    for prev, cur in zip(segments, segments[1:]):
        if cur.start_s < prev.end_s:
            raise ValueError(
                f"segments must be sorted and disjoint; ({prev.start_s}, {prev.end_s}) "
                f"overlaps ({cur.start_s}, {cur.end_s})"
            )
